//! Command-line surface for the qboson verification toolkit.
//!
//! Subcommands:
//! - `eval h|psi|E` evaluates an eigenfunction at one point and prints JSON,
//! - `verify --suite NAME` runs a named identity suite at seeded random
//!   admissible points and prints a machine-readable report,
//! - `generator-check` asserts the backward-generator eigenrelation on
//!   explicit or sampled configurations,
//! - `apply` applies an operator word in the documented mini-language to a
//!   ket.
//!
//! Exit codes: 0 success, 1 identity failure, 2 invalid parameters or
//! flags, 3 computation error. JSON goes to stdout, diagnostics to stderr.

use std::process::ExitCode;

use qboson::fock::{eigenfunction_e, parse_operator_word, psi, SparseKet};
use qboson::hecke::eigenfunction_h;
use qboson::process::{Configuration, SpeciesCounts};
use qboson::report::{Failure, Report};
use qboson::rng::SeededRng;
use qboson::scalars::{Rational, SpectralParams};
use qboson::suites::{
    check_generator_for_e, check_generator_for_h, enforce_guards, par_map, run_suite,
    sample_configuration, Suite, SuiteConfig,
};
use qboson::Error;

const USAGE: &str = r#"qboson - exact verification toolkit for the multi-species q-Boson system

USAGE:
    qboson eval <h|psi|E> --r R --q n/d --z z1,z2,.. --mu m1,m2,.. --x x1,x2,..
                [--nu n1,n2,..] [--counts k1,k2,..] [--output PATH] [--unsafe]
    qboson verify --suite NAME [--r R] [--counts k1,..] [--cases N] [--seed S]
                [--output PATH] [--unsafe]
    qboson generator-check --r R --counts k1,.. --q n/d --z z1,..
                [--x x1,.. --nu n1,..] [--mu m1,..] [--cases N] [--seed S]
                [--output PATH] [--unsafe]
    qboson apply --r R --op "WORD" (--ket JSON | --vacuum) --q n/d [--output PATH]

Suites: hecke process boson ybe transfer recurrence main all
Rationals are written n/d (sign on the numerator, /1 omitted).
Operator words: factors joined by '.', e.g. "C[1,3;a=2](5/2) . bstar[a=1,i=2]";
see the README for the full grammar. QBOSON_THREADS caps suite parallelism.
"#;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help" {
        print!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    let outcome = match args[0].as_str() {
        "eval" => cmd_eval(&args[1..]),
        "verify" => cmd_verify(&args[1..]),
        "generator-check" => cmd_generator_check(&args[1..]),
        "apply" => cmd_apply(&args[1..]),
        other => Err(CliError::Flags(format!("unknown command {other:?}"))),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[derive(Debug)]
enum CliError {
    /// Bad flags or inadmissible parameters (exit 2).
    Flags(String),
    /// Computation failure (exit 3).
    Compute(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Flags(m) | CliError::Compute(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Flags(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Param(_) | Error::Parse(_) => CliError::Flags(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

/// Minimal flag parser: `--name value` pairs plus boolean switches.
struct Flags {
    pairs: Vec<(String, String)>,
    switches: Vec<String>,
}

impl Flags {
    fn parse(args: &[String], switch_names: &[&str]) -> Result<Flags, CliError> {
        let mut pairs = Vec::new();
        let mut switches = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let name = arg
                .strip_prefix("--")
                .ok_or_else(|| CliError::Flags(format!("unexpected argument {arg:?}")))?;
            if switch_names.contains(&name) {
                switches.push(name.to_string());
                i += 1;
            } else {
                let value = args
                    .get(i + 1)
                    .ok_or_else(|| CliError::Flags(format!("--{name} needs a value")))?;
                pairs.push((name.to_string(), value.clone()));
                i += 2;
            }
        }
        Ok(Flags { pairs, switches })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_str())
    }

    fn require(&self, name: &str) -> Result<&str, CliError> {
        self.get(name)
            .ok_or_else(|| CliError::Flags(format!("missing required flag --{name}")))
    }

    fn has(&self, name: &str) -> bool {
        self.switches.iter().any(|s| s == name)
    }
}

fn parse_u8(flags: &Flags, name: &str) -> Result<u8, CliError> {
    flags
        .require(name)?
        .parse::<u8>()
        .map_err(|_| CliError::Flags(format!("--{name} must be a small positive integer")))
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(|p| p.trim().parse::<T>())
        .collect::<Result<Vec<T>, _>>()
        .map_err(|_| CliError::Flags(format!("could not parse {what} list {raw:?}")))
}

fn parse_rationals(raw: &str) -> Result<Vec<Rational>, CliError> {
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse::<Rational>()
                .map_err(|e| CliError::Flags(e.to_string()))
        })
        .collect()
}

fn emit(output: Option<&str>, body: &str) -> Result<(), CliError> {
    println!("{body}");
    if let Some(path) = output {
        std::fs::write(path, format!("{body}\n"))
            .map_err(|e| CliError::Compute(format!("cannot write {path}: {e}")))?;
    }
    Ok(())
}

fn parsed_params(flags: &Flags) -> Result<SpectralParams, CliError> {
    let q: Rational = flags
        .require("q")?
        .parse()
        .map_err(|e: Error| CliError::Flags(e.to_string()))?;
    let z = parse_rationals(flags.require("z")?)?;
    SpectralParams::new(q, z).map_err(CliError::from)
}

fn cmd_eval(args: &[String]) -> Result<ExitCode, CliError> {
    if args.is_empty() {
        return Err(CliError::Flags("eval needs a kind: h, psi or E".into()));
    }
    let kind = args[0].as_str();
    let flags = Flags::parse(&args[1..], &["unsafe"])?;
    let r = parse_u8(&flags, "r")?;
    let params = parsed_params(&flags)?;
    let mu: Vec<u8> = parse_list(flags.require("mu")?, "color")?;
    let x: Vec<i64> = parse_list(flags.require("x")?, "position")?;
    enforce_guards(params.k(), None, flags.has("unsafe"))?;
    if let Some(counts_raw) = flags.get("counts") {
        let counts: Vec<usize> = parse_list(counts_raw, "count")?;
        let expected = SpeciesCounts::new(counts).map_err(CliError::from)?;
        let actual = SpeciesCounts::of_word(&mu, r).map_err(CliError::from)?;
        if expected != actual {
            return Err(CliError::Flags(format!(
                "--mu {mu:?} does not realize --counts {:?}",
                expected.counts()
            )));
        }
    }
    let output = flags.get("output");
    match kind {
        "h" => {
            let v = eigenfunction_h(&params, &mu, &x, r)?;
            emit(output, &serde_json::to_string_pretty(&v).unwrap())?;
        }
        "psi" => {
            let v = psi(&params, &mu, &x, r)?;
            emit(output, &serde_json::to_string_pretty(&v).unwrap())?;
        }
        "E" | "e" => {
            let nu: Vec<u8> = match flags.get("nu") {
                Some(raw) => parse_list(raw, "color")?,
                None => {
                    // default: the multiset of mu sorted ascending, canonical
                    // for any descending x
                    let mut nu = mu.clone();
                    nu.sort_unstable();
                    nu
                }
            };
            let value = eigenfunction_e(&params, &mu, &x, &nu)?;
            emit(output, &serde_json::to_string(&value).unwrap())?;
        }
        other => return Err(CliError::Flags(format!("unknown eval kind {other:?}"))),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &[String]) -> Result<ExitCode, CliError> {
    let flags = Flags::parse(args, &["unsafe"])?;
    let suite: Suite = flags
        .require("suite")?
        .parse()
        .map_err(|e: Error| CliError::Flags(e.to_string()))?;
    let r = flags
        .get("r")
        .map(|v| {
            v.parse::<u8>()
                .map_err(|_| CliError::Flags("--r must be a small positive integer".into()))
        })
        .transpose()?
        .unwrap_or(2);
    if r == 0 {
        return Err(CliError::Flags("--r must be at least 1".into()));
    }
    let counts = flags
        .get("counts")
        .map(|raw| parse_list::<usize>(raw, "count"))
        .transpose()?;
    let cases = flags
        .get("cases")
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| CliError::Flags("--cases must be a non-negative integer".into()))
        })
        .transpose()?
        .unwrap_or(5);
    let seed = flags
        .get("seed")
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| CliError::Flags("--seed must be a non-negative integer".into()))
        })
        .transpose()?
        .unwrap_or(0);
    let cfg = SuiteConfig::new(r, counts, cases, seed).map_err(CliError::from)?;
    let k: usize = cfg.counts.iter().sum();
    // the transfer suite materializes a length-3 periodic sector
    let sector_dim = match suite {
        Suite::Transfer | Suite::All => {
            Some(qboson::integrability::PeriodicSector::dimension(3, &cfg.counts))
        }
        _ => None,
    };
    enforce_guards(k.max(2), sector_dim, flags.has("unsafe"))?;
    let report = run_suite(suite, &cfg).map_err(CliError::from)?;
    emit(flags.get("output"), &report.to_json())?;
    if report.ok() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_generator_check(args: &[String]) -> Result<ExitCode, CliError> {
    let flags = Flags::parse(args, &["unsafe"])?;
    let r = parse_u8(&flags, "r")?;
    let counts: Vec<usize> = parse_list(flags.require("counts")?, "count")?;
    let counts = SpeciesCounts::new(counts).map_err(CliError::from)?;
    if counts.r() != r {
        return Err(CliError::Flags(format!(
            "{} counts given for r = {r}",
            counts.counts().len()
        )));
    }
    let params = parsed_params(&flags)?;
    if params.k() != counts.k() {
        return Err(CliError::Flags(format!(
            "{} spectral parameters for k = {}",
            params.k(),
            counts.k()
        )));
    }
    enforce_guards(counts.k(), None, flags.has("unsafe"))?;
    let seed = flags
        .get("seed")
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| CliError::Flags("--seed must be a non-negative integer".into()))
        })
        .transpose()?
        .unwrap_or(0);
    let mu: Vec<u8> = match flags.get("mu") {
        Some(raw) => {
            let mu = parse_list(raw, "color")?;
            let actual = SpeciesCounts::of_word(&mu, r).map_err(CliError::from)?;
            if actual != counts {
                return Err(CliError::Flags(format!(
                    "--mu {mu:?} does not realize counts {:?}",
                    counts.counts()
                )));
            }
            mu
        }
        None => counts.descending_word(),
    };

    // explicit configuration, or sampled ones
    let configs: Vec<Configuration> = match (flags.get("x"), flags.get("nu")) {
        (Some(x_raw), Some(nu_raw)) => {
            let x: Vec<i64> = parse_list(x_raw, "position")?;
            let nu: Vec<u8> = parse_list(nu_raw, "color")?;
            vec![Configuration::new(x, nu).map_err(CliError::from)?]
        }
        (None, None) => {
            let cases = flags
                .get("cases")
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| CliError::Flags("--cases must be an integer".into()))
                })
                .transpose()?
                .unwrap_or(5);
            let mut rng = SeededRng::new(seed);
            (0..cases)
                .map(|_| sample_configuration(&mut rng, &counts, -2, 3))
                .collect::<Result<_, _>>()
                .map_err(CliError::from)?
        }
        _ => {
            return Err(CliError::Flags(
                "--x and --nu must be given together (or both omitted to sample)".into(),
            ))
        }
    };

    let echo = serde_json::json!({
        "r": r,
        "counts": counts.counts(),
        "q": params.q.to_string(),
        "z": params.z.iter().map(|z| z.to_string()).collect::<Vec<_>>(),
        "mu": mu,
        "seed": seed,
    });
    let mut report = Report::new("generator", echo);
    let start = std::time::Instant::now();
    let outcomes = par_map(configs.len(), |i| {
        let config = &configs[i];
        let run = || -> Result<(), Error> {
            check_generator_for_h(&params, &mu, r, config)?;
            check_generator_for_e(&params, &mu, r, config)
        };
        run().err().map(|e| Failure::from_error(i, e))
    });
    report.absorb(outcomes);
    report.wall_ms = start.elapsed().as_millis();
    emit(flags.get("output"), &report.to_json())?;
    if report.ok() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_apply(args: &[String]) -> Result<ExitCode, CliError> {
    let flags = Flags::parse(args, &["vacuum"])?;
    let r = parse_u8(&flags, "r")?;
    if r == 0 {
        return Err(CliError::Flags("--r must be at least 1".into()));
    }
    let q: Rational = flags
        .require("q")?
        .parse()
        .map_err(|e: Error| CliError::Flags(e.to_string()))?;
    let word = parse_operator_word(flags.require("op")?).map_err(CliError::from)?;
    let ket = if flags.has("vacuum") {
        SparseKet::vacuum(r)
    } else {
        let raw = flags
            .get("ket")
            .ok_or_else(|| CliError::Flags("provide --ket JSON or --vacuum".into()))?;
        SparseKet::from_json(r, raw).map_err(CliError::from)?
    };
    let result = word.apply(&q, &ket).map_err(CliError::from)?;
    emit(
        flags.get("output"),
        &serde_json::to_string_pretty(&result).unwrap(),
    )?;
    Ok(ExitCode::SUCCESS)
}
