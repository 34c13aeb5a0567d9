//! Named verification suites over seeded random admissible points.
//!
//! Every suite runs `cases` independent bundles of exact identity checks,
//! each bundle drawing its own parameters from a per-case seed derived
//! deterministically from the configured seed. Cases may run in parallel
//! (capped by the `QBOSON_THREADS` environment variable); reports are
//! aggregated in case order, so outputs are reproducible regardless of
//! scheduling.

use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::fock::{
    self, eigenfunction_e, interval_weight, matrix_element, psi, standard_probes, OperatorExpr,
    OperatorWord, Primitive, SparseKet,
};
use crate::hecke::{
    apply_r, apply_y, bcps_closed_form, eigenfunction_h, phi_apply, phi_apply_along_word,
    recurrence_check_h, Permutation, TensorVector,
};
use crate::integrability::{
    check_h1_vs_rates, check_interpolation_consistency, check_rcheck_invertible,
    check_transfer_commute, check_ybe, check_ybe_monodromy, transfer_coefficients, Matrix,
    PeriodicSector,
};
use crate::process::{
    apply_generator, extract_component, Configuration, SpeciesCounts,
};
use crate::recursion::extraction_terms;
use crate::report::{Failure, Report};
use crate::rng::SeededRng;
use crate::scalars::{f_factor, g_factor, Rational, SpectralParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Hecke,
    Process,
    Boson,
    Ybe,
    Transfer,
    Recurrence,
    Main,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 8] = [
        "hecke",
        "process",
        "boson",
        "ybe",
        "transfer",
        "recurrence",
        "main",
        "all",
    ];
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hecke" => Ok(Suite::Hecke),
            "process" => Ok(Suite::Process),
            "boson" => Ok(Suite::Boson),
            "ybe" => Ok(Suite::Ybe),
            "transfer" => Ok(Suite::Transfer),
            "recurrence" => Ok(Suite::Recurrence),
            "main" => Ok(Suite::Main),
            "all" => Ok(Suite::All),
            other => Err(Error::Parse(format!(
                "unknown suite {other:?}; expected one of {:?}",
                Suite::NAMES
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub r: u8,
    pub counts: Vec<usize>,
    pub cases: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(r: u8, counts: Option<Vec<usize>>, cases: usize, seed: u64) -> Result<Self> {
        let counts = match counts {
            Some(c) => {
                if c.len() != r as usize {
                    return Err(Error::Param(format!(
                        "{} counts given for r = {r}",
                        c.len()
                    )));
                }
                c
            }
            None => vec![1; r as usize],
        };
        Ok(SuiteConfig {
            r,
            counts,
            cases,
            seed,
        })
    }

    fn case_rng(&self, case: usize) -> SeededRng {
        SeededRng::new(
            self.seed
                .wrapping_add((case as u64).wrapping_mul(0x9e3779b97f4a7c15)),
        )
    }

    fn species(&self) -> Result<SpeciesCounts> {
        SpeciesCounts::new(self.counts.clone())
    }
}

/// Worker cap honoured by suite runs: `QBOSON_THREADS` if set, otherwise
/// the available parallelism.
pub fn thread_cap() -> usize {
    std::env::var("QBOSON_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Deterministic parallel map: results are collected by index, so the
/// output is independent of scheduling.
pub fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread_cap().min(n.max(1));
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for w in 0..workers {
            let f = &f;
            let slots = &slots;
            scope.spawn(move || {
                let mut i = w;
                let mut local = Vec::new();
                while i < n {
                    local.push((i, f(i)));
                    i += workers;
                }
                let mut guard = slots.lock().unwrap();
                for (i, v) in local {
                    guard[i] = Some(v);
                }
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("every index filled"))
        .collect()
}

/// Runs one named suite and aggregates the report.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Report> {
    cfg.species()?;
    let name = match suite {
        Suite::Hecke => "hecke",
        Suite::Process => "process",
        Suite::Boson => "boson",
        Suite::Ybe => "ybe",
        Suite::Transfer => "transfer",
        Suite::Recurrence => "recurrence",
        Suite::Main => "main",
        Suite::All => "all",
    };
    let mut params = serde_json::json!({
        "r": cfg.r,
        "counts": cfg.counts,
        "cases": cfg.cases,
        "seed": cfg.seed,
    });
    if matches!(suite, Suite::Boson | Suite::All) {
        params["probes"] =
            "basis occupations with at most 3 particles plus 5 seeded sparse combinations".into();
    }
    let mut report = Report::new(name, params);
    let start = Instant::now();
    let outcomes = par_map(cfg.cases, |case| {
        let mut rng = cfg.case_rng(case);
        let run = |rng: &mut SeededRng| -> Result<()> {
            match suite {
                Suite::Hecke => hecke_case(rng, cfg),
                Suite::Process => process_case(rng, cfg),
                Suite::Boson => boson_case(rng, cfg),
                Suite::Ybe => ybe_case(rng, cfg),
                Suite::Transfer => transfer_case(rng, cfg),
                Suite::Recurrence => recurrence_case(rng, cfg),
                Suite::Main => main_case(rng, cfg),
                Suite::All => {
                    hecke_case(rng, cfg)?;
                    process_case(rng, cfg)?;
                    boson_case(rng, cfg)?;
                    ybe_case(rng, cfg)?;
                    transfer_case(rng, cfg)?;
                    recurrence_case(rng, cfg)?;
                    main_case(rng, cfg)
                }
            }
        };
        run(&mut rng).err().map(|e| Failure::from_error(case, e))
    });
    report.absorb(outcomes);
    report.wall_ms = start.elapsed().as_millis();
    Ok(report)
}

fn fail(identity: &str, inputs: String, lhs: String, rhs: String) -> Error {
    Error::IdentityFailed {
        identity: identity.to_string(),
        inputs,
        lhs,
        rhs,
    }
}

fn expect_tensor_eq(identity: &str, inputs: String, lhs: &TensorVector, rhs: &TensorVector) -> Result<()> {
    if let Some((word, a, b)) = lhs.first_difference(rhs) {
        return Err(fail(
            identity,
            format!("{inputs}, component {word:?}"),
            a.to_string(),
            b.to_string(),
        ));
    }
    Ok(())
}

fn expect_scalar_eq(identity: &str, inputs: String, lhs: &Rational, rhs: &Rational) -> Result<()> {
    if lhs != rhs {
        return Err(fail(identity, inputs, lhs.to_string(), rhs.to_string()));
    }
    Ok(())
}

fn random_tensor(rng: &mut SeededRng, k: usize, r: u8) -> TensorVector {
    let mut v = TensorVector::zero(k, r);
    for _ in 0..4 {
        let word: Vec<u8> = (0..k).map(|_| rng.range_i64(1, r as i64) as u8).collect();
        let c = Rational::new(rng.range_i64(-9, 9), rng.range_i64(1, 7)).unwrap();
        v.insert_add(word, c);
    }
    v
}

/// A random canonical configuration with the given counts, positions in
/// `[lo, hi]`.
pub fn sample_configuration(
    rng: &mut SeededRng,
    counts: &SpeciesCounts,
    lo: i64,
    hi: i64,
) -> Result<Configuration> {
    let mut colors: Vec<u8> = Vec::new();
    for a in 1..=counts.r() {
        colors.extend(std::iter::repeat_n(a, counts.count_of(a)));
    }
    // Fisher-Yates
    for i in (1..colors.len()).rev() {
        let j = rng.below((i + 1) as u64) as usize;
        colors.swap(i, j);
    }
    let pairs: Vec<(i64, u8)> = colors
        .into_iter()
        .map(|c| (rng.range_i64(lo, hi), c))
        .collect();
    Configuration::canonicalize(pairs)
}

/// Eigenfunction check for `phi^{-1} h`: the generator applied to the
/// realized function equals `sum_i 1/z_i` times its value, at one state.
pub fn check_generator_for_h(
    params: &SpectralParams,
    mu: &[u8],
    r: u8,
    config: &Configuration,
) -> Result<()> {
    let mut eigenvalue = Rational::zero();
    for z in &params.z {
        eigenvalue += &z.recip()?;
    }
    let value = |cfg: &Configuration| -> Result<Rational> {
        let h = eigenfunction_h(params, mu, &cfg.x, r)?;
        extract_component(&params.q, &h, &cfg.nu)
    };
    let lhs = apply_generator(&params.q, config, r, value)?;
    let rhs = eigenvalue * value(config)?;
    expect_scalar_eq(
        "generator eigenfunction (h)",
        format!(
            "mu = {mu:?}, q = {}, z = {:?}, x = {:?}, nu = {:?}",
            params.q, params.z, config.x, config.nu
        ),
        &lhs,
        &rhs,
    )
}

/// Eigenfunction check for the boson-side scalar function `E`.
pub fn check_generator_for_e(
    params: &SpectralParams,
    mu: &[u8],
    r: u8,
    config: &Configuration,
) -> Result<()> {
    let mut eigenvalue = Rational::zero();
    for z in &params.z {
        eigenvalue += &z.recip()?;
    }
    let value =
        |cfg: &Configuration| -> Result<Rational> { eigenfunction_e(params, mu, &cfg.x, &cfg.nu) };
    let lhs = apply_generator(&params.q, config, r, value)?;
    let rhs = eigenvalue * value(config)?;
    expect_scalar_eq(
        "generator eigenfunction (E)",
        format!(
            "mu = {mu:?}, q = {}, z = {:?}, x = {:?}, nu = {:?}",
            params.q, params.z, config.x, config.nu
        ),
        &lhs,
        &rhs,
    )
}

/// Shift invariance `F(x + c) = prod_i (z_i/(1+z_i))^c F(x)` for a
/// tensor-valued eigenfunction evaluator.
pub fn check_shift_invariance<F>(
    params: &SpectralParams,
    mu: &[u8],
    x: &[i64],
    c: i64,
    label: &str,
    mut f: F,
) -> Result<()>
where
    F: FnMut(&SpectralParams, &[u8], &[i64]) -> Result<TensorVector>,
{
    let base = f(params, mu, x)?;
    let shifted: Vec<i64> = x.iter().map(|v| v + c).collect();
    let got = f(params, mu, &shifted)?;
    let mut factor = Rational::one();
    for z in &params.z {
        factor *= &(z.clone() / &(Rational::one() + z)).pow(c)?;
    }
    expect_tensor_eq(
        &format!("shift invariance ({label})"),
        format!("mu = {mu:?}, x = {x:?}, c = {c}, q = {}, z = {:?}", params.q, params.z),
        &got,
        &base.scaled(&factor),
    )
}

/// The two exchange-symmetry conditions at every adjacent pair, for a
/// tensor-valued eigenfunction evaluator: invariance under `z_i <-> z_{i+1}`
/// on equal colors, and the `q F = f F' - g F''` relation on unequal ones.
pub fn check_symmetry<F>(
    params: &SpectralParams,
    mu: &[u8],
    x: &[i64],
    label: &str,
    mut f: F,
) -> Result<()>
where
    F: FnMut(&SpectralParams, &[u8], &[i64]) -> Result<TensorVector>,
{
    let k = mu.len();
    for i in 0..k - 1 {
        let mut z_swapped = params.z.clone();
        z_swapped.swap(i, i + 1);
        let params_swapped = SpectralParams {
            q: params.q.clone(),
            z: z_swapped,
        };
        if mu[i] == mu[i + 1] {
            let a = f(params, mu, x)?;
            let b = f(&params_swapped, mu, x)?;
            expect_tensor_eq(
                &format!("symmetry (1) ({label})"),
                format!("mu = {mu:?}, i = {}, q = {}, z = {:?}", i + 1, params.q, params.z),
                &a,
                &b,
            )?;
        } else {
            // orient so the smaller color comes first
            let (lo_word, hi_word) = if mu[i] < mu[i + 1] {
                let mut swapped = mu.to_vec();
                swapped.swap(i, i + 1);
                (mu.to_vec(), swapped)
            } else {
                let mut swapped = mu.to_vec();
                swapped.swap(i, i + 1);
                (swapped, mu.to_vec())
            };
            let zi = &params.z[i];
            let zj = &params.z[i + 1];
            let lhs = f(params, &lo_word, x)?.scaled(&params.q);
            let mut rhs = f(&params_swapped, &hi_word, x)?.scaled(&f_factor(&params.q, zi, zj)?);
            let second = f(params, &hi_word, x)?;
            rhs.add_scaled(&second, &-g_factor(&params.q, zj, zi)?);
            expect_tensor_eq(
                &format!("symmetry (2) ({label})"),
                format!("mu = {mu:?}, i = {}, q = {}, z = {:?}", i + 1, params.q, params.z),
                &lhs,
                &rhs,
            )?;
        }
    }
    Ok(())
}

/// The interval-weighted bracket of Prop-5.1 type, for stabilization checks.
pub fn weighted_bracket(
    params: &SpectralParams,
    mu: &[u8],
    nu: &[u8],
    x: &[i64],
    lo: i64,
    hi: i64,
) -> Result<Rational> {
    Ok(interval_weight(&params.z, lo, hi)?
        * matrix_element(&params.q, mu, &params.z, nu, x, lo, hi)?)
}

/// Stabilization: widening the minimal interval `[x_k, x_1]` by
/// `(left, right)` leaves the weighted bracket unchanged.
pub fn check_stabilization(
    params: &SpectralParams,
    mu: &[u8],
    nu: &[u8],
    x: &[i64],
    widenings: &[(i64, i64)],
) -> Result<()> {
    let k = x.len();
    let (lo, hi) = (x[k - 1], x[0]);
    let base = weighted_bracket(params, mu, nu, x, lo, hi)?;
    for &(dl, dr) in widenings {
        let wider = weighted_bracket(params, mu, nu, x, lo - dl, hi + dr)?;
        expect_scalar_eq(
            "stabilization",
            format!(
                "mu = {mu:?}, nu = {nu:?}, x = {x:?}, interval [{}, {}], q = {}, z = {:?}",
                lo - dl,
                hi + dr,
                params.q,
                params.z
            ),
            &wider,
            &base,
        )?;
    }
    Ok(())
}

fn descending_positions(rng: &mut SeededRng, k: usize, lo: i64, hi: i64) -> Vec<i64> {
    let mut x: Vec<i64> = (0..k).map(|_| rng.range_i64(lo, hi)).collect();
    x.sort_unstable_by(|a, b| b.cmp(a));
    x
}

// ---------------------------------------------------------------------------
// Suite case bodies
// ---------------------------------------------------------------------------

fn hecke_case(rng: &mut SeededRng, cfg: &SuiteConfig) -> Result<()> {
    let counts = cfg.species()?;
    let k = counts.k().clamp(2, 5);
    let r = cfg.r.max(2);
    let p = rng.sample_params(k);
    let v = random_tensor(rng, k, r);
    let q2 = p.q_squared();

    for i in 1..k {
        let rv = apply_r(&p.q, i, &v)?;
        let quad = apply_r(&p.q, i, &rv)?
            .add(&rv.scaled(&(&q2 - &Rational::one())))
            .sub(&v.scaled(&q2));
        if !quad.is_zero() {
            return Err(fail(
                "Hecke quadratic relation",
                format!("i = {i}, q = {}", p.q),
                quad.to_string(),
                "0".into(),
            ));
        }
    }
    for i in 1..k.saturating_sub(1) {
        let a = apply_r(&p.q, i, &apply_r(&p.q, i + 1, &apply_r(&p.q, i, &v)?)?)?;
        let b = apply_r(&p.q, i + 1, &apply_r(&p.q, i, &apply_r(&p.q, i + 1, &v)?)?)?;
        expect_tensor_eq("Hecke braid relation", format!("i = {i}, q = {}", p.q), &a, &b)?;
    }
    for i in 1..k {
        for j in (i + 2)..k {
            let a = apply_r(&p.q, i, &apply_r(&p.q, j, &v)?)?;
            let b = apply_r(&p.q, j, &apply_r(&p.q, i, &v)?)?;
            expect_tensor_eq(
                "Hecke commuting relation",
                format!("i = {i}, j = {j}, q = {}", p.q),
                &a,
                &b,
            )?;
        }
    }

    // Y unitarity
    let once = apply_y(&p.q, 1, &p.z[0], &p.z[1], &v)?;
    let back = apply_y(&p.q, 1, &p.z[1], &p.z[0], &once)?;
    expect_tensor_eq(
        "Y unitarity",
        format!("q = {}, z = {:?}", p.q, &p.z[..2]),
        &back,
        &v,
    )?;

    // reduced-word independence for a random permutation
    let all = Permutation::all(k);
    let tau = all[rng.below(all.len() as u64) as usize].clone();
    let reference = phi_apply(&tau, &p, &v)?;
    for word in tau.all_reduced_words().into_iter().take(24) {
        let got = phi_apply_along_word(&word, &p, &v)?;
        expect_tensor_eq(
            "phi reduced-word independence",
            format!("tau = {:?}, word = {word:?}", tau.one_line()),
            &got,
            &reference,
        )?;
    }

    // cocycle property
    let tau = all[rng.below(all.len() as u64) as usize].clone();
    let tau_prime = all[rng.below(all.len() as u64) as usize].clone();
    let lhs = phi_apply(&tau_prime.compose(&tau), &p, &v)?;
    let permuted = SpectralParams {
        q: p.q.clone(),
        z: (1..=k).map(|i| p.z[tau.inv(i) - 1].clone()).collect(),
    };
    let rhs = phi_apply(&tau_prime, &permuted, &phi_apply(&tau, &p, &v)?)?;
    expect_tensor_eq(
        "phi cocycle",
        format!("tau = {:?}, tau' = {:?}", tau.one_line(), tau_prime.one_line()),
        &lhs,
        &rhs,
    )
}

fn process_case(rng: &mut SeededRng, cfg: &SuiteConfig) -> Result<()> {
    let counts = cfg.species()?;
    let r = cfg.r;
    let k = counts.k();
    let p = rng.sample_params(k);
    let config = sample_configuration(rng, &counts, -2, 3)?;

    // canonicalization idempotence
    let again = Configuration::canonicalize(
        config.x.iter().copied().zip(config.nu.iter().copied()).collect(),
    )?;
    if again != config {
        return Err(fail(
            "canonicalization idempotence",
            format!("{config:?}"),
            format!("{again:?}"),
            format!("{config:?}"),
        ));
    }

    // conservation and positivity
    for (target, rate) in crate::process::outgoing_moves(&p.q, &config, r)? {
        if !rate.is_positive() {
            return Err(fail(
                "rate positivity",
                format!("{config:?} -> {target:?}"),
                rate.to_string(),
                "> 0".into(),
            ));
        }
        let same = SpeciesCounts::of_word(&target.nu, r)? == counts;
        if !same {
            return Err(fail(
                "species conservation",
                format!("{config:?} -> {target:?}"),
                format!("{:?}", target.nu),
                format!("{:?}", config.nu),
            ));
        }
    }

    // boundary property of h at a tied configuration
    let words = counts.color_words();
    let mu = words[rng.below(words.len() as u64) as usize].clone();
    if k >= 2 {
        let mut x = descending_positions(rng, k, 0, 2);
        x[1] = x[0]; // force a tie in the first two slots
        let x = {
            let mut x = x;
            x.sort_unstable_by(|a, b| b.cmp(a));
            x
        };
        let h = eigenfunction_h(&p, &mu, &x, r)?;
        for nu in counts.color_words() {
            let mut swapped = nu.clone();
            swapped.swap(0, 1);
            let a = extract_component(&p.q, &h, &nu)?;
            let b = extract_component(&p.q, &h, &swapped)?;
            expect_scalar_eq(
                "boundary property of h",
                format!("mu = {mu:?}, nu = {nu:?}, x = {x:?}"),
                &a,
                &b,
            )?;
        }
    }

    // eigenfunction property at the sampled configuration
    check_generator_for_h(&p, &mu, r, &config)
}

fn prop42_identities(
    r: u8,
    lo: i64,
    hi: i64,
    q: &Rational,
    z: &Rational,
    w: &Rational,
) -> Result<Vec<(String, OperatorExpr, OperatorExpr)>> {
    let c_op = |color: u8, zz: &Rational| Primitive::C {
        lo,
        hi,
        color,
        z: zz.clone(),
    };
    let a_op = |zz: &Rational| Primitive::A {
        lo,
        hi,
        z: zz.clone(),
    };
    let mut out = Vec::new();
    out.push((
        "A(z) A(w) = A(w) A(z)".into(),
        OperatorExpr::word(OperatorWord::of(vec![a_op(z), a_op(w)])),
        OperatorExpr::word(OperatorWord::of(vec![a_op(w), a_op(z)])),
    ));
    for a in 1..=r {
        out.push((
            format!("C_{a}(z) C_{a}(w) = C_{a}(w) C_{a}(z)"),
            OperatorExpr::word(OperatorWord::of(vec![c_op(a, z), c_op(a, w)])),
            OperatorExpr::word(OperatorWord::of(vec![c_op(a, w), c_op(a, z)])),
        ));
        out.push((
            format!("C_{a}(z) A(w) = f A(w) C_{a}(z) + g A(z) C_{a}(w)"),
            OperatorExpr::word(OperatorWord::of(vec![c_op(a, z), a_op(w)])),
            OperatorExpr::sum(vec![
                OperatorExpr::scaled_word(f_factor(q, z, w)?, vec![a_op(w), c_op(a, z)]),
                OperatorExpr::scaled_word(g_factor(q, z, w)?, vec![a_op(z), c_op(a, w)]),
            ]),
        ));
    }
    for b in 1..=r {
        for a in (b + 1)..=r {
            // q^2 C_b(z) C_a(w) = f(z,w) C_a(w) C_b(z) - g(w,z) C_a(z) C_b(w)
            out.push((
                format!("q^2 C_{b}(z) C_{a}(w) = f C_{a}(w) C_{b}(z) - g C_{a}(z) C_{b}(w)"),
                OperatorExpr::word(OperatorExpr::scaled_word(
                    q * q,
                    vec![c_op(b, z), c_op(a, w)],
                )),
                OperatorExpr::sum(vec![
                    OperatorExpr::scaled_word(f_factor(q, z, w)?, vec![c_op(a, w), c_op(b, z)]),
                    OperatorExpr::scaled_word(-g_factor(q, w, z)?, vec![c_op(a, z), c_op(b, w)]),
                ]),
            ));
        }
    }
    Ok(out)
}

fn prop43_identities(
    r: u8,
    m_sites: i64,
    z: &Rational,
) -> Vec<(String, OperatorExpr, OperatorExpr)> {
    let mut out = Vec::new();
    let c_on = |lo: i64, hi: i64, color: u8| Primitive::C {
        lo,
        hi,
        color,
        z: z.clone(),
    };
    let a_on = |lo: i64, hi: i64| Primitive::A { lo, hi, z: z.clone() };
    let l00 = |site: i64| Primitive::LEntry {
        site,
        row: 0,
        col: 0,
        z: z.clone(),
    };

    // A^{[1,M]} = (1 + z q^{2 sum N_{p,1}}) A^{[2,M]} + sum_p beta*_{p,1} C_p^{[2,M]}
    let mut rhs = vec![OperatorWord::of(vec![l00(1), a_on(2, m_sites)])];
    for p in 1..=r {
        rhs.push(OperatorWord::of(vec![
            Primitive::BetaStar { color: p, site: 1 },
            c_on(2, m_sites, p),
        ]));
    }
    out.push((
        "A[1,M] peel-left recursion".into(),
        OperatorExpr::word(OperatorWord::of(vec![a_on(1, m_sites)])),
        OperatorExpr::sum(rhs),
    ));

    // C_a^{[1,M]} = z q^{2 sum_{p>a} N_{p,1}} { beta_{a,1}(A^{[2,M]} +
    //   sum_{p<a} beta*_{p,1} C_p^{[2,M]}) + C_a^{[2,M]} }
    for a in 1..=r {
        let tail = OperatorWord::q_tail(r, a, 1);
        let mut rhs = Vec::new();
        let mut word = vec![Primitive::Scalar(z.clone())];
        word.extend(tail.clone());
        word.push(Primitive::Beta { color: a, site: 1 });
        word.push(a_on(2, m_sites));
        rhs.push(OperatorWord::of(word));
        for p in 1..a {
            let mut word = vec![Primitive::Scalar(z.clone())];
            word.extend(tail.clone());
            word.push(Primitive::Beta { color: a, site: 1 });
            word.push(Primitive::BetaStar { color: p, site: 1 });
            word.push(c_on(2, m_sites, p));
            rhs.push(OperatorWord::of(word));
        }
        let mut word = vec![Primitive::Scalar(z.clone())];
        word.extend(tail.clone());
        word.push(c_on(2, m_sites, a));
        rhs.push(OperatorWord::of(word));
        out.push((
            format!("C_{a}[1,M] peel-left recursion"),
            OperatorExpr::word(OperatorWord::of(vec![c_on(1, m_sites, a)])),
            OperatorExpr::sum(rhs),
        ));
    }

    // C_a^{[1,M]} = C_a^{[1,M-1]} (1 + z q^{2 sum N_{p,M}}) +
    //   z sum_b T_{a,b}^{[1,M-1]} beta_{b,M} q^{2 sum_{p>b} N_{p,M}}
    for a in 1..=r {
        let mut rhs = vec![OperatorWord::of(vec![c_on(1, m_sites - 1, a), l00(m_sites)])];
        for b in 1..=r {
            let mut word = vec![
                Primitive::Scalar(z.clone()),
                Primitive::MonodromyEntry {
                    lo: 1,
                    hi: m_sites - 1,
                    row: a,
                    col: b,
                    z: z.clone(),
                },
                Primitive::Beta {
                    color: b,
                    site: m_sites,
                },
            ];
            word.extend(OperatorWord::q_tail(r, b, m_sites));
            rhs.push(OperatorWord::of(word));
        }
        out.push((
            format!("C_{a}[1,M] peel-right recursion"),
            OperatorExpr::word(OperatorWord::of(vec![c_on(1, m_sites, a)])),
            OperatorExpr::sum(rhs),
        ));
    }
    out
}

fn boson_case(rng: &mut SeededRng, cfg: &SuiteConfig) -> Result<()> {
    let r = cfg.r.clamp(2, 3);
    let (p, w) = rng.sample_params_with_extra(1);
    let (z, w) = (&p.z[0], &w);
    let q = &p.q;
    let (lo, hi) = (1i64, 2i64);
    let probes = standard_probes(r, lo, hi, rng.next_u64());
    let light: Vec<SparseKet> = probes
        .iter()
        .filter(|k| k.iter().all(|(occ, _)| occ.total_particles() <= 2))
        .cloned()
        .collect();

    for (name, lhs, rhs) in prop42_identities(r, lo, hi, q, z, w)? {
        fock::check_congruence(q, &name, &lhs, &rhs, lo, hi, &[], &light)?;
    }
    for (name, lhs, rhs) in prop43_identities(r, hi, z) {
        fock::check_congruence(q, &name, &lhs, &rhs, lo, hi, &[], &light)?;
    }

    // exchange relations: C_b(z) beta*_{a,1} = beta*_{a,1} C_b(z) for a < b,
    //                       C_b(z) beta*_{a,1} = q^2 beta*_{a,1} C_b(z) for a > b
    for b in 1..=r {
        for a in 1..=r {
            if a == b {
                continue;
            }
            let c_word = Primitive::C {
                lo,
                hi,
                color: b,
                z: z.clone(),
            };
            let lhs = OperatorExpr::word(OperatorWord::of(vec![
                c_word.clone(),
                Primitive::BetaStar { color: a, site: lo },
            ]));
            let rhs = if a < b {
                OperatorExpr::word(OperatorWord::of(vec![
                    Primitive::BetaStar { color: a, site: lo },
                    c_word,
                ]))
            } else {
                OperatorExpr::word(OperatorExpr::scaled_word(
                    q * q,
                    vec![Primitive::BetaStar { color: a, site: lo }, c_word],
                ))
            };
            fock::check_congruence(
                q,
                &format!("C_{b}(z) beta*_{a},1 exchange"),
                &lhs,
                &rhs,
                lo,
                hi,
                &[],
                &light,
            )?;
        }
    }

    // vacuum-bra expansion for r = 2, counts (0, ..., k_a .. k_r) small
    let mut counts = vec![0usize; r as usize];
    counts[(r - 1) as usize] = 1;
    counts[(r - 2) as usize] = 1;
    let a = r - 1;
    let block: usize = counts.iter().sum();
    let pv = rng.sample_params(block);
    let vac_probes: Vec<SparseKet> = light.iter().take(12).cloned().collect();
    fock::check_vacuum_bra_expansion(&pv, &counts, a, hi, &vac_probes)?;

    Ok(())
}

fn ybe_case(rng: &mut SeededRng, cfg: &SuiteConfig) -> Result<()> {
    let r = cfg.r;
    let p = rng.sample_params(2);
    let probes: Vec<SparseKet> = fock::basis_occupations(r, 0, 0, 2 * r as u32)
        .into_iter()
        .filter(|occ| (1..=r).all(|a| occ.m(0, a) <= 2))
        .map(|occ| SparseKet::basis(r, occ))
        .collect();
    check_ybe(&p.q, &p.z[0], &p.z[1], 0, &probes)?;

    let two_site: Vec<SparseKet> = fock::basis_occupations(r, 1, 2, 2)
        .into_iter()
        .map(|occ| SparseKet::basis(r, occ))
        .collect();
    check_ybe_monodromy(&p.q, &p.z[0], &p.z[1], 1, 2, &two_site)?;

    check_rcheck_invertible(&p.q, r, &p.z[0])
}

fn transfer_case(rng: &mut SeededRng, cfg: &SuiteConfig) -> Result<()> {
    let m_sites = 3i64;
    let sector = PeriodicSector::new(m_sites, cfg.counts.clone())?;
    let p = rng.sample_params(2);
    let q = &p.q;

    let coeffs = transfer_coefficients(q, &sector)?;
    if coeffs[0] != Matrix::identity(sector.dim()) {
        return Err(fail(
            "H_0 = 1",
            format!("M = {m_sites}, counts = {:?}", sector.counts),
            "H_0".into(),
            "identity".into(),
        ));
    }
    check_h1_vs_rates(q, &sector)?;
    for m in 0..coeffs.len() {
        for n in (m + 1)..coeffs.len() {
            let ab = coeffs[m].mul(&coeffs[n]);
            let ba = coeffs[n].mul(&coeffs[m]);
            if let Some((i, j, a, b)) = ab.first_difference(&ba) {
                return Err(fail(
                    &format!("[H_{m}, H_{n}] = 0"),
                    format!("entry ({i}, {j}), q = {q}"),
                    a.to_string(),
                    b.to_string(),
                ));
            }
        }
    }
    check_transfer_commute(q, &sector, &p.z[0], &p.z[1])?;
    check_interpolation_consistency(q, &sector, &p.z[0])
}

fn recurrence_case(rng: &mut SeededRng, cfg: &SuiteConfig) -> Result<()> {
    let counts = cfg.species()?;
    let k = counts.k();
    if k < 2 {
        // pad to two particles of the first color so the recurrence applies
        let mut padded = cfg.counts.clone();
        padded[0] += 1;
        let counts = SpeciesCounts::new(padded)?;
        return recurrence_pair(rng, &counts);
    }
    recurrence_pair(rng, &counts)
}

fn recurrence_pair(rng: &mut SeededRng, counts: &SpeciesCounts) -> Result<()> {
    let k = counts.k();
    let p = rng.sample_params(k);
    let mut x = descending_positions(rng, k - 1, 1, 4);
    x.push(1);
    recurrence_check_h(&p, counts, &x)?;
    fock::recurrence_check_psi(&p, counts, &x)
}

fn main_case(rng: &mut SeededRng, cfg: &SuiteConfig) -> Result<()> {
    let counts = cfg.species()?;
    let r = cfg.r;
    let k = counts.k();
    let p = rng.sample_params(k);
    let words = counts.color_words();
    let mu = words[rng.below(words.len() as u64) as usize].clone();
    let x = descending_positions(rng, k, 1, 4);

    // h = psi, componentwise exact
    let h = eigenfunction_h(&p, &mu, &x, r)?;
    let ps = psi(&p, &mu, &x, r)?;
    expect_tensor_eq(
        "h = psi",
        format!("mu = {mu:?}, x = {x:?}, q = {}, z = {:?}", p.q, p.z),
        &h,
        &ps,
    )?;

    // shift and symmetry for both constructions
    check_shift_invariance(&p, &mu, &x, 1, "h", |pp, m, xx| eigenfunction_h(pp, m, xx, r))?;
    check_shift_invariance(&p, &mu, &x, -1, "psi", |pp, m, xx| psi(pp, m, xx, r))?;
    check_symmetry(&p, &mu, &x, "h", |pp, m, xx| eigenfunction_h(pp, m, xx, r))?;
    check_symmetry(&p, &mu, &x, "psi", |pp, m, xx| psi(pp, m, xx, r))?;

    // stabilization of the weighted bracket
    for nu in counts.color_words() {
        check_stabilization(&p, &mu, &nu, &x, &[(1, 0), (0, 1), (2, 2)])?;
    }

    // one-species reduction ties all three routes together
    let p1 = rng.sample_params(2);
    let ones = vec![1u8; 2];
    let x1 = descending_positions(rng, 2, 1, 4);
    let closed = bcps_closed_form(&p1, &x1)?;
    let h1 = eigenfunction_h(&p1, &ones, &x1, 1)?;
    expect_scalar_eq(
        "closed form = h coefficient (r = 1)",
        format!("x = {x1:?}, q = {}, z = {:?}", p1.q, p1.z),
        &h1.coeff(&ones),
        &closed,
    )?;
    let bracket = weighted_bracket(&p1, &ones, &ones, &x1, x1[1], x1[0])?;
    let q2 = p1.q_squared();
    let normalized = (Rational::one() - &q2).pow(-2)? * bracket;
    expect_scalar_eq(
        "closed form = normalized bracket (r = 1)",
        format!("x = {x1:?}, q = {}, z = {:?}", p1.q, p1.z),
        &normalized,
        &closed,
    )
}

// ---------------------------------------------------------------------------
// Extraction-kernel cross-check used by the boson suite and tests
// ---------------------------------------------------------------------------

/// Confirms that the extraction kernel agrees with a fully independent
/// brute-force expansion of the chain sums for small counts.
pub fn kernel_matches_bruteforce(q: &Rational, counts: &[usize], z: &[Rational], a: u8) -> Result<()> {
    let r = counts.len();
    let ends = {
        let mut ends = vec![0usize; r + 2];
        for p in (1..=r).rev() {
            ends[p] = ends[p + 1] + counts[p - 1];
        }
        ends
    };
    let j_block = |p: usize| (ends[p + 1] + 1)..=ends[p];
    let mut expected: Vec<(usize, Rational, Vec<Rational>)> = Vec::new();
    // enumerate chains by brute force over strictly increasing sequences
    let upper: Vec<usize> = ((a as usize + 1)..=r).collect();
    for mask in 0..(1usize << upper.len()) {
        let mut chain = vec![a as usize];
        for (bit, &p) in upper.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                chain.push(p);
            }
        }
        if chain.iter().any(|&p| counts[p - 1] == 0) {
            continue;
        }
        let t = chain.len() - 1;
        let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
        for &p in &chain {
            let mut next = Vec::new();
            for partial in &stack {
                for ell in j_block(p) {
                    let mut e = partial.clone();
                    e.push(ell);
                    next.push(e);
                }
            }
            stack = next;
        }
        for ells in stack {
            let mut weight = Rational::one();
            for s in 1..=t {
                weight *= &g_factor(q, &z[ells[s] - 1], &z[ells[s - 1] - 1])?;
            }
            for s in 0..=t {
                let hi = ends[chain[s]];
                let lo = if s == t { 0 } else { ends[chain[s + 1]] };
                for i in (lo + 1)..=hi {
                    if i != ells[s] {
                        weight *= &f_factor(q, &z[i - 1], &z[ells[s] - 1])?;
                    }
                }
            }
            let mut z_out = z.to_vec();
            for s in 1..=t {
                z_out[ells[s] - 1] = z[ells[s - 1] - 1].clone();
            }
            z_out.remove(ells[0] - 1);
            expected.push((ells[t], weight, z_out));
        }
    }
    let got = extraction_terms(q, counts, z, a)?;
    if got.len() != expected.len() {
        return Err(fail(
            "extraction kernel term count",
            format!("counts = {counts:?}, a = {a}"),
            got.len().to_string(),
            expected.len().to_string(),
        ));
    }
    for (g, e) in got.iter().zip(&expected) {
        if g.ell_t != e.0 || g.weight != e.1 || g.z_out != e.2 {
            return Err(fail(
                "extraction kernel term",
                format!("counts = {counts:?}, a = {a}"),
                format!("({}, {}, {:?})", g.ell_t, g.weight, g.z_out),
                format!("({}, {}, {:?})", e.0, e.1, e.2),
            ));
        }
    }
    Ok(())
}

/// Desk-scale guardrails shared by the CLI: factorial and sector blow-ups
/// must be requested explicitly.
pub fn enforce_guards(k: usize, sector_dim: Option<u128>, allow_unsafe: bool) -> Result<()> {
    if allow_unsafe {
        return Ok(());
    }
    if k > 6 {
        return Err(Error::Param(format!(
            "k = {k} exceeds the desk-scale cap of 6 (pass --unsafe to override)"
        )));
    }
    if let Some(dim) = sector_dim {
        if dim > 200_000 {
            return Err(Error::Param(format!(
                "sector dimension {dim} exceeds 200000 (pass --unsafe to override)"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for name in Suite::NAMES {
            name.parse::<Suite>().unwrap();
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = SuiteConfig::new(2, Some(vec![1, 1]), 2, 7).unwrap();
        let a = run_suite(Suite::Hecke, &cfg).unwrap();
        let b = run_suite(Suite::Hecke, &cfg).unwrap();
        assert_eq!(a.cases, b.cases);
        assert_eq!(a.passed, b.passed);
        assert_eq!(a.failures, b.failures);
    }

    #[test]
    fn kernel_bruteforce_crosscheck() {
        let mut rng = SeededRng::new(61);
        let counts = [2usize, 1];
        let p = rng.sample_params(3);
        for a in 1..=2u8 {
            kernel_matches_bruteforce(&p.q, &counts, &p.z, a).unwrap();
        }
    }

    #[test]
    fn guards_fire_without_unsafe() {
        assert!(enforce_guards(7, None, false).is_err());
        assert!(enforce_guards(7, None, true).is_ok());
        assert!(enforce_guards(3, Some(300_000), false).is_err());
        assert!(enforce_guards(3, Some(300_000), true).is_ok());
    }
}
