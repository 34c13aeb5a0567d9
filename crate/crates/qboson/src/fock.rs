//! The q-deformed boson algebra on sparse multi-site Fock states, the
//! rank-r L-operator, monodromy entries, and the matrix-element
//! eigenfunction construction.
//!
//! Per site and color the generators act on occupation numbers by
//! `beta* : m -> m + 1` (coefficient 1), `beta : m -> m - 1` (coefficient
//! `1 - q^{2m}`, annihilating `m = 0`), and `q^{N} : m -> m` (coefficient
//! `q^m`). The `(r+1) x (r+1)` L-operator couples one lattice site to an
//! auxiliary index; ordered products over an interval give the monodromy
//! matrix, whose `(a, 0)` entries `C_a(z)` build the eigenfunction `psi`
//! as a normalized vacuum-to-vacuum matrix element.
//!
//! No truncation is ever applied: every operator word maps a finite ket to
//! a finite ket, so all computations here are exact.

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hecke::TensorVector;
use crate::process::{inversion_number, SpeciesCounts};
use crate::recursion::{extraction_terms, recurrence_rhs};
use crate::rng::SeededRng;
use crate::scalars::{Rational, SpectralParams};

/// Per-site, per-color occupation numbers; sites with all-zero counts are
/// never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Occupation(BTreeMap<i64, Vec<u32>>);

impl Occupation {
    pub fn empty() -> Self {
        Occupation(BTreeMap::new())
    }

    pub fn from_particles(r: u8, particles: &[(i64, u8)]) -> Result<Self> {
        let mut occ = Occupation::empty();
        for &(site, color) in particles {
            if color == 0 || color > r {
                return Err(Error::Index(format!("color {color} outside 1..={r}")));
            }
            occ = occ.bump(site, color, 1, r)?;
        }
        Ok(occ)
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    /// Occupation of `color` at `site`.
    pub fn m(&self, site: i64, color: u8) -> u32 {
        self.0
            .get(&site)
            .map(|v| v[(color - 1) as usize])
            .unwrap_or(0)
    }

    /// Total occupation of `site` across colors.
    pub fn site_total(&self, site: i64) -> u32 {
        self.0.get(&site).map(|v| v.iter().sum()).unwrap_or(0)
    }

    /// `sum_{p > color} m_p` at `site`.
    pub fn tail_sum(&self, site: i64, color: u8) -> u32 {
        self.0
            .get(&site)
            .map(|v| v[(color as usize)..].iter().sum())
            .unwrap_or(0)
    }

    /// `sum_{p >= color} m_p` at `site`.
    pub fn tail_sum_from(&self, site: i64, color: u8) -> u32 {
        self.0
            .get(&site)
            .map(|v| v[(color as usize - 1)..].iter().sum())
            .unwrap_or(0)
    }

    /// Copy with the occupation of `color` at `site` changed by `delta`;
    /// `None` when that would go negative.
    pub fn bump_checked(&self, site: i64, color: u8, delta: i32, r: u8) -> Option<Occupation> {
        let mut map = self.0.clone();
        let entry = map.entry(site).or_insert_with(|| vec![0; r as usize]);
        let idx = (color - 1) as usize;
        let cur = entry[idx] as i64 + delta as i64;
        if cur < 0 {
            return None;
        }
        entry[idx] = cur as u32;
        if entry.iter().all(|&m| m == 0) {
            map.remove(&site);
        }
        Some(Occupation(map))
    }

    pub fn bump(&self, site: i64, color: u8, delta: i32, r: u8) -> Result<Occupation> {
        self.bump_checked(site, color, delta, r)
            .ok_or_else(|| Error::Index(format!("negative occupation at site {site}")))
    }

    pub fn sites(&self) -> impl Iterator<Item = (&i64, &Vec<u32>)> {
        self.0.iter()
    }

    pub fn within(&self, lo: i64, hi: i64) -> bool {
        self.0.keys().all(|&s| lo <= s && s <= hi)
    }

    pub fn total_particles(&self) -> u32 {
        self.0.values().map(|v| v.iter().sum::<u32>()).sum()
    }

    /// Per-color totals over all sites, as a counts vector of length `r`.
    pub fn color_totals(&self, r: u8) -> Vec<usize> {
        let mut totals = vec![0usize; r as usize];
        for v in self.0.values() {
            for (i, &m) in v.iter().enumerate() {
                totals[i] += m as usize;
            }
        }
        totals
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_vacuum() {
            return write!(f, "|vac>");
        }
        write!(f, "|")?;
        for (i, (site, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            let counts: Vec<String> = v.iter().map(|m| m.to_string()).collect();
            write!(f, "{site}:({})", counts.join(","))?;
        }
        write!(f, ">")
    }
}

/// A finite linear combination of Fock basis states; zero coefficients are
/// never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseKet {
    r: u8,
    terms: BTreeMap<Occupation, Rational>,
}

impl SparseKet {
    pub fn zero(r: u8) -> Self {
        SparseKet {
            r,
            terms: BTreeMap::new(),
        }
    }

    pub fn vacuum(r: u8) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Occupation::empty(), Rational::one());
        SparseKet { r, terms }
    }

    pub fn basis(r: u8, occ: Occupation) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(occ, Rational::one());
        SparseKet { r, terms }
    }

    pub fn r(&self) -> u8 {
        self.r
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, occ: &Occupation) -> Rational {
        self.terms.get(occ).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Rational)> {
        self.terms.iter()
    }

    pub fn insert_add(&mut self, occ: Occupation, value: Rational) {
        if value.is_zero() {
            return;
        }
        match self.terms.entry(occ) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(value);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &value;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &SparseKet, scale: &Rational) {
        for (occ, c) in &other.terms {
            self.insert_add(occ.clone(), c * scale);
        }
    }

    pub fn add_assign(&mut self, other: &SparseKet) {
        self.add_scaled(other, &Rational::one());
    }

    pub fn sub(&self, other: &SparseKet) -> SparseKet {
        let mut out = self.clone();
        out.add_scaled(other, &Rational::from_int(-1));
        out
    }

    pub fn scale(&mut self, s: &Rational) {
        if s.is_zero() {
            self.terms.clear();
            return;
        }
        for v in self.terms.values_mut() {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: &Rational) -> SparseKet {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn support_within(&self, lo: i64, hi: i64) -> bool {
        self.terms.keys().all(|occ| occ.within(lo, hi))
    }
}

impl Serialize for SparseKet {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Term {
            occ: BTreeMap<String, Vec<u32>>,
            coef: String,
        }
        let terms: Vec<Term> = self
            .terms
            .iter()
            .map(|(occ, c)| Term {
                occ: occ
                    .sites()
                    .map(|(site, v)| (site.to_string(), v.clone()))
                    .collect(),
                coef: c.to_string(),
            })
            .collect();
        let mut st = serializer.serialize_struct("SparseKet", 1)?;
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

impl SparseKet {
    /// Parses the `{"terms": [{"occ": {"site": [m, ...]}, "coef": "n/d"}]}`
    /// schema; every occupation vector must have length `r`.
    pub fn from_json(r: u8, s: &str) -> Result<SparseKet> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("bad ket JSON: {e}")))?;
        let terms = v
            .get("terms")
            .and_then(|t| t.as_array())
            .ok_or_else(|| Error::Parse("ket JSON needs a \"terms\" array".into()))?;
        let mut ket = SparseKet::zero(r);
        for term in terms {
            let coef: Rational = term
                .get("coef")
                .and_then(|c| c.as_str())
                .ok_or_else(|| Error::Parse("term needs a string \"coef\"".into()))?
                .parse()?;
            let occ_map = term
                .get("occ")
                .and_then(|o| o.as_object())
                .ok_or_else(|| Error::Parse("term needs an \"occ\" object".into()))?;
            let mut occ = Occupation::empty();
            for (site, counts) in occ_map {
                let site: i64 = site
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad site index {site:?}")))?;
                let counts = counts
                    .as_array()
                    .ok_or_else(|| Error::Parse("occupation must be an array".into()))?;
                if counts.len() != r as usize {
                    return Err(Error::Parse(format!(
                        "occupation at site {site} has {} colors, expected {r}",
                        counts.len()
                    )));
                }
                for (idx, m) in counts.iter().enumerate() {
                    let m = m
                        .as_u64()
                        .ok_or_else(|| Error::Parse("occupations must be non-negative".into()))?;
                    if m > 0 {
                        occ = occ.bump(site, (idx + 1) as u8, m as i32, r)?;
                    }
                }
            }
            ket.insert_add(occ, coef);
        }
        Ok(ket)
    }
}

// ---------------------------------------------------------------------------
// Primitive generators and the L-operator
// ---------------------------------------------------------------------------

/// A primitive operator of the boson picture. A word of primitives is
/// written in mathematical order: the rightmost factor acts first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Primitive {
    /// Annihilation `beta_{color, site}`.
    Beta { color: u8, site: i64 },
    /// Creation `beta*_{color, site}`.
    BetaStar { color: u8, site: i64 },
    /// `q^{exponent * N_{color, site}}`.
    QPower { color: u8, site: i64, exponent: i64 },
    /// One entry of the site-local L-operator.
    LEntry { site: i64, row: u8, col: u8, z: Rational },
    /// One entry of the monodromy matrix over `[lo, hi]`.
    MonodromyEntry { lo: i64, hi: i64, row: u8, col: u8, z: Rational },
    /// `C_color(z)` over `[lo, hi]`: the `(color, 0)` monodromy entry.
    C { lo: i64, hi: i64, color: u8, z: Rational },
    /// `A(z)` over `[lo, hi]`: the `(0, 0)` monodromy entry.
    A { lo: i64, hi: i64, z: Rational },
    /// Multiplication by an exact scalar.
    Scalar(Rational),
}

/// Applies one primitive generator, extended linearly.
pub fn apply_primitive(q: &Rational, op: &Primitive, ket: &SparseKet) -> Result<SparseKet> {
    let r = ket.r();
    let check_color = |color: u8| -> Result<()> {
        if color == 0 || color > r {
            Err(Error::Index(format!("color {color} outside 1..={r}")))
        } else {
            Ok(())
        }
    };
    let mut out = SparseKet::zero(r);
    match op {
        Primitive::Beta { color, site } => {
            check_color(*color)?;
            let q2 = q * q;
            for (occ, c) in ket.iter() {
                let m = occ.m(*site, *color);
                if m == 0 {
                    continue; // coefficient 1 - q^0 = 0
                }
                let coeff = Rational::one() - q2.pow(m as i64)?;
                out.insert_add(occ.bump(*site, *color, -1, r)?, c * &coeff);
            }
        }
        Primitive::BetaStar { color, site } => {
            check_color(*color)?;
            for (occ, c) in ket.iter() {
                out.insert_add(occ.bump(*site, *color, 1, r)?, c.clone());
            }
        }
        Primitive::QPower {
            color,
            site,
            exponent,
        } => {
            check_color(*color)?;
            for (occ, c) in ket.iter() {
                let m = occ.m(*site, *color) as i64;
                out.insert_add(occ.clone(), c * &q.pow(exponent * m)?);
            }
        }
        Primitive::LEntry { site, row, col, z } => {
            return apply_l_entry(q, *site, *row, *col, z, ket);
        }
        Primitive::MonodromyEntry {
            lo,
            hi,
            row,
            col,
            z,
        } => {
            return monodromy_sweep(q, *lo, *hi, *row, *col, z, ket);
        }
        Primitive::C { lo, hi, color, z } => {
            check_color(*color)?;
            return monodromy_sweep(q, *lo, *hi, *color, 0, z, ket);
        }
        Primitive::A { lo, hi, z } => {
            return monodromy_sweep(q, *lo, *hi, 0, 0, z, ket);
        }
        Primitive::Scalar(s) => {
            return Ok(ket.scaled(s));
        }
    }
    Ok(out)
}

/// Applies one entry of the site-local L-operator:
///
/// ```text
/// L(z)_00 = 1 + z q^{2 sum_p N_p}        L(z)_0a = beta*_a
/// L(z)_a0 = z beta_a q^{2 sum_{p>a} N_p}
/// L(z)_ab = 0                            (1 <= a < b <= r)
/// L(z)_aa = z q^{2 sum_{p>a} N_p}
/// L(z)_ab = z beta_a beta*_b q^{2 sum_{p>a} N_p}   (1 <= b < a <= r)
/// ```
pub fn apply_l_entry(
    q: &Rational,
    site: i64,
    row: u8,
    col: u8,
    z: &Rational,
    ket: &SparseKet,
) -> Result<SparseKet> {
    let r = ket.r();
    if row > r || col > r {
        return Err(Error::Index(format!(
            "L entry ({row}, {col}) outside 0..={r}"
        )));
    }
    let q2 = q * q;
    let one = Rational::one();
    let mut out = SparseKet::zero(r);
    match (row, col) {
        (0, 0) => {
            for (occ, c) in ket.iter() {
                let total = occ.site_total(site) as i64;
                let coeff = &one + &(z * &q2.pow(total)?);
                out.insert_add(occ.clone(), c * &coeff);
            }
        }
        (0, b) => {
            for (occ, c) in ket.iter() {
                out.insert_add(occ.bump(site, b, 1, r)?, c.clone());
            }
        }
        (a, 0) => {
            for (occ, c) in ket.iter() {
                let m = occ.m(site, a);
                if m == 0 {
                    continue;
                }
                let coeff = z * &q2.pow(occ.tail_sum(site, a) as i64)?
                    * (&one - &q2.pow(m as i64)?);
                out.insert_add(occ.bump(site, a, -1, r)?, c * &coeff);
            }
        }
        (a, b) if a < b => {
            let _ = (a, b); // identically zero
        }
        (a, b) if a == b => {
            for (occ, c) in ket.iter() {
                let coeff = z * &q2.pow(occ.tail_sum(site, a) as i64)?;
                out.insert_add(occ.clone(), c * &coeff);
            }
        }
        (a, b) => {
            // b < a: z beta_a beta*_b q^{2 sum_{p>a} N_p}
            for (occ, c) in ket.iter() {
                let m = occ.m(site, a);
                if m == 0 {
                    continue;
                }
                let coeff = z * &q2.pow(occ.tail_sum(site, a) as i64)?
                    * (&one - &q2.pow(m as i64)?);
                let moved = occ.bump(site, a, -1, r)?.bump(site, b, 1, r)?;
                out.insert_add(moved, c * &coeff);
            }
        }
    }
    Ok(out)
}

/// Right-to-left sweep computing one entry of
/// `L^{(lo)}(z) L^{(lo+1)}(z) ... L^{(hi)}(z)`, carrying `r + 1`
/// intermediate kets. Sites outside `[lo, hi]` pass through untouched.
fn monodromy_sweep(
    q: &Rational,
    lo: i64,
    hi: i64,
    row: u8,
    col: u8,
    z: &Rational,
    ket: &SparseKet,
) -> Result<SparseKet> {
    let r = ket.r();
    if lo > hi {
        return Err(Error::Interval(format!("empty interval [{lo}, {hi}]")));
    }
    if row > r || col > r {
        return Err(Error::Index(format!(
            "monodromy entry ({row}, {col}) outside 0..={r}"
        )));
    }
    let mut carried: Vec<SparseKet> = (0..=r)
        .map(|d| apply_l_entry(q, hi, d, col, z, ket))
        .collect::<Result<_>>()?;
    for site in (lo..hi).rev() {
        let mut next = vec![SparseKet::zero(r); (r + 1) as usize];
        for c in 0..=r {
            for d in 0..=r {
                if carried[d as usize].is_zero() {
                    continue;
                }
                if c >= 1 && d >= 1 && c < d {
                    continue; // L_{cd} = 0 above the diagonal
                }
                let piece = apply_l_entry(q, site, c, d, z, &carried[d as usize])?;
                next[c as usize].add_assign(&piece);
            }
        }
        carried = next;
    }
    Ok(carried.swap_remove(row as usize))
}

/// One entry of the monodromy matrix over `[lo, hi]`, as a map on kets
/// supported inside the interval.
pub fn apply_monodromy_entry(
    q: &Rational,
    lo: i64,
    hi: i64,
    row: u8,
    col: u8,
    z: &Rational,
    ket: &SparseKet,
) -> Result<SparseKet> {
    if !ket.support_within(lo, hi) {
        return Err(Error::Interval(format!(
            "ket support exceeds the interval [{lo}, {hi}]"
        )));
    }
    monodromy_sweep(q, lo, hi, row, col, z, ket)
}

/// The coefficient of the vacuum in `ket` (pairing with the dual vacuum).
pub fn vacuum_pairing(ket: &SparseKet) -> Rational {
    ket.coeff(&Occupation::empty())
}

/// Applies the ordered product `C_{colors[0]}(z_0) ... C_{colors[n-1]}(z_{n-1})`
/// over `[lo, hi]`, rightmost factor first.
pub fn apply_c_product(
    q: &Rational,
    lo: i64,
    hi: i64,
    colors: &[u8],
    z: &[Rational],
    ket: &SparseKet,
) -> Result<SparseKet> {
    if colors.len() != z.len() {
        return Err(Error::Param(format!(
            "{} colors with {} spectral parameters",
            colors.len(),
            z.len()
        )));
    }
    let mut cur = ket.clone();
    for (color, zi) in colors.iter().zip(z.iter()).rev() {
        if cur.is_zero() {
            break;
        }
        cur = monodromy_sweep(q, lo, hi, *color, 0, zi, &cur)?;
    }
    Ok(cur)
}

/// The raw vacuum-to-vacuum bracket
/// `< C_{mu_1}(z_1) ... C_{mu_k}(z_k) beta*_{nu_1, x_1} ... beta*_{nu_k, x_k} >`
/// over `[lo, hi]`. Requires every position to lie in the interval.
pub fn matrix_element(
    q: &Rational,
    mu: &[u8],
    z: &[Rational],
    nu: &[u8],
    x: &[i64],
    lo: i64,
    hi: i64,
) -> Result<Rational> {
    if mu.len() != z.len() || nu.len() != x.len() {
        return Err(Error::Param("mismatched word lengths".into()));
    }
    if x.iter().any(|&xi| xi < lo || xi > hi) {
        return Err(Error::Interval(format!(
            "interval [{lo}, {hi}] does not contain all positions {x:?}"
        )));
    }
    let r = mu.iter().chain(nu.iter()).copied().max().unwrap_or(1);
    let mut ket = SparseKet::vacuum(r);
    for (&color, &site) in nu.iter().zip(x.iter()) {
        ket = apply_primitive(q, &Primitive::BetaStar { color, site }, &ket)?;
    }
    let ket = apply_c_product(q, lo, hi, mu, z, &ket)?;
    Ok(vacuum_pairing(&ket))
}

/// The stabilized weight `prod_i z_i^{lo - 1} (1 + z_i)^{-hi}` multiplying
/// the raw bracket.
pub fn interval_weight(z: &[Rational], lo: i64, hi: i64) -> Result<Rational> {
    let one = Rational::one();
    let mut weight = Rational::one();
    for zi in z {
        weight *= &zi.pow(lo - 1)?;
        weight *= &(&one + zi).pow(-hi)?;
    }
    Ok(weight)
}

/// The eigenfunction `psi` as a tensor-valued function of the positions:
/// with `[lo, hi] = [x_k, x_1]`,
///
/// `psi(x) = (1 - q^2)^{-k} sum_nu weight * bracket(mu, nu) *
///  q^{t(nu) - t(mu)} u_nu`.
pub fn psi(params: &SpectralParams, mu: &[u8], x: &[i64], r: u8) -> Result<TensorVector> {
    params.validate()?;
    let k = params.k();
    if mu.len() != k || x.len() != k {
        return Err(Error::Param(format!(
            "expected {k} colors and positions, got {} and {}",
            mu.len(),
            x.len()
        )));
    }
    if x.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Param(format!("positions {x:?} are not descending")));
    }
    let counts = SpeciesCounts::of_word(mu, r)?;
    let lo = x[k - 1];
    let hi = x[0];
    let weight = interval_weight(&params.z, lo, hi)?;
    let one = Rational::one();
    let q2 = params.q_squared();
    let norm = (&one - &q2).pow(-(k as i64))?;
    let t_mu = inversion_number(mu) as i64;
    let mut out = TensorVector::zero(k, r);
    for nu in counts.color_words() {
        let bracket = matrix_element(&params.q, mu, &params.z, &nu, x, lo, hi)?;
        if bracket.is_zero() {
            continue;
        }
        let t_nu = inversion_number(&nu) as i64;
        let coeff = &norm * &(&weight * &(bracket * params.q.pow(t_nu - t_mu)?));
        let mut basis = TensorVector::basis(&nu, r)?;
        basis.scale(&coeff);
        out.add_scaled(&basis, &one);
    }
    Ok(out)
}

/// The scalar eigenfunction `E(x, nu)`: the stabilized value of the
/// weighted bracket, evaluated on the minimal interval `[x_k, x_1]`
/// (constant under any widening).
pub fn eigenfunction_e(
    params: &SpectralParams,
    mu: &[u8],
    x: &[i64],
    nu: &[u8],
) -> Result<Rational> {
    params.validate()?;
    let k = params.k();
    if mu.len() != k || x.len() != k || nu.len() != k {
        return Err(Error::Param("mismatched word lengths".into()));
    }
    if x.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Param(format!("positions {x:?} are not descending")));
    }
    let lo = x[k - 1];
    let hi = x[0];
    let bracket = matrix_element(&params.q, mu, &params.z, nu, x, lo, hi)?;
    Ok(interval_weight(&params.z, lo, hi)? * bracket)
}

/// Exact recurrence check for `psi`, sharing the extraction kernel with
/// the Hecke-side check: the value at `(x_1, ..., x_{k-1}, 1)` with colors
/// `(r^{k_r}, ..., 1^{k_1})` against the nested extraction sums.
pub fn recurrence_check_psi(
    params: &SpectralParams,
    counts: &SpeciesCounts,
    x: &[i64],
) -> Result<()> {
    let k = counts.k();
    if k < 2 || x.len() != k || x[k - 1] != 1 || x[k - 2] < 1 {
        return Err(Error::Param(format!(
            "recurrence needs x = (x_1 >= ... >= x_{{k-1}} >= 1, 1), got {x:?}"
        )));
    }
    let r = counts.r();
    let mu = counts.descending_word();
    let lhs = psi(params, &mu, x, r)?;
    let prefix = &x[..k - 1];
    let rhs = recurrence_rhs(params, counts, |sub_counts, sub_params| {
        psi(sub_params, &sub_counts.descending_word(), prefix, r)
    })?;
    if let Some((word, l, rr)) = lhs.first_difference(&rhs) {
        return Err(Error::IdentityFailed {
            identity: "recurrence(psi)".into(),
            inputs: format!(
                "counts = {:?}, q = {}, z = {:?}, x = {:?}, component = {:?}",
                counts.counts(),
                params.q,
                params.z,
                x,
                word
            ),
            lhs: l.to_string(),
            rhs: rr.to_string(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Operator words, expressions, and congruence checking
// ---------------------------------------------------------------------------

/// A product of primitives in mathematical order (rightmost acts first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorWord(pub Vec<Primitive>);

impl OperatorWord {
    pub fn of(factors: Vec<Primitive>) -> Self {
        OperatorWord(factors)
    }

    pub fn apply(&self, q: &Rational, ket: &SparseKet) -> Result<SparseKet> {
        let mut cur = ket.clone();
        for p in self.0.iter().rev() {
            if cur.is_zero() {
                break;
            }
            cur = apply_primitive(q, p, &cur)?;
        }
        Ok(cur)
    }

    /// The tail factor `q^{2 sum_{p > color} N_{p, site}}`.
    pub fn q_tail(r: u8, color: u8, site: i64) -> Vec<Primitive> {
        ((color + 1)..=r)
            .map(|p| Primitive::QPower {
                color: p,
                site,
                exponent: 2,
            })
            .collect()
    }

    /// The factor `q^{2 sum_{p >= color} N_{p, site}}`.
    pub fn q_tail_from(r: u8, color: u8, site: i64) -> Vec<Primitive> {
        (color..=r)
            .map(|p| Primitive::QPower {
                color: p,
                site,
                exponent: 2,
            })
            .collect()
    }
}

/// A formal sum of operator words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorExpr(pub Vec<OperatorWord>);

impl OperatorExpr {
    pub fn word(w: OperatorWord) -> Self {
        OperatorExpr(vec![w])
    }

    pub fn sum(words: Vec<OperatorWord>) -> Self {
        OperatorExpr(words)
    }

    /// Prepends a scalar factor to a word and wraps it.
    pub fn scaled_word(scale: Rational, mut factors: Vec<Primitive>) -> OperatorWord {
        factors.insert(0, Primitive::Scalar(scale));
        OperatorWord(factors)
    }

    pub fn apply(&self, q: &Rational, ket: &SparseKet) -> Result<SparseKet> {
        let mut out = SparseKet::zero(ket.r());
        for w in &self.0 {
            out.add_assign(&w.apply(q, ket)?);
        }
        Ok(out)
    }
}

impl From<OperatorWord> for OperatorExpr {
    fn from(w: OperatorWord) -> Self {
        OperatorExpr::word(w)
    }
}

/// Asserts `lhs = rhs` modulo the right ideal
/// `sum_{p in killed_colors} beta*_{p, lo} B^{[lo, hi]}` by checking, for
/// every probe, that each component of `(lhs - rhs) probe` whose site-`lo`
/// occupation vanishes on all killed colors is zero. With an empty
/// `killed_colors` this is an exact operator identity on the probes.
#[allow(clippy::too_many_arguments)]
pub fn check_congruence(
    q: &Rational,
    identity: &str,
    lhs: &OperatorExpr,
    rhs: &OperatorExpr,
    lo: i64,
    hi: i64,
    killed_colors: &[u8],
    probes: &[SparseKet],
) -> Result<()> {
    for (idx, probe) in probes.iter().enumerate() {
        if !probe.support_within(lo, hi) {
            return Err(Error::Interval(format!(
                "probe {idx} is supported outside [{lo}, {hi}]"
            )));
        }
        let left = lhs.apply(q, probe)?;
        let right = rhs.apply(q, probe)?;
        let diff = left.sub(&right);
        for (occ, coeff) in diff.iter() {
            let visible = killed_colors.iter().all(|&p| occ.m(lo, p) == 0);
            if visible {
                return Err(Error::IdentityFailed {
                    identity: identity.to_string(),
                    inputs: format!("probe {idx}, bra {occ}"),
                    lhs: left.coeff(occ).to_string(),
                    rhs: right.coeff(occ).to_string(),
                });
            }
            let _ = coeff;
        }
    }
    Ok(())
}

/// The standard probe set on `[lo, hi]`: every basis occupation with at
/// most 3 particles, plus 5 seeded random sparse combinations.
pub fn standard_probes(r: u8, lo: i64, hi: i64, seed: u64) -> Vec<SparseKet> {
    let mut probes: Vec<SparseKet> = basis_occupations(r, lo, hi, 3)
        .into_iter()
        .map(|occ| SparseKet::basis(r, occ))
        .collect();
    let mut rng = SeededRng::new(seed);
    let singles = basis_occupations(r, lo, hi, 3);
    for _ in 0..5 {
        let mut ket = SparseKet::zero(r);
        for _ in 0..3 {
            let occ = singles[rng.below(singles.len() as u64) as usize].clone();
            let coeff = Rational::new(rng.range_i64(-9, 9), rng.range_i64(1, 9)).unwrap();
            ket.insert_add(occ, coeff);
        }
        if !ket.is_zero() {
            probes.push(ket);
        }
    }
    probes
}

/// All basis occupations on `[lo, hi]` with total particle number at most
/// `max_total`, vacuum included.
pub fn basis_occupations(r: u8, lo: i64, hi: i64, max_total: u32) -> Vec<Occupation> {
    // slots in deterministic order: (site, color) lexicographic
    let mut slots = Vec::new();
    for site in lo..=hi {
        for color in 1..=r {
            slots.push((site, color));
        }
    }
    let mut out = Vec::new();
    // multisets of slots of size <= max_total, built with non-decreasing
    // slot indices
    fn rec(
        slots: &[(i64, u8)],
        r: u8,
        start: usize,
        left: u32,
        current: &Occupation,
        out: &mut Vec<Occupation>,
    ) {
        out.push(current.clone());
        if left == 0 {
            return;
        }
        for i in start..slots.len() {
            let (site, color) = slots[i];
            let next = current.bump(site, color, 1, r).unwrap();
            rec(slots, r, i, left - 1, &next, out);
        }
    }
    rec(&slots, r, 0, max_total, &Occupation::empty(), &mut out);
    out.sort();
    out.dedup();
    out
}

/// Checks the vacuum-bra expansion: on the interval `[1, M]`, commuting
/// `beta*_{a, 1}` through the descending product of `C` operators for
/// colors `r, ..., a` against the extraction-kernel sum, paired against
/// every probe. `counts` lists `k_1..k_r` with `k_p = 0` for `p < a`.
pub fn check_vacuum_bra_expansion(
    params: &SpectralParams,
    counts: &[usize],
    a: u8,
    m_sites: i64,
    probes: &[SparseKet],
) -> Result<()> {
    let r = counts.len() as u8;
    if a == 0 || a > r || counts[(a - 1) as usize] == 0 {
        return Err(Error::Param(format!("color {a} must be present")));
    }
    if counts[..(a - 1) as usize].iter().any(|&c| c != 0) {
        return Err(Error::Param("counts below the extracted color must be zero".into()));
    }
    let block_total: usize = counts.iter().sum();
    if params.z.len() != block_total {
        return Err(Error::Param(format!(
            "{} spectral parameters for {} operators",
            params.z.len(),
            block_total
        )));
    }
    let q = &params.q;
    let one = Rational::one();
    let q2 = params.q_squared();

    // colors of the C product, descending blocks r^{k_r}, ..., a^{k_a}
    let colors: Vec<u8> = (a..=r)
        .rev()
        .flat_map(|p| std::iter::repeat_n(p, counts[(p - 1) as usize]))
        .collect();
    let mut reduced_colors = colors.clone();
    // drop one trailing color-a factor
    let pos = reduced_colors.iter().rposition(|&c| c == a).unwrap();
    reduced_colors.remove(pos);

    let terms = extraction_terms(q, counts, &params.z, a)?;
    for (idx, probe) in probes.iter().enumerate() {
        if !probe.support_within(1, m_sites) {
            return Err(Error::Interval(format!(
                "probe {idx} is supported outside [1, {m_sites}]"
            )));
        }
        let created = apply_primitive(
            q,
            &Primitive::BetaStar { color: a, site: 1 },
            probe,
        )?;
        let lhs = vacuum_pairing(&apply_c_product(q, 1, m_sites, &colors, &params.z, &created)?);
        let mut rhs = Rational::zero();
        for term in &terms {
            let z_ell = &params.z[term.ell_t - 1];
            let factor = z_ell * &(&one + z_ell).pow(m_sites - 1)?;
            let bracket = vacuum_pairing(&apply_c_product(
                q,
                1,
                m_sites,
                &reduced_colors,
                &term.z_out,
                probe,
            )?);
            rhs += &(&term.weight * &(factor * bracket));
        }
        rhs *= &(&one - &q2);
        if lhs != rhs {
            return Err(Error::IdentityFailed {
                identity: "vacuum-bra expansion".into(),
                inputs: format!(
                    "counts = {counts:?}, a = {a}, M = {m_sites}, q = {}, z = {:?}, probe {idx}",
                    params.q, params.z
                ),
                lhs: lhs.to_string(),
                rhs: rhs.to_string(),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Operator mini-language
// ---------------------------------------------------------------------------

/// Parses the prefix mini-language for operator words, e.g.
/// `C[1,3;a=2](5/2) . bstar[a=1,i=2]`.
///
/// Factors are separated by `.`, `*` or the composition sign; each factor
/// is one of
/// `beta[a,i]`, `bstar[a,i]`, `qn[a,i,e]`, `L[i;row,col](z)`,
/// `T[lo,hi;row,col](z)`, `C[lo,hi;a](z)`, `A[lo,hi](z)`, `scalar(n/d)`,
/// where bracket fields may be separated by `,` or `;` and optionally
/// prefixed with `key=`.
pub fn parse_operator_word(input: &str) -> Result<OperatorWord> {
    let cleaned = input.replace('\u{2218}', "."); // accept the composition sign
    let mut factors = Vec::new();
    for raw in cleaned.split(['.', '*']) {
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        factors.push(parse_factor(raw)?);
    }
    if factors.is_empty() {
        return Err(Error::Parse("empty operator word".into()));
    }
    Ok(OperatorWord(factors))
}

fn parse_factor(raw: &str) -> Result<Primitive> {
    let bad = |msg: &str| Error::Parse(format!("bad operator factor {raw:?}: {msg}"));
    let name_end = raw
        .find(['[', '('])
        .ok_or_else(|| bad("missing [args] or (value)"))?;
    let name = raw[..name_end].trim().to_lowercase();
    let mut args: Vec<i64> = Vec::new();
    let mut rest = &raw[name_end..];
    if rest.starts_with('[') {
        let close = rest.find(']').ok_or_else(|| bad("unclosed ["))?;
        for field in rest[1..close].split([',', ';']) {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let value = field.split_once('=').map(|(_, v)| v).unwrap_or(field);
            args.push(
                value
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| bad("non-integer argument"))?,
            );
        }
        rest = rest[close + 1..].trim_start();
    }
    let mut value: Option<Rational> = None;
    if rest.starts_with('(') {
        let close = rest.rfind(')').ok_or_else(|| bad("unclosed ("))?;
        value = Some(rest[1..close].trim().parse()?);
    } else if !rest.is_empty() {
        return Err(bad("trailing input"));
    }
    let coerce_color = |v: i64| -> Result<u8> {
        u8::try_from(v).map_err(|_| bad("color out of range"))
    };
    let need = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            Err(bad("wrong number of arguments"))
        }
    };
    match name.as_str() {
        "beta" => {
            need(2)?;
            Ok(Primitive::Beta {
                color: coerce_color(args[0])?,
                site: args[1],
            })
        }
        "bstar" | "betastar" => {
            need(2)?;
            Ok(Primitive::BetaStar {
                color: coerce_color(args[0])?,
                site: args[1],
            })
        }
        "qn" => {
            need(3)?;
            Ok(Primitive::QPower {
                color: coerce_color(args[0])?,
                site: args[1],
                exponent: args[2],
            })
        }
        "l" => {
            need(3)?;
            Ok(Primitive::LEntry {
                site: args[0],
                row: coerce_color(args[1].max(0))?,
                col: coerce_color(args[2].max(0))?,
                z: value.ok_or_else(|| bad("L needs a spectral value"))?,
            })
        }
        "t" => {
            need(4)?;
            Ok(Primitive::MonodromyEntry {
                lo: args[0],
                hi: args[1],
                row: coerce_color(args[2].max(0))?,
                col: coerce_color(args[3].max(0))?,
                z: value.ok_or_else(|| bad("T needs a spectral value"))?,
            })
        }
        "c" => {
            need(3)?;
            Ok(Primitive::C {
                lo: args[0],
                hi: args[1],
                color: coerce_color(args[2])?,
                z: value.ok_or_else(|| bad("C needs a spectral value"))?,
            })
        }
        "a" => {
            need(2)?;
            Ok(Primitive::A {
                lo: args[0],
                hi: args[1],
                z: value.ok_or_else(|| bad("A needs a spectral value"))?,
            })
        }
        "scalar" => {
            if !args.is_empty() {
                return Err(bad("scalar takes no bracket arguments"));
            }
            Ok(Primitive::Scalar(
                value.ok_or_else(|| bad("scalar needs a value"))?,
            ))
        }
        other => Err(bad(&format!("unknown operator {other:?}"))),
    }
}
