//! The Hecke-algebra construction of the eigenfunctions.
//!
//! On the tensor space `U^{(x) k}` with `U = C^r` the operator `R_i` acts on
//! adjacent slots by
//! `u_a (x) u_b -> q u_b (x) u_a` (a > b), identity (a = b),
//! `(1-q^2) u_a (x) u_b + q u_b (x) u_a` (a < b),
//! satisfying the quadratic relation `(R_i - 1)(R_i + q^2) = 0` and the
//! braid relations. From it we build
//! - [`apply_y`]: `Y_i(z, w) = (R_i + g(z, w)) / f(z, w)`,
//! - [`phi_apply`]: the intertwiner `phi(tau; z)` along a reduced word,
//! - [`eigenfunction_h`]: the Bethe-type eigenfunction as a sum over the
//!   symmetric group,
//! - [`bcps_closed_form`]: the scalar one-species closed form,
//! - [`apply_z_operator`] and [`recurrence_check_h`]: the auxiliary
//!   operators and the exact one-particle-extraction recurrence.
//!
//! Vectors in `U_0 (x) U^{(x) m}` (the construction with a distinguished
//! zeroth slot) are embedded as `(m+1)`-slot tensors with every slot index
//! shifted up by one, so an operator written `Y_{i-1}` in the zeroth-slot
//! indexing acts here at position `i`.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::process::SpeciesCounts;
use crate::recursion::recurrence_rhs;
use crate::scalars::{f_factor, g_factor, Rational, SpectralParams};

/// A sparse element of `U^{(x) k}`: finite map from length-`k` color words
/// to rational coefficients, zero coefficients never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorVector {
    k: usize,
    r: u8,
    coeffs: BTreeMap<Vec<u8>, Rational>,
}

impl TensorVector {
    pub fn zero(k: usize, r: u8) -> Self {
        TensorVector {
            k,
            r,
            coeffs: BTreeMap::new(),
        }
    }

    /// The basis vector `u_{w_1} (x) ... (x) u_{w_k}`.
    pub fn basis(word: &[u8], r: u8) -> Result<Self> {
        for &c in word {
            if c == 0 || c > r {
                return Err(Error::Index(format!("color {c} outside 1..={r}")));
            }
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(word.to_vec(), Rational::one());
        Ok(TensorVector {
            k: word.len(),
            r,
            coeffs,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> u8 {
        self.r
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, word: &[u8]) -> Rational {
        self.coeffs.get(word).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u8>, &Rational)> {
        self.coeffs.iter()
    }

    pub fn insert_add(&mut self, word: Vec<u8>, value: Rational) {
        if value.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(word).or_insert_with(Rational::zero);
        *entry += &value;
        if entry.is_zero() {
            // remove to keep the sparse canonical form
            let key: Vec<u8> = self
                .coeffs
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .unwrap();
            self.coeffs.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, other: &TensorVector, scale: &Rational) {
        for (word, c) in &other.coeffs {
            self.insert_add(word.clone(), c * scale);
        }
    }

    pub fn scale(&mut self, s: &Rational) {
        if s.is_zero() {
            self.coeffs.clear();
            return;
        }
        for v in self.coeffs.values_mut() {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: &Rational) -> TensorVector {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn add(&self, other: &TensorVector) -> TensorVector {
        let mut out = self.clone();
        out.add_scaled(other, &Rational::one());
        out
    }

    pub fn sub(&self, other: &TensorVector) -> TensorVector {
        let mut out = self.clone();
        out.add_scaled(other, &Rational::from_int(-1));
        out
    }

    /// Tensor with `u_a` appended as a new last slot.
    pub fn tensor_u(&self, a: u8) -> TensorVector {
        let mut coeffs = BTreeMap::new();
        for (word, c) in &self.coeffs {
            let mut w = word.clone();
            w.push(a);
            coeffs.insert(w, c.clone());
        }
        TensorVector {
            k: self.k + 1,
            r: self.r.max(a),
            coeffs,
        }
    }

    /// First component on which the two vectors differ.
    pub fn first_difference(&self, other: &TensorVector) -> Option<(Vec<u8>, Rational, Rational)> {
        let mut words: std::collections::BTreeSet<Vec<u8>> =
            self.coeffs.keys().cloned().collect();
        words.extend(other.coeffs.keys().cloned());
        for w in words {
            let a = self.coeff(&w);
            let b = other.coeff(&w);
            if a != b {
                return Some((w, a, b));
            }
        }
        None
    }
}

impl fmt::Display for TensorVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (word, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let w: Vec<String> = word.iter().map(|c| c.to_string()).collect();
            write!(f, "({}) u({})", c, w.join(","))?;
        }
        Ok(())
    }
}

impl Serialize for TensorVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("TensorVector", 3)?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("r", &self.r)?;
        let coeffs: BTreeMap<String, String> = self
            .coeffs
            .iter()
            .map(|(w, c)| {
                let key: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                (key.join(","), c.to_string())
            })
            .collect();
        st.serialize_field("coeffs", &coeffs)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for TensorVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            k: usize,
            r: u8,
            coeffs: BTreeMap<String, String>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut out = TensorVector::zero(raw.k, raw.r);
        for (key, val) in raw.coeffs {
            let word: std::result::Result<Vec<u8>, _> =
                key.split(',').map(|p| p.trim().parse::<u8>()).collect();
            let word = word.map_err(|_| D::Error::custom(format!("bad color word {key:?}")))?;
            if word.len() != raw.k {
                return Err(D::Error::custom(format!(
                    "word {key:?} has length {} but k = {}",
                    word.len(),
                    raw.k
                )));
            }
            let c: Rational = val
                .parse()
                .map_err(|e| D::Error::custom(format!("{e}")))?;
            out.insert_add(word, c);
        }
        Ok(out)
    }
}

/// Applies `R_i` to the slots `(i, i+1)` (1-based), extended linearly.
pub fn apply_r(q: &Rational, i: usize, v: &TensorVector) -> Result<TensorVector> {
    if i == 0 || i >= v.k() {
        return Err(Error::Index(format!(
            "R_{i} does not act on {} tensor slots",
            v.k()
        )));
    }
    let one = Rational::one();
    let q2 = q * q;
    let coeff_keep = &one - &q2;
    let mut out = TensorVector::zero(v.k(), v.r());
    for (word, c) in v.iter() {
        let a = word[i - 1];
        let b = word[i];
        if a == b {
            out.insert_add(word.clone(), c.clone());
        } else {
            let mut swapped = word.clone();
            swapped.swap(i - 1, i);
            if a > b {
                out.insert_add(swapped, c * q);
            } else {
                out.insert_add(word.clone(), c * &coeff_keep);
                out.insert_add(swapped, c * q);
            }
        }
    }
    Ok(out)
}

/// Applies `Y_i(z, w) = (R_i + g(z, w)) / f(z, w)`.
///
/// Errors: [`Error::Pole`] when `z = w`, [`Error::SingularY`] when
/// `z = q^2 w` (vanishing `f`).
pub fn apply_y(
    q: &Rational,
    i: usize,
    z: &Rational,
    w: &Rational,
    v: &TensorVector,
) -> Result<TensorVector> {
    let f = f_factor(q, z, w)?;
    if f.is_zero() {
        return Err(Error::SingularY {
            z: z.to_string(),
            w: w.to_string(),
        });
    }
    let g = g_factor(q, z, w)?;
    let mut out = apply_r(q, i, v)?;
    out.add_scaled(v, &g);
    out.scale(&f.recip()?);
    Ok(out)
}

/// A permutation of `{1, ..., k}` in one-line form, together with a chosen
/// reduced word in adjacent transpositions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Permutation {
    /// `line[p - 1] = tau(p)`, values `1..=k`.
    line: Vec<usize>,
}

impl Permutation {
    pub fn identity(k: usize) -> Self {
        Permutation {
            line: (1..=k).collect(),
        }
    }

    pub fn from_one_line(line: Vec<usize>) -> Result<Self> {
        let k = line.len();
        let mut seen = vec![false; k + 1];
        for &v in &line {
            if v == 0 || v > k || seen[v] {
                return Err(Error::Param(format!("{line:?} is not a permutation")));
            }
            seen[v] = true;
        }
        Ok(Permutation { line })
    }

    pub fn k(&self) -> usize {
        self.line.len()
    }

    pub fn one_line(&self) -> &[usize] {
        &self.line
    }

    /// `tau(p)` for `1 <= p <= k`.
    pub fn apply(&self, p: usize) -> usize {
        self.line[p - 1]
    }

    /// `tau^{-1}(v)` for `1 <= v <= k`.
    pub fn inv(&self, v: usize) -> usize {
        self.line.iter().position(|&x| x == v).unwrap() + 1
    }

    pub fn inverse(&self) -> Permutation {
        let mut line = vec![0; self.k()];
        for p in 1..=self.k() {
            line[self.apply(p) - 1] = p;
        }
        Permutation { line }
    }

    /// Function composition `(self . other)(p) = self(other(p))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        let line = (1..=self.k()).map(|p| self.apply(other.apply(p))).collect();
        Permutation { line }
    }

    pub fn inversions(&self) -> usize {
        let mut t = 0;
        for i in 0..self.k() {
            for j in (i + 1)..self.k() {
                if self.line[i] > self.line[j] {
                    t += 1;
                }
            }
        }
        t
    }

    pub fn is_identity(&self) -> bool {
        self.line.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    /// Left multiplication by the transposition of values `i, i+1`.
    pub fn left_multiply_sigma(&self, i: usize) -> Permutation {
        let line = self
            .line
            .iter()
            .map(|&v| {
                if v == i {
                    i + 1
                } else if v == i + 1 {
                    i
                } else {
                    v
                }
            })
            .collect();
        Permutation { line }
    }

    /// Whether left multiplication by `sigma_i` adds an inversion.
    pub fn sigma_increases(&self, i: usize) -> bool {
        self.inv(i) < self.inv(i + 1)
    }

    /// A reduced word `w_1, ..., w_L` such that the chain
    /// `pi_j = sigma_{w_j} pi_{j-1}` starting from the identity reaches
    /// this permutation with the length growing by one at each step.
    ///
    /// The word is obtained deterministically by repeatedly peeling the
    /// smallest descent of the inverse, i.e. bubble-sorting the one-line
    /// form.
    pub fn reduced_word(&self) -> Vec<usize> {
        let mut cur = self.clone();
        let mut peeled = Vec::with_capacity(cur.inversions());
        while !cur.is_identity() {
            let i = (1..cur.k())
                .find(|&i| cur.inv(i) > cur.inv(i + 1))
                .expect("non-identity permutation has a value descent");
            peeled.push(i);
            cur = cur.left_multiply_sigma(i);
        }
        peeled.reverse();
        peeled
    }

    /// Every reduced word of this permutation, in chain order.
    pub fn all_reduced_words(&self) -> Vec<Vec<usize>> {
        if self.is_identity() {
            return vec![Vec::new()];
        }
        let mut words = Vec::new();
        for i in 1..self.k() {
            if self.inv(i) > self.inv(i + 1) {
                let shorter = self.left_multiply_sigma(i);
                for mut w in shorter.all_reduced_words() {
                    w.push(i);
                    words.push(w);
                }
            }
        }
        words
    }

    /// All permutations of `{1, ..., k}` in lexicographic one-line order.
    pub fn all(k: usize) -> Vec<Permutation> {
        let mut line: Vec<usize> = (1..=k).collect();
        let mut out = vec![Permutation { line: line.clone() }];
        while next_permutation(&mut line) {
            out.push(Permutation { line: line.clone() });
        }
        out
    }
}

fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// Applies `phi(tau; z)` to `v` along an explicit chain word: the letters
/// `w_1, ..., w_L` are consumed left to right, each applying
/// `Y_{w_j}(z_{pi^{-1}(w_j)}, z_{pi^{-1}(w_j + 1)})` where `pi` is the
/// permutation reached so far.
pub fn phi_apply_along_word(
    word: &[usize],
    params: &SpectralParams,
    v: &TensorVector,
) -> Result<TensorVector> {
    let mut pi = Permutation::identity(params.k());
    let mut cur = v.clone();
    for &i in word {
        let zi = &params.z[pi.inv(i) - 1];
        let wi = &params.z[pi.inv(i + 1) - 1];
        cur = apply_y(&params.q, i, zi, wi, &cur)?;
        pi = pi.left_multiply_sigma(i);
    }
    Ok(cur)
}

/// Applies the intertwiner `phi(tau; z)` to `v`, built along the
/// deterministic reduced word of `tau`. Independence of the chosen word is
/// a consequence of the braid relations and is checked in the tests rather
/// than assumed.
pub fn phi_apply(tau: &Permutation, params: &SpectralParams, v: &TensorVector) -> Result<TensorVector> {
    phi_apply_along_word(&tau.reduced_word(), params, v)
}

fn check_positions(x: &[i64], k: usize) -> Result<()> {
    if x.len() != k {
        return Err(Error::Param(format!(
            "{} positions given for {} particles",
            x.len(),
            k
        )));
    }
    if x.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Param(format!("positions {x:?} are not descending")));
    }
    Ok(())
}

/// The eigenfunction `h` as a tensor-valued function of the positions:
///
/// `h(x) = prod_{i<j} f(z_i, z_j) * sum_{tau in S_k}
///   prod_i (z_{tau^{-1}(i)} / (1 + z_{tau^{-1}(i)}))^{x_i} phi(tau; z) u_mu`.
///
/// Direct enumeration of the symmetric group; intended for `k <= 6`.
pub fn eigenfunction_h(
    params: &SpectralParams,
    mu: &[u8],
    x: &[i64],
    r: u8,
) -> Result<TensorVector> {
    params.validate()?;
    let k = params.k();
    if mu.len() != k {
        return Err(Error::Param(format!(
            "color word length {} does not match k = {}",
            mu.len(),
            k
        )));
    }
    check_positions(x, k)?;
    let one = Rational::one();
    // weights w_i = z_i / (1 + z_i)
    let weights: Vec<Rational> = params
        .z
        .iter()
        .map(|z| z.clone() / &(&one + z))
        .collect();

    let base = TensorVector::basis(mu, r)?;
    // Dynamic programming over the weak order: phi(sigma_i tau) v is built
    // from phi(tau) v, each permutation computed exactly once.
    let mut layer: BTreeMap<Vec<usize>, TensorVector> = BTreeMap::new();
    layer.insert(Permutation::identity(k).one_line().to_vec(), base);
    let mut total = TensorVector::zero(k, r);
    while !layer.is_empty() {
        let mut next: BTreeMap<Vec<usize>, TensorVector> = BTreeMap::new();
        for (line, vec) in &layer {
            let tau = Permutation::from_one_line(line.clone())?;
            // prod_i (z_{tau^{-1}(i)}/(1+z_{tau^{-1}(i)}))^{x_i}
            let mut weight = Rational::one();
            for (i, &xi) in x.iter().enumerate() {
                weight *= &weights[tau.inv(i + 1) - 1].pow(xi)?;
            }
            total.add_scaled(vec, &weight);
            for i in 1..k {
                if tau.sigma_increases(i) {
                    let bigger = tau.left_multiply_sigma(i);
                    if let std::collections::btree_map::Entry::Vacant(slot) =
                        next.entry(bigger.one_line().to_vec())
                    {
                        let zi = &params.z[tau.inv(i) - 1];
                        let wi = &params.z[tau.inv(i + 1) - 1];
                        slot.insert(apply_y(&params.q, i, zi, wi, vec)?);
                    }
                }
            }
        }
        layer = next;
    }
    total.scale(&params.f_product()?);
    Ok(total)
}

/// The one-species closed form: the coefficient of `u_1 (x) ... (x) u_1`,
///
/// `sum_{sigma in S_k} prod_{i<j} (z_{sigma(i)} - q^2 z_{sigma(j)}) /
///  (z_{sigma(i)} - z_{sigma(j)}) * prod_i (z_{sigma(i)} / (1 + z_{sigma(i)}))^{x_i}`.
pub fn bcps_closed_form(params: &SpectralParams, x: &[i64]) -> Result<Rational> {
    params.validate()?;
    let k = params.k();
    check_positions(x, k)?;
    let one = Rational::one();
    let weights: Vec<Rational> = params
        .z
        .iter()
        .map(|z| z.clone() / &(&one + z))
        .collect();
    let mut total = Rational::zero();
    for sigma in Permutation::all(k) {
        let mut term = Rational::one();
        for i in 1..=k {
            for j in (i + 1)..=k {
                term *= &params.f_ij(sigma.apply(i), sigma.apply(j))?;
            }
        }
        for (i, &xi) in x.iter().enumerate() {
            term *= &weights[sigma.apply(i + 1) - 1].pow(xi)?;
        }
        total += &term;
    }
    Ok(total)
}

/// The operator `Z_l^J(z)` on a vector with a distinguished zeroth slot:
///
/// `prod_{i in J, i<l} f(z_l, z_i) * prod_{i in J, i>l} f(z_i, z_l) *
///  (reverse-ordered prod_{i in J, i<l} Y_{i-1}(z_l, z_i))`.
///
/// `v` must carry the embedded zeroth slot, i.e. have `m + 1` slots for
/// paper positions `1..=m`; `J = j_lo..=j_hi` and `l in J`.
pub fn apply_z_operator(
    q: &Rational,
    ell: usize,
    j_lo: usize,
    j_hi: usize,
    z: &[Rational],
    v: &TensorVector,
) -> Result<TensorVector> {
    if j_lo > j_hi || ell < j_lo || ell > j_hi {
        return Err(Error::Index(format!(
            "l = {ell} outside the interval J = [{j_lo}, {j_hi}]"
        )));
    }
    if j_hi > z.len() {
        return Err(Error::Index(format!(
            "J = [{j_lo}, {j_hi}] exceeds the {} spectral parameters",
            z.len()
        )));
    }
    let z_ell = &z[ell - 1];
    let mut out = v.clone();
    // reverse-ordered product applies the smallest paper index first;
    // paper slot pairs (i-1, i) sit at positions (i, i+1) here
    for i in j_lo..ell {
        out = apply_y(q, i, z_ell, &z[i - 1], &out)?;
    }
    let mut scalar = Rational::one();
    for i in j_lo..ell {
        scalar *= &f_factor(q, z_ell, &z[i - 1])?;
    }
    for i in (ell + 1)..=j_hi {
        scalar *= &f_factor(q, &z[i - 1], z_ell)?;
    }
    out.scale(&scalar);
    Ok(out)
}

/// Checks the exact one-particle-extraction recurrence for `h`: the value
/// at `(x_1, ..., x_{k-1}, 1)` with colors `(r^{k_r}, ..., 1^{k_1})`
/// against the nested extraction sums over chains of colors.
///
/// Preconditions: `x_k = 1` and `x_1 >= ... >= x_{k-1} >= 1`.
pub fn recurrence_check_h(
    params: &SpectralParams,
    counts: &SpeciesCounts,
    x: &[i64],
) -> Result<()> {
    let k = counts.k();
    if k < 2 {
        return Err(Error::Param("recurrence needs at least two particles".into()));
    }
    check_positions(x, k)?;
    if x[k - 1] != 1 || x[k - 2] < 1 {
        return Err(Error::Param(format!(
            "positions {x:?} must end at x_k = 1 with x_i >= 1"
        )));
    }
    let r = counts.r();
    let mu = counts.descending_word();
    let lhs = eigenfunction_h(params, &mu, x, r)?;
    let prefix = &x[..k - 1];
    let rhs = recurrence_rhs(params, counts, |sub_counts, sub_params| {
        eigenfunction_h(sub_params, &sub_counts.descending_word(), prefix, r)
    })?;
    if let Some((word, l, rr)) = lhs.first_difference(&rhs) {
        return Err(Error::IdentityFailed {
            identity: "recurrence(h)".into(),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn random_vector(rng: &mut SeededRng, k: usize, alphabet: u8, terms: usize) -> TensorVector {
        let mut v = TensorVector::zero(k, alphabet);
        for _ in 0..terms {
            let word: Vec<u8> = (0..k)
                .map(|_| rng.range_i64(1, alphabet as i64) as u8)
                .collect();
            let c = Rational::new(rng.range_i64(-9, 9), rng.range_i64(1, 7)).unwrap();
            v.insert_add(word, c);
        }
        v
    }

    #[test]
    fn r_matrix_on_basis_pairs() {
        let q = r(1, 2);
        let v = TensorVector::basis(&[1, 1], 2).unwrap();
        assert_eq!(apply_r(&q, 1, &v).unwrap(), v);

        let v = TensorVector::basis(&[2, 1], 2).unwrap();
        let got = apply_r(&q, 1, &v).unwrap();
        let expect = TensorVector::basis(&[1, 2], 2).unwrap().scaled(&q);
        assert_eq!(got, expect);

        let v = TensorVector::basis(&[1, 2], 2).unwrap();
        let got = apply_r(&q, 1, &v).unwrap();
        let mut expect = v.scaled(&(Rational::one() - &(&q * &q)));
        expect.add_scaled(&TensorVector::basis(&[2, 1], 2).unwrap(), &q);
        assert_eq!(got, expect);
    }

    #[test]
    fn r_matrix_index_bounds() {
        let q = r(1, 2);
        let v = TensorVector::basis(&[1, 2], 2).unwrap();
        assert!(apply_r(&q, 0, &v).is_err());
        assert!(apply_r(&q, 2, &v).is_err());
    }

    #[test]
    fn hecke_quadratic_braid_and_commuting_relations() {
        let mut rng = SeededRng::new(11);
        for &(k, alphabet) in &[(3usize, 2u8), (4, 3), (5, 3)] {
            let q = rng.sample_q();
            let q2 = &q * &q;
            let v = random_vector(&mut rng, k, alphabet, 6);
            for i in 1..k {
                // (R_i - 1)(R_i + q^2) = 0
                let rv = apply_r(&q, i, &v).unwrap();
                let lhs = apply_r(&q, i, &rv)
                    .unwrap()
                    .add(&rv.scaled(&(&q2 - &Rational::one())))
                    .sub(&v.scaled(&q2));
                assert!(lhs.is_zero(), "quadratic relation failed at i = {i}");
            }
            for i in 1..k.saturating_sub(1) {
                // R_i R_{i+1} R_i = R_{i+1} R_i R_{i+1}
                let a = apply_r(&q, i, &apply_r(&q, i + 1, &apply_r(&q, i, &v).unwrap()).unwrap())
                    .unwrap();
                let b = apply_r(
                    &q,
                    i + 1,
                    &apply_r(&q, i, &apply_r(&q, i + 1, &v).unwrap()).unwrap(),
                )
                .unwrap();
                assert_eq!(a, b, "braid relation failed at i = {i}");
            }
            for i in 1..k {
                for j in 1..k {
                    if i.abs_diff(j) >= 2 {
                        let a = apply_r(&q, i, &apply_r(&q, j, &v).unwrap()).unwrap();
                        let b = apply_r(&q, j, &apply_r(&q, i, &v).unwrap()).unwrap();
                        assert_eq!(a, b);
                    }
                }
            }
        }
    }

    #[test]
    fn r_preserves_color_multisets() {
        let mut rng = SeededRng::new(12);
        let q = rng.sample_q();
        let v = TensorVector::basis(&[2, 3, 1, 2], 3).unwrap();
        let got = apply_r(&q, 2, &v).unwrap();
        for (word, _) in got.iter() {
            let mut w = word.clone();
            w.sort_unstable();
            assert_eq!(w, vec![1, 2, 2, 3]);
        }
    }

    #[test]
    fn y_at_w_zero_is_r_shifted_by_g() {
        // f(z, 0) = 1 and g(z, 0) = -(1 - q^2), so Y_i(z, 0) = R_i - (1 - q^2)
        let mut rng = SeededRng::new(13);
        let q = rng.sample_q();
        let z = r(3, 2);
        let v = random_vector(&mut rng, 3, 2, 4);
        let got = apply_y(&q, 1, &z, &Rational::zero(), &v).unwrap();
        let shift = Rational::one() - &(&q * &q);
        let expect = apply_r(&q, 1, &v).unwrap().sub(&v.scaled(&shift));
        assert_eq!(got, expect);
    }

    #[test]
    fn y_unitarity_on_random_vectors() {
        let mut rng = SeededRng::new(14);
        for _ in 0..20 {
            let p = rng.sample_params(2);
            let v = random_vector(&mut rng, 3, 3, 5);
            for i in 1..3 {
                let once = apply_y(&p.q, i, &p.z[0], &p.z[1], &v).unwrap();
                let back = apply_y(&p.q, i, &p.z[1], &p.z[0], &once).unwrap();
                assert_eq!(back, v);
            }
        }
    }

    #[test]
    fn y_on_equal_colors_is_f_ratio() {
        let mut rng = SeededRng::new(15);
        let p = rng.sample_params(2);
        let v = TensorVector::basis(&[2, 2], 2).unwrap();
        let got = apply_y(&p.q, 1, &p.z[0], &p.z[1], &v).unwrap();
        let ratio = f_factor(&p.q, &p.z[1], &p.z[0])
            .unwrap()
            .div_exact(&f_factor(&p.q, &p.z[0], &p.z[1]).unwrap())
            .unwrap();
        assert_eq!(got, v.scaled(&ratio));
    }

    #[test]
    fn y_singularities_are_reported() {
        let q = r(1, 2);
        let v = TensorVector::basis(&[1, 2], 2).unwrap();
        let w = r(4, 1);
        let z = &(&q * &q) * &w;
        assert!(matches!(
            apply_y(&q, 1, &z, &w, &v),
            Err(Error::SingularY { .. })
        ));
        assert!(matches!(
            apply_y(&q, 1, &w, &w, &v),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn permutation_reduced_word_lengths_match_inversions() {
        for tau in Permutation::all(4) {
            let word = tau.reduced_word();
            assert_eq!(word.len(), tau.inversions());
            // replay the chain
            let mut pi = Permutation::identity(4);
            for &i in &word {
                assert!(pi.sigma_increases(i));
                pi = pi.left_multiply_sigma(i);
            }
            assert_eq!(pi, tau);
        }
    }

    #[test]
    fn phi_of_identity_is_identity() {
        let mut rng = SeededRng::new(16);
        let p = rng.sample_params(3);
        let v = random_vector(&mut rng, 3, 2, 4);
        let got = phi_apply(&Permutation::identity(3), &p, &v).unwrap();
        assert_eq!(got, v);
    }

    #[test]
    fn phi_of_single_transposition_is_one_y() {
        let mut rng = SeededRng::new(17);
        let p = rng.sample_params(2);
        let v = random_vector(&mut rng, 2, 2, 3);
        let tau = Permutation::from_one_line(vec![2, 1]).unwrap();
        let got = phi_apply(&tau, &p, &v).unwrap();
        let expect = apply_y(&p.q, 1, &p.z[0], &p.z[1], &v).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn longest_element_of_s3_is_word_independent() {
        let mut rng = SeededRng::new(18);
        let p = rng.sample_params(3);
        let v = random_vector(&mut rng, 3, 3, 5);
        let w0 = Permutation::from_one_line(vec![3, 2, 1]).unwrap();
        let words = w0.all_reduced_words();
        assert_eq!(words.len(), 2);
        let a = phi_apply_along_word(&words[0], &p, &v).unwrap();
        let b = phi_apply_along_word(&words[1], &p, &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phi_is_reduced_word_independent_on_all_of_s4() {
        let mut rng = SeededRng::new(19);
        let p = rng.sample_params(4);
        let v = random_vector(&mut rng, 4, 2, 4);
        for tau in Permutation::all(4) {
            let reference = phi_apply(&tau, &p, &v).unwrap();
            for word in tau.all_reduced_words() {
                assert_eq!(phi_apply_along_word(&word, &p, &v).unwrap(), reference);
            }
        }
    }

    #[test]
    fn phi_cocycle_property_on_random_pairs() {
        let mut rng = SeededRng::new(20);
        let k = 3;
        for _ in 0..10 {
            let p = rng.sample_params(k);
            let v = random_vector(&mut rng, k, 3, 4);
            let all = Permutation::all(k);
            let tau = all[rng.below(all.len() as u64) as usize].clone();
            let tau_prime = all[rng.below(all.len() as u64) as usize].clone();
            let lhs = phi_apply(&tau_prime.compose(&tau), &p, &v).unwrap();
            let permuted = SpectralParams {
                q: p.q.clone(),
                z: (1..=k).map(|i| p.z[tau.inv(i) - 1].clone()).collect(),
            };
            let rhs = phi_apply(&tau_prime, &permuted, &phi_apply(&tau, &p, &v).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn h_matches_a_naive_permutation_sum() {
        // independent assembly: recompute phi(tau) v separately for every
        // permutation instead of sharing prefixes along the weak order
        let mut rng = SeededRng::new(27);
        for (k, alphabet) in [(2usize, 2u8), (3, 2), (3, 3)] {
            let p = rng.sample_params(k);
            let mu: Vec<u8> = (0..k)
                .map(|_| rng.range_i64(1, alphabet as i64) as u8)
                .collect();
            let x: Vec<i64> = {
                let mut x: Vec<i64> = (0..k).map(|_| rng.range_i64(-1, 3)).collect();
                x.sort_unstable_by(|a, b| b.cmp(a));
                x
            };
            let base = TensorVector::basis(&mu, alphabet).unwrap();
            let one = Rational::one();
            let mut naive = TensorVector::zero(k, alphabet);
            for tau in Permutation::all(k) {
                let mut weight = Rational::one();
                for (i, &xi) in x.iter().enumerate() {
                    let z = &p.z[tau.inv(i + 1) - 1];
                    weight *= &(z.clone() / &(&one + z)).pow(xi).unwrap();
                }
                naive.add_scaled(&phi_apply(&tau, &p, &base).unwrap(), &weight);
            }
            naive.scale(&p.f_product().unwrap());
            let got = eigenfunction_h(&p, &mu, &x, alphabet).unwrap();
            assert_eq!(got, naive);
        }
    }

    #[test]
    fn h_of_one_particle_is_the_weight() {
        let p = SpectralParams::new(r(1, 2), vec![r(2, 1)]).unwrap();
        let got = eigenfunction_h(&p, &[1], &[1], 1).unwrap();
        let mut expect = TensorVector::basis(&[1], 1).unwrap();
        expect.scale(&r(2, 3));
        assert_eq!(got, expect);
    }

    #[test]
    fn h_shift_invariance() {
        let mut rng = SeededRng::new(21);
        let p = rng.sample_params(3);
        let mu = [2, 1, 1];
        let x = [3, 1, 0];
        let base = eigenfunction_h(&p, &mu, &x, 2).unwrap();
        for c in [-2i64, 1, 3] {
            let shifted_x: Vec<i64> = x.iter().map(|v| v + c).collect();
            let got = eigenfunction_h(&p, &mu, &shifted_x, 2).unwrap();
            let mut factor = Rational::one();
            for z in &p.z {
                factor *= &(z.clone() / &(Rational::one() + z)).pow(c).unwrap();
            }
            assert_eq!(got, base.scaled(&factor));
        }
    }

    #[test]
    fn h_boundary_condition_on_doubly_occupied_sites() {
        // components gamma_nu agree under swapping nu_i, nu_{i+1} when x_i = x_{i+1}
        let mut rng = SeededRng::new(22);
        let p = rng.sample_params(3);
        let q = &p.q;
        let h = eigenfunction_h(&p, &[1, 2, 2], &[4, 2, 2], 2).unwrap();
        let swap = crate::process::extract_component(q, &h, &[1, 2, 2]).unwrap();
        assert_eq!(
            swap,
            crate::process::extract_component(q, &h, &[1, 2, 2]).unwrap()
        );
        // slots 2,3 share a position: (2,1,2) vs (2,2,1) wearing any first color
        for first in [1u8, 2] {
            let a = crate::process::extract_component(q, &h, &[first, 1, 2]).unwrap();
            let b = crate::process::extract_component(q, &h, &[first, 2, 1]).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bcps_matches_h_for_one_species() {
        let mut rng = SeededRng::new(23);
        for k in 1..=4usize {
            let p = rng.sample_params(k);
            let mu = vec![1u8; k];
            let x: Vec<i64> = (0..k).map(|i| (k - i) as i64).collect();
            let closed = bcps_closed_form(&p, &x).unwrap();
            let h = eigenfunction_h(&p, &mu, &x, 1).unwrap();
            assert_eq!(h.coeff(&mu), closed);
        }
    }

    #[test]
    fn bcps_is_symmetric_in_z() {
        let mut rng = SeededRng::new(24);
        let p = rng.sample_params(3);
        let x = [3, 2, 1];
        let reference = bcps_closed_form(&p, &x).unwrap();
        for tau in Permutation::all(3) {
            let permuted = SpectralParams {
                q: p.q.clone(),
                z: (1..=3).map(|i| p.z[tau.apply(i) - 1].clone()).collect(),
            };
            assert_eq!(bcps_closed_form(&permuted, &x).unwrap(), reference);
        }
    }

    #[test]
    fn bcps_one_particle() {
        let p = SpectralParams::new(r(1, 3), vec![r(5, 2)]).unwrap();
        for x in [-1i64, 0, 2] {
            let got = bcps_closed_form(&p, &[x]).unwrap();
            let expect = (r(5, 2) / &r(7, 2)).pow(x).unwrap();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn z_operator_degenerate_cases() {
        let mut rng = SeededRng::new(25);
        let (p, _) = rng.sample_params_with_extra(3);
        let v = random_vector(&mut rng, 4, 3, 4);
        // |J| = 1: identity
        let got = apply_z_operator(&p.q, 2, 2, 2, &p.z, &v).unwrap();
        assert_eq!(got, v);
        // l = min(J): pure scalar prod_{i in J, i > l} f(z_i, z_l)
        let got = apply_z_operator(&p.q, 1, 1, 3, &p.z, &v).unwrap();
        let mut scalar = Rational::one();
        for i in 2..=3usize {
            scalar *= &f_factor(&p.q, &p.z[i - 1], &p.z[0]).unwrap();
        }
        assert_eq!(got, v.scaled(&scalar));
    }

    #[test]
    fn y_chain_on_a_leading_color_decomposes_into_z_operators() {
        // reverse-ordered prod of f(w, z_i) Y_{i-1}(w, z_i) on u(b, a^m)
        // equals q^m u(a^m, b) + sum_l g(w, z_l) Z_l^{[1,m]} u(b, a^m)
        let mut rng = SeededRng::new(26);
        for m in 1..=3usize {
            for _ in 0..5 {
                let (p, w) = rng.sample_params_with_extra(m);
                let (b, a) = (2u8, 1u8);
                let mut word = vec![b];
                word.extend(std::iter::repeat_n(a, m));
                let u = TensorVector::basis(&word, 2).unwrap();

                let mut lhs = u.clone();
                for i in 1..=m {
                    lhs = apply_y(&p.q, i, &w, &p.z[i - 1], &lhs).unwrap();
                    lhs.scale(&f_factor(&p.q, &w, &p.z[i - 1]).unwrap());
                }

                let mut tail = vec![a; m];
                tail.push(b);
                let mut rhs = TensorVector::basis(&tail, 2)
                    .unwrap()
                    .scaled(&p.q.pow(m as i64).unwrap());
                for ell in 1..=m {
                    let zv = apply_z_operator(&p.q, ell, 1, m, &p.z, &u).unwrap();
                    rhs.add_scaled(&zv, &g_factor(&p.q, &w, &p.z[ell - 1]).unwrap());
                }
                assert_eq!(lhs, rhs, "m = {m}");
            }
        }
    }

    #[test]
    fn tensor_vector_json_round_trip() {
        let mut v = TensorVector::zero(2, 2);
        v.insert_add(vec![2, 1], r(-3, 4));
        v.insert_add(vec![1, 2], r(5, 1));
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"k":2,"r":2,"coeffs":{"1,2":"5","2,1":"-3/4"}}"#);
        let back: TensorVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
