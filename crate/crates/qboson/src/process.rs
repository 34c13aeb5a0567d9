//! The multi-species q-Boson particle system: state space, transition rates,
//! and pointwise application of the backward generator.
//!
//! A state is a pair `(x, nu)` of weakly decreasing particle positions and a
//! color word; particles of color `a` hop one site to the left with the
//! cluster-dependent rate `(1 - q^{2 n_a}) / (1 - q^2) * q^{2 sum_{p>a} n_p}`.
//! The backward generator acts on functions of states by
//! `(H h)(s) = sum_{s'} rate(s -> s') (h(s') - h(s))`.
//!
//! This module also houses the dictionary between tensor-valued functions
//! and functions on states: [`extract_component`] divides a tensor
//! coefficient by `q^{t(nu)}`, with `t` the inversion number.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hecke::TensorVector;
use crate::scalars::Rational;

/// Particle counts per color: `counts[a-1]` is the number of color-`a`
/// particles, `1 <= a <= r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeciesCounts {
    counts: Vec<usize>,
}

impl SpeciesCounts {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Param("at least one color is required".into()));
        }
        if counts.iter().sum::<usize>() == 0 {
            return Err(Error::Param("at least one particle is required".into()));
        }
        Ok(SpeciesCounts { counts })
    }

    /// Number of colors `r`.
    pub fn r(&self) -> u8 {
        self.counts.len() as u8
    }

    /// Total particle number `k`.
    pub fn k(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn count_of(&self, color: u8) -> usize {
        self.counts[(color - 1) as usize]
    }

    /// All color words with these counts, in lexicographic order.
    pub fn color_words(&self) -> Vec<Vec<u8>> {
        let mut words = Vec::new();
        let mut remaining = self.counts.clone();
        let mut word = Vec::with_capacity(self.k());
        fn rec(
            remaining: &mut Vec<usize>,
            word: &mut Vec<u8>,
            k: usize,
            out: &mut Vec<Vec<u8>>,
        ) {
            if word.len() == k {
                out.push(word.clone());
                return;
            }
            for a in 0..remaining.len() {
                if remaining[a] > 0 {
                    remaining[a] -= 1;
                    word.push((a + 1) as u8);
                    rec(remaining, word, k, out);
                    word.pop();
                    remaining[a] += 1;
                }
            }
        }
        rec(&mut remaining, &mut word, self.k(), &mut words);
        words
    }

    /// The word `(r^{k_r}, ..., 1^{k_1})`: colors listed in decreasing order.
    pub fn descending_word(&self) -> Vec<u8> {
        let mut word = Vec::with_capacity(self.k());
        for a in (1..=self.r()).rev() {
            word.extend(std::iter::repeat_n(a, self.count_of(a)));
        }
        word
    }

    /// Counts of a given color word; errors if a letter exceeds `r`.
    pub fn of_word(word: &[u8], r: u8) -> Result<Self> {
        let mut counts = vec![0usize; r as usize];
        for &c in word {
            if c == 0 || c > r {
                return Err(Error::Param(format!("color {c} outside 1..={r}")));
            }
            counts[(c - 1) as usize] += 1;
        }
        SpeciesCounts::new(counts)
    }
}

/// The inversion number `t(nu) = #{(i, j) : i < j, nu_i > nu_j}`.
pub fn inversion_number(nu: &[u8]) -> usize {
    let mut t = 0;
    for i in 0..nu.len() {
        for j in (i + 1)..nu.len() {
            if nu[i] > nu[j] {
                t += 1;
            }
        }
    }
    t
}

/// Membership of `nu` in the set of words with the given counts.
pub fn word_matches_counts(nu: &[u8], counts: &SpeciesCounts) -> bool {
    match SpeciesCounts::of_word(nu, counts.r()) {
        Ok(c) => c == *counts,
        Err(_) => false,
    }
}

/// A particle configuration: positions `x_1 >= ... >= x_k` and colors
/// `nu_1, ..., nu_k`, with colors weakly increasing inside every block of
/// equal positions (the canonical representative).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub x: Vec<i64>,
    pub nu: Vec<u8>,
}

impl Configuration {
    /// Accepts only canonical data.
    pub fn new(x: Vec<i64>, nu: Vec<u8>) -> Result<Self> {
        if x.len() != nu.len() || x.is_empty() {
            return Err(Error::Param(
                "positions and colors must have equal nonzero length".into(),
            ));
        }
        let c = Configuration { x, nu };
        if !c.is_canonical() {
            return Err(Error::Param(format!(
                "configuration (x = {:?}, nu = {:?}) is not canonical",
                c.x, c.nu
            )));
        }
        Ok(c)
    }

    /// Sorts arbitrary (position, color) pairs into the canonical form.
    pub fn canonicalize(pairs: Vec<(i64, u8)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Param("empty configuration".into()));
        }
        let mut pairs = pairs;
        pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let (x, nu) = pairs.into_iter().unzip();
        Ok(Configuration { x, nu })
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    pub fn is_canonical(&self) -> bool {
        for i in 0..self.k() - 1 {
            if self.x[i] < self.x[i + 1] {
                return false;
            }
            if self.x[i] == self.x[i + 1] && self.nu[i] > self.nu[i + 1] {
                return false;
            }
        }
        true
    }

    /// Particle counts per color at each occupied site, sites descending.
    pub fn clusters(&self, r: u8) -> BTreeMap<i64, Vec<usize>> {
        let mut clusters: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (xi, &c) in self.x.iter().zip(&self.nu) {
            let entry = clusters.entry(*xi).or_insert_with(|| vec![0; r as usize]);
            entry[(c - 1) as usize] += 1;
        }
        clusters
    }
}

/// The transition rate for one color-`a` particle leaving a cluster with
/// per-color counts `n`: `(1 - q^{2 n_a}) / (1 - q^2) * q^{2 sum_{p>a} n_p}`.
pub fn hop_rate(q: &Rational, cluster: &[usize], a: u8) -> Result<Rational> {
    let idx = (a - 1) as usize;
    if idx >= cluster.len() || cluster[idx] == 0 {
        return Err(Error::EmptyCluster { color: a });
    }
    let n_a = cluster[idx] as i64;
    let one = Rational::one();
    let q2 = q * q;
    let numer = &one - &q2.pow(n_a)?;
    let denom = &one - &q2;
    let higher: i64 = cluster[idx + 1..].iter().sum::<usize>() as i64;
    Ok(numer.div_exact(&denom)? * q2.pow(higher)?)
}

/// All single-hop transitions out of `c`, one entry per (occupied site,
/// color present there), with their rates. Targets are canonical and
/// pairwise distinct.
pub fn outgoing_moves(q: &Rational, c: &Configuration, r: u8) -> Result<Vec<(Configuration, Rational)>> {
    let clusters = c.clusters(r);
    let mut moves = Vec::new();
    for (&site, counts) in clusters.iter().rev() {
        for a in 1..=r {
            if counts[(a - 1) as usize] == 0 {
                continue;
            }
            let rate = hop_rate(q, counts, a)?;
            let mut pairs: Vec<(i64, u8)> = c.x.iter().copied().zip(c.nu.iter().copied()).collect();
            let moved = pairs
                .iter()
                .position(|&(xi, ci)| xi == site && ci == a)
                .expect("cluster bookkeeping");
            pairs[moved].0 = site - 1;
            moves.push((Configuration::canonicalize(pairs)?, rate));
        }
    }
    Ok(moves)
}

/// Applies the backward generator to an evaluation handle at one state:
/// `sum over targets (y, rate) of rate * (h(y) - h(c))`.
pub fn apply_generator<F>(q: &Rational, c: &Configuration, r: u8, mut h: F) -> Result<Rational>
where
    F: FnMut(&Configuration) -> Result<Rational>,
{
    let here = h(c)?;
    let mut acc = Rational::zero();
    for (target, rate) in outgoing_moves(q, c, r)? {
        acc += &(rate * (h(&target)? - &here));
    }
    Ok(acc)
}

/// The component `gamma_nu(x)` of the dictionary
/// `gamma(x) = sum_nu q^{t(nu)} gamma_nu(x) u_nu`: reads the coefficient of
/// `u_nu` in `v` and divides by `q^{t(nu)}`. An absent coefficient reads 0.
pub fn extract_component(q: &Rational, v: &TensorVector, nu: &[u8]) -> Result<Rational> {
    let coeff = v.coeff(nu);
    if coeff.is_zero() {
        return Ok(Rational::zero());
    }
    let t = inversion_number(nu) as i64;
    coeff.div_exact(&q.pow(t)?)
}
