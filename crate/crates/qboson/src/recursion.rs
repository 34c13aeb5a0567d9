//! The combinatorial kernel of the one-particle-extraction recurrence.
//!
//! For colors listed in decreasing blocks `(r^{k_r}, ..., 1^{k_1})`, the
//! positions of color `p` form the interval
//! `J_p = { i : k_r + ... + k_{p+1} < i <= k_r + ... + k_p }`.
//! Extracting one color-`a` particle produces a sum over chains
//! `r >= p(t) > ... > p(1) > p(0) = a` and choices `l(s) in J_{p(s)}`, each
//! term carrying
//! `prod_{s=1}^t g(z_{l(s)}, z_{l(s-1)}) *
//!  prod_{s=0}^t prod_{i in J_{p(s+1)-1} u ... u J_{p(s)}, i != l(s)} f(z_i, z_{l(s)})`
//! (with `J_{p(t+1)-1} = J_r` by agreement) and a reduced parameter list in
//! which `z_{l(s)}` is replaced by `z_{l(s-1)}` and position `l(0)` is
//! deleted.
//!
//! The same kernel drives the recurrence for both eigenfunction
//! constructions and the vacuum-bra expansion of the boson picture; only
//! the `l(t)`-dependent prefactor differs between callers.

use crate::error::{Error, Result};
use crate::hecke::TensorVector;
use crate::process::SpeciesCounts;
use crate::scalars::{f_factor, g_factor, Rational, SpectralParams};

/// One term of the extraction sum for a fixed color `a`.
#[derive(Clone, Debug)]
pub struct ChainTerm {
    /// The position `l(t)` whose parameter acquires the caller-dependent
    /// prefactor (1-based).
    pub ell_t: usize,
    /// The product of all `g` and `f` factors of the term.
    pub weight: Rational,
    /// The reduced parameter list of length `k - 1`.
    pub z_out: Vec<Rational>,
}

/// Block boundaries: `boundary[p]` is `k_r + ... + k_p` (1-based colors,
/// `boundary[r + 1] = 0`).
fn block_ends(counts: &[usize]) -> Vec<usize> {
    let r = counts.len();
    let mut ends = vec![0usize; r + 2];
    for p in (1..=r).rev() {
        ends[p] = ends[p + 1] + counts[p - 1];
    }
    ends
}

/// All extraction terms for one color `a` (empty when `k_a = 0`).
///
/// `z` must cover at least the positions of colors `>= a`; entries beyond
/// are carried through unchanged into `z_out`.
pub fn extraction_terms(
    q: &Rational,
    counts: &[usize],
    z: &[Rational],
    a: u8,
) -> Result<Vec<ChainTerm>> {
    let r = counts.len();
    let a = a as usize;
    if a == 0 || a > r {
        return Err(Error::Index(format!("color {a} outside 1..={r}")));
    }
    if counts[a - 1] == 0 {
        return Ok(Vec::new());
    }
    let ends = block_ends(counts);
    if z.len() < ends[a] {
        return Err(Error::Index(format!(
            "{} spectral parameters cover fewer than the {} positions of colors >= {}",
            z.len(),
            ends[a],
            a
        )));
    }

    let mut terms = Vec::new();
    // chains p(0) = a < p(1) < ... < p(t) <= r, i.e. subsets of {a+1..r}
    let upper: Vec<usize> = ((a + 1)..=r).filter(|&p| counts[p - 1] > 0).collect();
    let subsets = 1usize << upper.len();
    for mask in 0..subsets {
        let mut chain = vec![a];
        for (bit, &p) in upper.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                chain.push(p);
            }
        }
        let t = chain.len() - 1;
        // iterate over all assignments l(s) in J_{p(s)}
        let ranges: Vec<(usize, usize)> = chain
            .iter()
            .map(|&p| (ends[p + 1] + 1, ends[p]))
            .collect();
        let mut ells: Vec<usize> = ranges.iter().map(|&(lo, _)| lo).collect();
        loop {
            // weight of this assignment
            let mut weight = Rational::one();
            for s in 1..=t {
                weight *= &g_factor(q, &z[ells[s] - 1], &z[ells[s - 1] - 1])?;
            }
            for s in 0..=t {
                // union J_{p(s+1)-1} u ... u J_{p(s)} = (ends[p(s+1)], ends[p(s)]]
                // with p(t+1) = r + 1
                let hi = ends[chain[s]];
                let lo = if s == t { 0 } else { ends[chain[s + 1]] };
                for i in (lo + 1)..=hi {
                    if i != ells[s] {
                        weight *= &f_factor(q, &z[i - 1], &z[ells[s] - 1])?;
                    }
                }
            }
            // reduced parameter list
            let mut z_out = z.to_vec();
            for s in 1..=t {
                z_out[ells[s] - 1] = z[ells[s - 1] - 1].clone();
            }
            z_out.remove(ells[0] - 1);
            terms.push(ChainTerm {
                ell_t: ells[t],
                weight,
                z_out,
            });
            // advance the multi-index
            let mut s = 0;
            loop {
                if s == ells.len() {
                    break;
                }
                if ells[s] < ranges[s].1 {
                    ells[s] += 1;
                    break;
                }
                ells[s] = ranges[s].0;
                s += 1;
            }
            if s == ells.len() {
                break;
            }
        }
    }
    Ok(terms)
}

/// The full right-hand side of the recurrence at `(x_1, ..., x_{k-1}, 1)`:
///
/// `sum_a q^{k_1 + ... + k_{a-1}} sum_terms z_{l(t)} / (1 + z_{l(t)}) *
///  weight * F(counts with one color-a particle removed; z_out) (x) u_a`,
///
/// with `F` supplied by the caller (evaluated at the truncated positions).
pub fn recurrence_rhs<F>(
    params: &SpectralParams,
    counts: &SpeciesCounts,
    mut eval: F,
) -> Result<TensorVector>
where
    F: FnMut(&SpeciesCounts, &SpectralParams) -> Result<TensorVector>,
{
    let r = counts.r();
    let k = counts.k();
    let one = Rational::one();
    let mut total = TensorVector::zero(k, r);
    for a in 1..=r {
        if counts.count_of(a) == 0 {
            continue;
        }
        let below: i64 = (1..a).map(|p| counts.count_of(p) as i64).sum();
        let prefactor = params.q.pow(below)?;
        let mut reduced = counts.counts().to_vec();
        reduced[(a - 1) as usize] -= 1;
        let reduced = SpeciesCounts::new(reduced)?;
        for term in extraction_terms(&params.q, counts.counts(), &params.z, a)? {
            let z_ell = &params.z[term.ell_t - 1];
            let factor = z_ell.clone() / &(&one + z_ell);
            let sub_params = SpectralParams {
                q: params.q.clone(),
                z: term.z_out,
            };
            let sub = eval(&reduced, &sub_params)?;
            let scale = &prefactor * &(&term.weight * &factor);
            total.add_scaled(&sub.tensor_u(a), &scale);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    /// Literal transcription of the one-species extraction display:
    /// a single sum over l with weight prod_{i != l} f(z_i, z_l).
    fn one_species_terms(q: &Rational, z: &[Rational]) -> Vec<(usize, Rational, Vec<Rational>)> {
        let k = z.len();
        let mut out = Vec::new();
        for ell in 1..=k {
            let mut w = Rational::one();
            for i in 1..=k {
                if i != ell {
                    w *= &f_factor(q, &z[i - 1], &z[ell - 1]).unwrap();
                }
            }
            let mut z_out = z.to_vec();
            z_out.remove(ell - 1);
            out.push((ell, w, z_out));
        }
        out
    }

    #[test]
    fn kernel_reduces_to_single_sum_for_one_species() {
        let mut rng = SeededRng::new(31);
        for k in 1..=4usize {
            let p = rng.sample_params(k);
            let got = extraction_terms(&p.q, &[k], &p.z, 1).unwrap();
            let expect = one_species_terms(&p.q, &p.z);
            assert_eq!(got.len(), expect.len());
            for (g, e) in got.iter().zip(&expect) {
                assert_eq!(g.ell_t, e.0);
                assert_eq!(g.weight, e.1);
                assert_eq!(g.z_out, e.2);
            }
        }
    }

    /// Literal transcription of the two-species display: the three sums
    /// (color 1 with t = 0, color 1 with t = 1, color 2 with t = 0).
    #[test]
    fn kernel_matches_two_species_display() {
        let mut rng = SeededRng::new(32);
        let (k2, k1) = (2usize, 2usize);
        let k = k1 + k2;
        let p = rng.sample_params(k);
        let q = &p.q;
        let z = &p.z;

        // color a = 1, t = 0: l in (k2, k], weight prod_{i != l, 1 <= i <= k} f(z_i, z_l)
        let mut expect_a1: Vec<(usize, Rational, Vec<Rational>)> = Vec::new();
        for ell in (k2 + 1)..=k {
            let mut w = Rational::one();
            for i in 1..=k {
                if i != ell {
                    w *= &f_factor(q, &z[i - 1], &z[ell - 1]).unwrap();
                }
            }
            let mut z_out = z.to_vec();
            z_out.remove(ell - 1);
            expect_a1.push((ell, w, z_out));
        }
        // color a = 1, t = 1: l1 in (0, k2], l0 in (k2, k]
        for ell1 in 1..=k2 {
            for ell0 in (k2 + 1)..=k {
                let mut w = g_factor(q, &z[ell1 - 1], &z[ell0 - 1]).unwrap();
                for i in 1..=k2 {
                    if i != ell1 {
                        w *= &f_factor(q, &z[i - 1], &z[ell1 - 1]).unwrap();
                    }
                }
                for i in (k2 + 1)..=k {
                    if i != ell0 {
                        w *= &f_factor(q, &z[i - 1], &z[ell0 - 1]).unwrap();
                    }
                }
                let mut z_out = z.to_vec();
                z_out[ell1 - 1] = z[ell0 - 1].clone();
                z_out.remove(ell0 - 1);
                expect_a1.push((ell1, w, z_out));
            }
        }
        let got_a1 = extraction_terms(q, &[k1, k2], z, 1).unwrap();
        assert_eq!(got_a1.len(), expect_a1.len());
        for (g, e) in got_a1.iter().zip(&expect_a1) {
            assert_eq!((g.ell_t, &g.weight, &g.z_out), (e.0, &e.1, &e.2));
        }

        // color a = 2, t = 0: l in (0, k2], weight prod_{i in J_2, i != l}
        let got_a2 = extraction_terms(q, &[k1, k2], z, 2).unwrap();
        let mut expect_a2 = Vec::new();
        for ell in 1..=k2 {
            let mut w = Rational::one();
            for i in 1..=k2 {
                if i != ell {
                    w *= &f_factor(q, &z[i - 1], &z[ell - 1]).unwrap();
                }
            }
            let mut z_out = z.to_vec();
            z_out.remove(ell - 1);
            expect_a2.push((ell, w, z_out));
        }
        assert_eq!(got_a2.len(), expect_a2.len());
        for (g, e) in got_a2.iter().zip(&expect_a2) {
            assert_eq!((g.ell_t, &g.weight, &g.z_out), (e.0, &e.1, &e.2));
        }
    }

    #[test]
    fn reduced_parameters_stay_admissible() {
        let mut rng = SeededRng::new(33);
        let counts = [1usize, 2, 1];
        let k = 4;
        let p = rng.sample_params(k);
        for a in 1..=3u8 {
            for term in extraction_terms(&p.q, &counts, &p.z, a).unwrap() {
                assert_eq!(term.z_out.len(), k - 1);
                SpectralParams::new(p.q.clone(), term.z_out).unwrap();
            }
        }
    }

    #[test]
    fn empty_color_contributes_nothing() {
        let mut rng = SeededRng::new(34);
        let p = rng.sample_params(2);
        assert!(extraction_terms(&p.q, &[0, 2], &p.z, 1)
            .unwrap()
            .is_empty());
    }
}
