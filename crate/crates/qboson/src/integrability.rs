//! Integrability of the periodic chain: the braid-form R-matrix, the
//! Yang-Baxter equation for the L-operator, the transfer matrix, and the
//! commuting charges it generates.
//!
//! The transfer matrix `tau(z) = sum_a T^{[1,M]}(z)_{aa}` preserves the
//! sector of fixed per-color particle numbers and is a polynomial of
//! degree `M` in `z`; exact Lagrange interpolation at the nodes
//! `z = 1, ..., M+1` extracts its coefficient matrices `H_n`, of which
//! `H_0` is the identity and `H_1 - M` is `(1 - q^2)` times the
//! transition-rate matrix of the periodic multi-species process.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{apply_l_entry, basis_occupations, Occupation, SparseKet};
use crate::process::hop_rate;
use crate::scalars::Rational;

/// A sparse element of `C^{r+1} (x) C^{r+1}`, indexed by auxiliary pairs.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AuxVector {
    pub coeffs: BTreeMap<(u8, u8), Rational>,
}

impl AuxVector {
    pub fn zero() -> Self {
        AuxVector::default()
    }

    pub fn basis(i: u8, j: u8) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((i, j), Rational::one());
        AuxVector { coeffs }
    }

    pub fn insert_add(&mut self, key: (u8, u8), value: Rational) {
        if value.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(key).or_insert_with(Rational::zero);
        *entry += &value;
        if entry.is_zero() {
            self.coeffs.remove(&key);
        }
    }

    pub fn coeff(&self, key: (u8, u8)) -> Rational {
        self.coeffs.get(&key).cloned().unwrap_or_else(Rational::zero)
    }
}

/// The nonzero entries of the braid-form R-matrix `Rc(z)` on
/// `C^{r+1} (x) C^{r+1}`, as a map column-pair -> [(row-pair, coeff)]:
///
/// - `(z - q^2)` on every diagonal pair `(a, a)`,
/// - `(1 - q^2) z` on `(a, b)` and `(1 - q^2)` on `(b, a)` for `a < b`,
/// - exchange terms `(z - 1)` on `(a, b) -> (b, a)` and `q^2 (z - 1)` on
///   `(b, a) -> (a, b)` for `a < b`,
///
/// with the auxiliary index 0 participating as the smallest index. This
/// reading of the index-0 conventions is validated by the Yang-Baxter
/// check itself.
///
/// Keyed by column pair; each entry lists `(row pair, coefficient)`.
pub type RcheckEntries = BTreeMap<(u8, u8), Vec<((u8, u8), Rational)>>;

pub fn rcheck_entries(q: &Rational, r: u8, z: &Rational) -> RcheckEntries {
    let q2 = q * q;
    let one = Rational::one();
    let mut columns: RcheckEntries = BTreeMap::new();
    let mut push = |col: (u8, u8), row: (u8, u8), coeff: Rational| {
        if !coeff.is_zero() {
            columns.entry(col).or_default().push((row, coeff));
        }
    };
    for a in 0..=r {
        push((a, a), (a, a), z - &q2);
    }
    for a in 0..=r {
        for b in (a + 1)..=r {
            // (1-q^2)(z E_aa (x) E_bb + E_bb (x) E_aa)
            push((a, b), (a, b), (&one - &q2) * z);
            push((b, a), (b, a), &one - &q2);
            // (z-1)(E_ab (x) E_ba + q^2 E_ba (x) E_ab)
            push((b, a), (a, b), z - &one);
            push((a, b), (b, a), &q2 * &(z - &one));
        }
    }
    columns
}

/// Applies `Rc(z)` to an auxiliary vector.
pub fn apply_rcheck(q: &Rational, r: u8, z: &Rational, v: &AuxVector) -> AuxVector {
    let entries = rcheck_entries(q, r, z);
    let mut out = AuxVector::zero();
    for (col, c) in &v.coeffs {
        if let Some(rows) = entries.get(col) {
            for (row, coeff) in rows {
                out.insert_add(*row, coeff * c);
            }
        }
    }
    out
}

/// Solves `Rc(z) X = I` by exact Gaussian elimination and verifies the
/// recomposition, confirming invertibility at the given point.
pub fn check_rcheck_invertible(q: &Rational, r: u8, z: &Rational) -> Result<()> {
    let n = ((r + 1) as usize) * ((r + 1) as usize);
    let pairs: Vec<(u8, u8)> = (0..=r)
        .flat_map(|a| (0..=r).map(move |b| (a, b)))
        .collect();
    let index: BTreeMap<(u8, u8), usize> = pairs.iter().copied().zip(0..).collect();
    let entries = rcheck_entries(q, r, z);
    let mut m = vec![vec![Rational::zero(); 2 * n]; n];
    for (col, rows) in &entries {
        for (row, coeff) in rows {
            m[index[row]][index[col]] = coeff.clone();
        }
    }
    for i in 0..n {
        m[i][n + i] = Rational::one();
    }
    // forward elimination with exact pivoting
    for col in 0..n {
        let pivot = (col..n)
            .find(|&row| !m[row][col].is_zero())
            .ok_or_else(|| Error::Param(format!("Rc({z}) is singular")))?;
        m.swap(col, pivot);
        let inv = m[col][col].recip()?;
        for entry in m[col][col..].iter_mut() {
            *entry = &*entry * &inv;
        }
        let pivot_row = m[col].clone();
        for (row, data) in m.iter_mut().enumerate() {
            if row != col && !data[col].is_zero() {
                let factor = data[col].clone();
                for (entry, p) in data[col..].iter_mut().zip(&pivot_row[col..]) {
                    let delta = &factor * p;
                    *entry = &*entry - &delta;
                }
            }
        }
    }
    // recompose: Rc * inverse must be the identity
    for (j, pj) in pairs.iter().enumerate() {
        let mut column = AuxVector::zero();
        for (i, pi) in pairs.iter().enumerate() {
            column.insert_add(*pi, m[i][n + j].clone());
        }
        let image = apply_rcheck(q, r, z, &column);
        for pi in &pairs {
            let expect = if pi == pj {
                Rational::one()
            } else {
                Rational::zero()
            };
            if image.coeff(*pi) != expect {
                return Err(Error::IdentityFailed {
                    identity: "Rc inverse recomposition".into(),
                    inputs: format!("z = {z}, column {pj:?}, row {pi:?}"),
                    lhs: image.coeff(*pi).to_string(),
                    rhs: expect.to_string(),
                });
            }
        }
    }
    Ok(())
}

fn as_aux_pairs(r: u8) -> Vec<(u8, u8)> {
    (0..=r).flat_map(|a| (0..=r).map(move |b| (a, b))).collect()
}

/// Checks the Yang-Baxter equation
/// `Rc(z/w) [L(z) (x) L(w)] = [L(w) (x) L(z)] Rc(z/w)` entrywise exactly
/// on the given single-site probes.
pub fn check_ybe(q: &Rational, z: &Rational, w: &Rational, site: i64, probes: &[SparseKet]) -> Result<()> {
    if z == w {
        return Err(Error::Pole {
            z: z.to_string(),
            w: w.to_string(),
        });
    }
    let spectral = z.div_exact(w)?;
    for (idx, probe) in probes.iter().enumerate() {
        let r = probe.r();
        let entries = rcheck_entries(q, r, &spectral);
        let pairs = as_aux_pairs(r);
        for &(a, b) in &pairs {
            for &(c, d) in &pairs {
                // lhs: sum_{(e,f)} Rc_{(a,b),(e,f)} L(z)_{ec} L(w)_{fd}
                let mut lhs = SparseKet::zero(r);
                for (col, rows) in &entries {
                    let (e, f) = *col;
                    for (row, coeff) in rows {
                        if *row != (a, b) {
                            continue;
                        }
                        let first = apply_l_entry(q, site, f, d, w, probe)?;
                        if first.is_zero() {
                            continue;
                        }
                        let second = apply_l_entry(q, site, e, c, z, &first)?;
                        lhs.add_scaled(&second, coeff);
                    }
                }
                // rhs: sum_{(e,f)} L(w)_{ae} L(z)_{bf} Rc_{(e,f),(c,d)}
                let mut rhs = SparseKet::zero(r);
                if let Some(rows) = entries.get(&(c, d)) {
                    for (row, coeff) in rows {
                        let (e, f) = *row;
                        let first = apply_l_entry(q, site, b, f, z, probe)?;
                        if first.is_zero() {
                            continue;
                        }
                        let second = apply_l_entry(q, site, a, e, w, &first)?;
                        rhs.add_scaled(&second, coeff);
                    }
                }
                let diff = lhs.sub(&rhs);
                let first = diff.iter().next().map(|(occ, _)| occ.clone());
                if let Some(occ) = first {
                    return Err(Error::IdentityFailed {
                        identity: "Yang-Baxter (L)".into(),
                        inputs: format!(
                            "entry ({a},{b}) <- ({c},{d}), probe {idx}, component {occ}, z = {z}, w = {w}"
                        ),
                        lhs: lhs.coeff(&occ).to_string(),
                        rhs: rhs.coeff(&occ).to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Checks the monodromy Yang-Baxter equation over an interval, with the
/// same entrywise structure as [`check_ybe`] but `T^{[lo,hi]}` entries in
/// place of the L-operator.
pub fn check_ybe_monodromy(
    q: &Rational,
    z: &Rational,
    w: &Rational,
    lo: i64,
    hi: i64,
    probes: &[SparseKet],
) -> Result<()> {
    use crate::fock::apply_monodromy_entry;
    if z == w {
        return Err(Error::Pole {
            z: z.to_string(),
            w: w.to_string(),
        });
    }
    let spectral = z.div_exact(w)?;
    for (idx, probe) in probes.iter().enumerate() {
        let r = probe.r();
        let entries = rcheck_entries(q, r, &spectral);
        let pairs = as_aux_pairs(r);
        for &(a, b) in &pairs {
            for &(c, d) in &pairs {
                let mut lhs = SparseKet::zero(r);
                for (col, rows) in &entries {
                    let (e, f) = *col;
                    for (row, coeff) in rows {
                        if *row != (a, b) {
                            continue;
                        }
                        let first = apply_monodromy_entry(q, lo, hi, f, d, w, probe)?;
                        if first.is_zero() {
                            continue;
                        }
                        let second = apply_monodromy_entry(q, lo, hi, e, c, z, &first)?;
                        lhs.add_scaled(&second, coeff);
                    }
                }
                let mut rhs = SparseKet::zero(r);
                if let Some(rows) = entries.get(&(c, d)) {
                    for (row, coeff) in rows {
                        let (e, f) = *row;
                        let first = apply_monodromy_entry(q, lo, hi, b, f, z, probe)?;
                        if first.is_zero() {
                            continue;
                        }
                        let second = apply_monodromy_entry(q, lo, hi, a, e, w, &first)?;
                        rhs.add_scaled(&second, coeff);
                    }
                }
                let diff = lhs.sub(&rhs);
                let first = diff.iter().next().map(|(occ, _)| occ.clone());
                if let Some(occ) = first {
                    return Err(Error::IdentityFailed {
                        identity: "Yang-Baxter (monodromy)".into(),
                        inputs: format!(
                            "entry ({a},{b}) <- ({c},{d}), probe {idx}, component {occ}, z = {z}, w = {w}"
                        ),
                        lhs: lhs.coeff(&occ).to_string(),
                        rhs: rhs.coeff(&occ).to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// A dense matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Matrix {
    pub rows: Vec<Vec<Rational>>,
}

impl Matrix {
    pub fn zero(n: usize) -> Self {
        Matrix {
            rows: vec![vec![Rational::zero(); n]; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zero(n);
        for i in 0..n {
            m.rows[i][i] = Rational::one();
        }
        m
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n();
        let mut out = Matrix::zero(n);
        for i in 0..n {
            for l in 0..n {
                if self.rows[i][l].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if other.rows[l][j].is_zero() {
                        continue;
                    }
                    let delta = &self.rows[i][l] * &other.rows[l][j];
                    out.rows[i][j] += &delta;
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        let n = self.n();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.rows[i][j] -= &other.rows[i][j];
            }
        }
        out
    }

    pub fn scaled(&self, s: &Rational) -> Matrix {
        let mut out = self.clone();
        for row in &mut out.rows {
            for v in row {
                *v *= s;
            }
        }
        out
    }

    pub fn first_difference(&self, other: &Matrix) -> Option<(usize, usize, Rational, Rational)> {
        for i in 0..self.n() {
            for j in 0..self.n() {
                if self.rows[i][j] != other.rows[i][j] {
                    return Some((i, j, self.rows[i][j].clone(), other.rows[i][j].clone()));
                }
            }
        }
        None
    }
}

/// The fixed-counts sector of the length-`M` periodic chain: an explicit
/// basis of occupation tables with exactly `counts[a-1]` particles of each
/// color `a`.
#[derive(Clone, Debug)]
pub struct PeriodicSector {
    pub m_sites: i64,
    pub counts: Vec<usize>,
    pub basis: Vec<Occupation>,
    index: BTreeMap<Occupation, usize>,
}

impl PeriodicSector {
    /// Sector dimension without materializing the basis:
    /// `prod_a multichoose(M, k_a)`.
    pub fn dimension(m_sites: i64, counts: &[usize]) -> u128 {
        let m = m_sites as u128;
        counts
            .iter()
            .map(|&k| {
                // C(m + k - 1, k)
                let mut num: u128 = 1;
                let mut den: u128 = 1;
                for i in 0..k as u128 {
                    num *= m + i;
                    den *= i + 1;
                }
                num / den
            })
            .product()
    }

    pub fn new(m_sites: i64, counts: Vec<usize>) -> Result<Self> {
        if m_sites < 1 {
            return Err(Error::Param("the chain needs at least one site".into()));
        }
        if counts.is_empty() {
            return Err(Error::Param("at least one color is required".into()));
        }
        let r = counts.len() as u8;
        let total: u32 = counts.iter().map(|&k| k as u32).sum();
        let basis: Vec<Occupation> = basis_occupations(r, 1, m_sites, total)
            .into_iter()
            .filter(|occ| {
                occ.color_totals(r)
                    .iter()
                    .zip(&counts)
                    .all(|(have, want)| have == want)
            })
            .collect();
        let index = basis
            .iter()
            .cloned()
            .zip(0..)
            .collect();
        Ok(PeriodicSector {
            m_sites,
            counts,
            basis,
            index,
        })
    }

    pub fn r(&self) -> u8 {
        self.counts.len() as u8
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, occ: &Occupation) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Decomposes a ket over the sector basis; any out-of-sector amplitude
    /// is a conservation violation and raises [`Error::SectorLeak`].
    pub fn decompose(&self, ket: &SparseKet) -> Result<Vec<Rational>> {
        let mut out = vec![Rational::zero(); self.dim()];
        for (occ, c) in ket.iter() {
            match self.index_of(occ) {
                Some(i) => out[i] = c.clone(),
                None => {
                    return Err(Error::SectorLeak {
                        state: occ.to_string(),
                    })
                }
            }
        }
        Ok(out)
    }
}

/// Applies the transfer matrix `tau(z) = sum_a T^{[1, M]}(z)_{aa}` to a
/// state vector over the sector basis.
pub fn transfer_apply(
    q: &Rational,
    z: &Rational,
    sector: &PeriodicSector,
    state: &[Rational],
) -> Result<Vec<Rational>> {
    use crate::fock::apply_monodromy_entry;
    if state.len() != sector.dim() {
        return Err(Error::Param(format!(
            "state has {} entries for a dimension-{} sector",
            state.len(),
            sector.dim()
        )));
    }
    let r = sector.r();
    let mut ket = SparseKet::zero(r);
    for (occ, c) in sector.basis.iter().zip(state) {
        ket.insert_add(occ.clone(), c.clone());
    }
    let mut image = SparseKet::zero(r);
    for a in 0..=r {
        image.add_assign(&apply_monodromy_entry(
            q,
            1,
            sector.m_sites,
            a,
            a,
            z,
            &ket,
        )?);
    }
    sector.decompose(&image)
}

/// The matrix of `tau(z)` on the sector basis (columns are images of the
/// basis vectors).
pub fn transfer_matrix(q: &Rational, z: &Rational, sector: &PeriodicSector) -> Result<Matrix> {
    let n = sector.dim();
    let mut m = Matrix::zero(n);
    for j in 0..n {
        let mut e = vec![Rational::zero(); n];
        e[j] = Rational::one();
        let col = transfer_apply(q, z, sector, &e)?;
        for (row, value) in m.rows.iter_mut().zip(col) {
            row[j] = value;
        }
    }
    Ok(m)
}

/// Exact coefficients of a polynomial of degree < `nodes.len()` from its
/// values at distinct rational nodes (Newton form, expanded).
pub fn interpolate_coefficients(nodes: &[Rational], values: &[Rational]) -> Result<Vec<Rational>> {
    let n = nodes.len();
    if values.len() != n || n == 0 {
        return Err(Error::Param("node/value length mismatch".into()));
    }
    // divided differences
    let mut table: Vec<Rational> = values.to_vec();
    let mut diffs = vec![table[0].clone()];
    for level in 1..n {
        for i in 0..(n - level) {
            let num = &table[i + 1] - &table[i];
            let den = &nodes[i + level] - &nodes[i];
            table[i] = num.div_exact(&den)?;
        }
        table.truncate(n - level);
        diffs.push(table[0].clone());
    }
    // expand Newton basis products
    let mut coeffs = vec![Rational::zero(); n];
    let mut basis = vec![Rational::one()]; // coefficients of prod_{j<level}(x - x_j)
    for (level, d) in diffs.iter().enumerate() {
        for (i, b) in basis.iter().enumerate() {
            coeffs[i] += &(d * b);
        }
        if level + 1 < n {
            // multiply the basis polynomial by (x - nodes[level])
            let mut next = vec![Rational::zero(); basis.len() + 1];
            for (i, b) in basis.iter().enumerate() {
                next[i + 1] += b;
                next[i] -= &(b * &nodes[level]);
            }
            basis = next;
        }
    }
    Ok(coeffs)
}

/// All coefficient matrices `H_0, ..., H_M` of `tau(z) = sum_n H_n z^n`,
/// by exact Lagrange interpolation at the nodes `z = 1, ..., M + 1`.
pub fn transfer_coefficients(q: &Rational, sector: &PeriodicSector) -> Result<Vec<Matrix>> {
    let m_sites = sector.m_sites as usize;
    let n = sector.dim();
    let nodes: Vec<Rational> = (1..=(m_sites as i64 + 1)).map(Rational::from_int).collect();
    let evaluated: Vec<Matrix> = nodes
        .iter()
        .map(|z| transfer_matrix(q, z, sector))
        .collect::<Result<_>>()?;
    let mut out = vec![Matrix::zero(n); m_sites + 1];
    for i in 0..n {
        for j in 0..n {
            let values: Vec<Rational> = evaluated.iter().map(|m| m.rows[i][j].clone()).collect();
            let coeffs = interpolate_coefficients(&nodes, &values)?;
            for (deg, c) in coeffs.into_iter().enumerate() {
                out[deg].rows[i][j] = c;
            }
        }
    }
    Ok(out)
}

/// The coefficient matrix of `z^n` in the transfer matrix.
pub fn extract_hn(q: &Rational, sector: &PeriodicSector, n: usize) -> Result<Matrix> {
    let mut coeffs = transfer_coefficients(q, sector)?;
    if n >= coeffs.len() {
        return Err(Error::Index(format!(
            "H_{n} beyond the degree-{} expansion",
            coeffs.len() - 1
        )));
    }
    Ok(coeffs.swap_remove(n))
}

/// The transition-rate matrix of the periodic multi-species process on the
/// sector: off-diagonal `Q[s'][s]` is the rate from `s` to `s'` (one
/// particle hopping one site to the left, site 1 wrapping to site M), the
/// diagonal carries minus the total outflow.
pub fn rate_matrix(q: &Rational, sector: &PeriodicSector) -> Result<Matrix> {
    let n = sector.dim();
    let r = sector.r();
    let mut out = Matrix::zero(n);
    for (s_idx, occ) in sector.basis.iter().enumerate() {
        for site in 1..=sector.m_sites {
            let cluster: Vec<usize> = (1..=r).map(|a| occ.m(site, a) as usize).collect();
            for a in 1..=r {
                if cluster[(a - 1) as usize] == 0 {
                    continue;
                }
                let rate = hop_rate(q, &cluster, a)?;
                let dest_site = if site == 1 { sector.m_sites } else { site - 1 };
                let target = occ.bump(site, a, -1, r)?.bump(dest_site, a, 1, r)?;
                let t_idx = sector
                    .index_of(&target)
                    .ok_or_else(|| Error::SectorLeak {
                        state: target.to_string(),
                    })?;
                out.rows[t_idx][s_idx] += &rate;
                out.rows[s_idx][s_idx] -= &rate;
            }
        }
    }
    Ok(out)
}

/// Asserts `H_1 - M = (1 - q^2) Q` entrywise exactly on the sector.
pub fn check_h1_vs_rates(q: &Rational, sector: &PeriodicSector) -> Result<()> {
    let h1 = extract_hn(q, sector, 1)?;
    let m_scaled = Matrix::identity(sector.dim()).scaled(&Rational::from_int(sector.m_sites));
    let lhs = h1.sub(&m_scaled);
    let one = Rational::one();
    let rhs = rate_matrix(q, sector)?.scaled(&(&one - &(q * q)));
    if let Some((i, j, a, b)) = lhs.first_difference(&rhs) {
        return Err(Error::IdentityFailed {
            identity: "H_1 - M = (1 - q^2) Q".into(),
            inputs: format!(
                "M = {}, counts = {:?}, q = {}, entry ({i}, {j}) [states {} <- {}]",
                sector.m_sites, sector.counts, q, sector.basis[i], sector.basis[j]
            ),
            lhs: a.to_string(),
            rhs: b.to_string(),
        });
    }
    Ok(())
}

/// Asserts `[H_m, H_n] = 0` exactly on the sector.
pub fn check_commutativity(q: &Rational, sector: &PeriodicSector, m: usize, n: usize) -> Result<()> {
    let coeffs = transfer_coefficients(q, sector)?;
    if m >= coeffs.len() || n >= coeffs.len() {
        return Err(Error::Index(format!(
            "H indices ({m}, {n}) beyond degree {}",
            coeffs.len() - 1
        )));
    }
    let ab = coeffs[m].mul(&coeffs[n]);
    let ba = coeffs[n].mul(&coeffs[m]);
    if let Some((i, j, a, b)) = ab.first_difference(&ba) {
        return Err(Error::IdentityFailed {
            identity: format!("[H_{m}, H_{n}] = 0"),
            inputs: format!(
                "M = {}, counts = {:?}, q = {}, entry ({i}, {j})",
                sector.m_sites, sector.counts, q
            ),
            lhs: a.to_string(),
            rhs: b.to_string(),
        });
    }
    Ok(())
}

/// Asserts `tau(z) tau(w) = tau(w) tau(z)` exactly on the sector.
pub fn check_transfer_commute(
    q: &Rational,
    sector: &PeriodicSector,
    z: &Rational,
    w: &Rational,
) -> Result<()> {
    let tz = transfer_matrix(q, z, sector)?;
    let tw = transfer_matrix(q, w, sector)?;
    let zw = tz.mul(&tw);
    let wz = tw.mul(&tz);
    if let Some((i, j, a, b)) = zw.first_difference(&wz) {
        return Err(Error::IdentityFailed {
            identity: "tau(z) tau(w) = tau(w) tau(z)".into(),
            inputs: format!(
                "M = {}, counts = {:?}, q = {}, z = {z}, w = {w}, entry ({i}, {j})",
                sector.m_sites, sector.counts, q
            ),
            lhs: a.to_string(),
            rhs: b.to_string(),
        });
    }
    Ok(())
}

/// Bundles a sector matrix with its basis listing for JSON emission:
/// `{"m": M, "counts": [...], "basis": ["|...>", ...], "matrix": [["n/d", ...]]}`.
pub fn matrix_json(sector: &PeriodicSector, matrix: &Matrix) -> serde_json::Value {
    let basis: Vec<String> = sector.basis.iter().map(|occ| occ.to_string()).collect();
    let rows: Vec<Vec<String>> = matrix
        .rows
        .iter()
        .map(|row| row.iter().map(|v| v.to_string()).collect())
        .collect();
    serde_json::json!({
        "m": sector.m_sites,
        "counts": sector.counts,
        "basis": basis,
        "matrix": rows,
    })
}

/// Re-evaluates `sum_n H_n z^n` at a fresh node and compares against a
/// direct transfer application (exactness of the interpolation and the
/// degree bound together).
pub fn check_interpolation_consistency(
    q: &Rational,
    sector: &PeriodicSector,
    z: &Rational,
) -> Result<()> {
    let coeffs = transfer_coefficients(q, sector)?;
    let direct = transfer_matrix(q, z, sector)?;
    let n = sector.dim();
    let mut recombined = Matrix::zero(n);
    let mut power = Rational::one();
    for h in &coeffs {
        for i in 0..n {
            for j in 0..n {
                if !h.rows[i][j].is_zero() {
                    recombined.rows[i][j] += &(&h.rows[i][j] * &power);
                }
            }
        }
        power *= z;
    }
    if let Some((i, j, a, b)) = recombined.first_difference(&direct) {
        return Err(Error::IdentityFailed {
            identity: "sum H_n z^n = tau(z)".into(),
            inputs: format!(
                "M = {}, counts = {:?}, q = {}, z = {z}, entry ({i}, {j})",
                sector.m_sites, sector.counts, q
            ),
            lhs: a.to_string(),
            rhs: b.to_string(),
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

    #[test]
    fn rcheck_diagonal_and_exchange_structure() {
        let q = r(1, 2);
        let z = r(3, 1);
        for rr in 1..=3u8 {
            for a in 1..=rr {
                let v = AuxVector::basis(a, a);
                let got = apply_rcheck(&q, rr, &z, &v);
                assert_eq!(got.coeff((a, a)), &z - &(&q * &q));
                assert_eq!(got.coeffs.len(), 1);
            }
        }
        // z = 1 kills the exchange terms
        let got = apply_rcheck(&q, 2, &Rational::one(), &AuxVector::basis(2, 1));
        assert!(got.coeff((1, 2)).is_zero());
    }

    #[test]
    fn rcheck_is_invertible_at_random_points() {
        let mut rng = SeededRng::new(51);
        for rr in 1..=2u8 {
            for _ in 0..3 {
                let p = rng.sample_params(1);
                check_rcheck_invertible(&p.q, rr, &p.z[0]).unwrap();
            }
        }
    }

    #[test]
    fn ybe_holds_for_rank_one_probes() {
        let mut rng = SeededRng::new(52);
        let p = rng.sample_params(2);
        let probes: Vec<SparseKet> = basis_occupations(1, 0, 0, 2)
            .into_iter()
            .map(|occ| SparseKet::basis(1, occ))
            .collect();
        check_ybe(&p.q, &p.z[0], &p.z[1], 0, &probes).unwrap();
    }

    #[test]
    fn ybe_holds_for_rank_two_vacuum() {
        let mut rng = SeededRng::new(53);
        let p = rng.sample_params(2);
        let probes = vec![SparseKet::vacuum(2)];
        check_ybe(&p.q, &p.z[0], &p.z[1], 1, &probes).unwrap();
    }

    #[test]
    fn monodromy_ybe_on_two_sites() {
        let mut rng = SeededRng::new(54);
        let p = rng.sample_params(2);
        let probes: Vec<SparseKet> = basis_occupations(1, 1, 2, 2)
            .into_iter()
            .map(|occ| SparseKet::basis(1, occ))
            .collect();
        check_ybe_monodromy(&p.q, &p.z[0], &p.z[1], 1, 2, &probes).unwrap();
    }

    #[test]
    fn sector_enumeration_dimensions() {
        let s = PeriodicSector::new(3, vec![2]).unwrap();
        assert_eq!(s.dim(), 6);
        assert_eq!(PeriodicSector::dimension(3, &[2]), 6);
        let s = PeriodicSector::new(3, vec![1, 1]).unwrap();
        assert_eq!(s.dim(), 9);
        let s = PeriodicSector::new(4, vec![2]).unwrap();
        assert_eq!(s.dim(), 10);
        let s = PeriodicSector::new(3, vec![0]).unwrap();
        assert_eq!(s.dim(), 1);
    }

    #[test]
    fn transfer_on_empty_sector_is_scalar() {
        // tau(z)|vac> = ((1+z)^M + r z^M)|vac>
        let q = r(1, 2);
        for (m_sites, rr) in [(2i64, 1usize), (3, 2)] {
            let sector = PeriodicSector::new(m_sites, vec![0; rr]).unwrap();
            let z = r(5, 3);
            let got = transfer_apply(&q, &z, &sector, &[Rational::one()]).unwrap();
            let expect = (Rational::one() + &z).pow(m_sites).unwrap()
                + z.pow(m_sites).unwrap().scaled_by(rr as i64);
            assert_eq!(got, vec![expect]);
        }
    }

    #[test]
    fn transfer_single_site_single_particle() {
        // M = 1, r = 1, k = 1: tau(z)|1> = ((1 + z q^2) + z)|1>
        let q = r(1, 2);
        let z = r(7, 4);
        let sector = PeriodicSector::new(1, vec![1]).unwrap();
        let got = transfer_apply(&q, &z, &sector, &[Rational::one()]).unwrap();
        let expect = Rational::one() + &(&z * &(&q * &q)) + z.clone();
        assert_eq!(got, vec![expect]);
    }

    #[test]
    fn h0_is_identity_and_h1_empty_sector() {
        let q = r(1, 3);
        let sector = PeriodicSector::new(3, vec![1]).unwrap();
        let coeffs = transfer_coefficients(&q, &sector).unwrap();
        assert_eq!(coeffs[0], Matrix::identity(sector.dim()));

        // empty sector: tau(z) = (1+z)^M + r z^M, so H_1 = M and H_M = 1 + r
        let empty = PeriodicSector::new(3, vec![0, 0]).unwrap();
        let coeffs = transfer_coefficients(&q, &empty).unwrap();
        assert_eq!(coeffs[1].rows[0][0], Rational::from_int(3));
        assert_eq!(coeffs[3].rows[0][0], Rational::from_int(3)); // 1 + r = 3 for r = 2
    }

    #[test]
    fn h1_matches_rate_matrix_on_two_site_chain() {
        // M = 2, r = 1, k = 1: unit-rate symmetric two-state chain
        let q = r(1, 2);
        let sector = PeriodicSector::new(2, vec![1]).unwrap();
        let rates = rate_matrix(&q, &sector).unwrap();
        let minus_one = Rational::from_int(-1);
        assert_eq!(rates.rows[0][0], minus_one);
        assert_eq!(rates.rows[1][1], minus_one);
        assert_eq!(rates.rows[0][1], Rational::one());
        assert_eq!(rates.rows[1][0], Rational::one());
        check_h1_vs_rates(&q, &sector).unwrap();
    }

    #[test]
    fn matrix_json_lists_basis_alongside() {
        let q = r(1, 2);
        let sector = PeriodicSector::new(2, vec![1]).unwrap();
        let h1 = extract_hn(&q, &sector, 1).unwrap();
        let v = matrix_json(&sector, &h1);
        assert_eq!(v["m"], 2);
        assert_eq!(v["basis"].as_array().unwrap().len(), 2);
        assert_eq!(v["matrix"].as_array().unwrap().len(), 2);
        assert!(v["matrix"][0][0].is_string());
    }

    #[test]
    fn interpolation_recovers_polynomials() {
        // p(x) = 3 - x + 2 x^2 at nodes 1..4
        let nodes: Vec<Rational> = (1..=4).map(Rational::from_int).collect();
        let values: Vec<Rational> = nodes
            .iter()
            .map(|x| Rational::from_int(3) - x + (x * x).scaled_by(2))
            .collect();
        let coeffs = interpolate_coefficients(&nodes, &values).unwrap();
        assert_eq!(
            coeffs,
            vec![
                Rational::from_int(3),
                Rational::from_int(-1),
                Rational::from_int(2),
                Rational::zero()
            ]
        );
    }
}
