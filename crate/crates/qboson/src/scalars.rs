//! Exact rational scalars and the two structure functions of the model.
//!
//! Everything in this crate is computed over arbitrary-precision rationals;
//! there is no floating point anywhere. This module provides
//! - [`Rational`]: an exact rational scalar, always in lowest terms,
//! - [`f_factor`] and [`g_factor`]: the rational functions
//!   `f(z, w) = (z - q^2 w) / (z - w)` and `g(z, w) = -(1 - q^2) z / (z - w)`,
//! - [`SpectralParams`]: a validated parameter point `(q, z_1, ..., z_k)`.
//!
//! Parameters are instantiated at concrete rational points rather than kept
//! symbolic: every identity checked by this crate is an identity of rational
//! functions, so exact equality at admissible random rational points is a
//! sound verification strategy.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number, stored in lowest terms with positive denominator.
///
/// Serializes as the string `"n/d"`, with `/d` omitted when the denominator
/// is 1 and the sign carried by the numerator. This format is used in all
/// JSON output and accepted in all CLI input.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Build `n/d` in lowest terms. Errors when `d == 0`.
    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(BigRational::new(
            BigInt::from(numer),
            BigInt::from(denom),
        )))
    }

    pub fn from_int(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// `self^e` for any integer exponent; errors on `0^e` with `e < 0`.
    pub fn pow(&self, e: i64) -> Result<Self> {
        if self.is_zero() && e < 0 {
            return Err(Error::DivisionByZero);
        }
        if e == 0 {
            return Ok(Rational::one());
        }
        let base = if e > 0 { self.0.clone() } else { self.0.clone().recip() };
        let mut acc = BigRational::one();
        for _ in 0..e.unsigned_abs() {
            acc *= &base;
        }
        Ok(Rational(acc))
    }

    /// Exact division; errors when `rhs == 0`.
    pub fn div_exact(&self, rhs: &Rational) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn recip(&self) -> Result<Self> {
        Rational::one().div_exact(self)
    }

    pub fn scaled_by(&self, n: i64) -> Self {
        self * &Rational::from_int(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid rational {s:?} (expected \"n\" or \"n/d\")"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let numer = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let denom = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

/// Panicking division, used where the denominator is structurally nonzero.
impl Div<&Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(self.0 / &rhs.0)
    }
}

/// The factor `f(z, w) = (z - q^2 w) / (z - w)`.
///
/// Errors with [`Error::Pole`] when `z = w`.
pub fn f_factor(q: &Rational, z: &Rational, w: &Rational) -> Result<Rational> {
    if z == w {
        return Err(Error::Pole {
            z: z.to_string(),
            w: w.to_string(),
        });
    }
    let q2 = q * q;
    Ok((z - &(&q2 * w)) / &(z - w))
}

/// The factor `g(z, w) = -(1 - q^2) z / (z - w) = f(w, z) - 1`.
///
/// Errors with [`Error::Pole`] when `z = w`.
pub fn g_factor(q: &Rational, z: &Rational, w: &Rational) -> Result<Rational> {
    if z == w {
        return Err(Error::Pole {
            z: z.to_string(),
            w: w.to_string(),
        });
    }
    let one = Rational::one();
    let q2 = q * q;
    Ok(-((&one - &q2) * z) / &(z - w))
}

/// A validated spectral-parameter point `(q; z_1, ..., z_k)`.
///
/// Admissibility means no structure function has a pole and no operator
/// built from them degenerates:
/// - `q != 0` and `q != +-1`,
/// - `z_i != 0` and `z_i != -1` for all `i`,
/// - `z_i != z_j`, `z_i != q^2 z_j` and `q^2 z_i != z_j` for all `i != j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub q: Rational,
    pub z: Vec<Rational>,
}

impl SpectralParams {
    pub fn new(q: Rational, z: Vec<Rational>) -> Result<Self> {
        let params = SpectralParams { q, z };
        params.validate()?;
        Ok(params)
    }

    pub fn k(&self) -> usize {
        self.z.len()
    }

    /// Check every admissibility constraint, naming the violated constraint
    /// and the offending indices on failure.
    pub fn validate(&self) -> Result<()> {
        validate_params(self)
    }

    pub fn q_squared(&self) -> Rational {
        &self.q * &self.q
    }

    /// `f(z_i, z_j)` read off the stored parameter list (1-based indices).
    pub fn f_ij(&self, i: usize, j: usize) -> Result<Rational> {
        f_factor(&self.q, &self.z[i - 1], &self.z[j - 1])
    }

    /// `prod_{1 <= i < j <= k} f(z_i, z_j)`.
    pub fn f_product(&self) -> Result<Rational> {
        let mut acc = Rational::one();
        for i in 1..=self.k() {
            for j in (i + 1)..=self.k() {
                acc *= &self.f_ij(i, j)?;
            }
        }
        Ok(acc)
    }
}

/// Gate used by every downstream operation: succeeds iff the
/// [`SpectralParams`] invariants hold.
pub fn validate_params(p: &SpectralParams) -> Result<()> {
    let one = Rational::one();
    let minus_one = Rational::from_int(-1);
    if p.q.is_zero() {
        return Err(Error::Param("q = 0 is not admissible".into()));
    }
    if p.q == one || p.q == minus_one {
        return Err(Error::Param(format!("q = {} makes 1 - q^2 vanish", p.q)));
    }
    let q2 = p.q_squared();
    for (i, zi) in p.z.iter().enumerate() {
        if zi.is_zero() {
            return Err(Error::Param(format!("z_{} = 0 is not admissible", i + 1)));
        }
        if *zi == minus_one {
            return Err(Error::Param(format!(
                "z_{} = -1 makes (1 + z)^(-M) undefined",
                i + 1
            )));
        }
    }
    for i in 0..p.z.len() {
        for j in 0..p.z.len() {
            if i == j {
                continue;
            }
            if p.z[i] == p.z[j] {
                return Err(Error::Param(format!(
                    "z_{} = z_{} (= {}) is a pole of f and g",
                    i + 1,
                    j + 1,
                    p.z[i]
                )));
            }
            if p.z[i] == &q2 * &p.z[j] {
                return Err(Error::Param(format!(
                    "z_{} = q^2 z_{} ({} = {} * {}) makes f(z_{}, z_{}) vanish",
                    i + 1,
                    j + 1,
                    p.z[i],
                    q2,
                    p.z[j],
                    i + 1,
                    j + 1
                )));
            }
        }
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
    fn rational_is_canonical() {
        assert_eq!(r(2, 4), r(1, 2));
        assert_eq!(r(3, -6), r(-1, 2));
        assert_eq!(r(-2, -4).to_string(), "1/2");
        assert_eq!(r(7, 1).to_string(), "7");
        assert_eq!(r(-3, 4).to_string(), "-3/4");
    }

    #[test]
    fn rational_round_trips_from_string() {
        for s in ["0", "-5", "7/3", "-22/7"] {
            let v: Rational = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn pow_handles_negative_exponents() {
        assert_eq!(r(2, 3).pow(-2).unwrap(), r(9, 4));
        assert_eq!(r(2, 3).pow(0).unwrap(), Rational::one());
        assert!(Rational::zero().pow(-1).is_err());
    }

    #[test]
    fn f_at_zero_w_is_one() {
        let q = r(1, 2);
        for z in [r(2, 1), r(-3, 5), r(7, 4)] {
            assert_eq!(
                f_factor(&q, &z, &Rational::zero()).unwrap(),
                Rational::one()
            );
        }
    }

    #[test]
    fn f_vanishes_at_z_equals_q2_w() {
        let q = r(1, 2);
        let w = r(3, 1);
        let z = &(&q * &q) * &w;
        assert!(f_factor(&q, &z, &w).unwrap().is_zero());
    }

    #[test]
    fn f_and_g_match_direct_substitution() {
        // q = 1/2, z = 2, w = 1: f = (2 - 1/4) / 1 = 7/4, g = -(3/4)*2 / 1 = -3/2.
        let q = r(1, 2);
        assert_eq!(f_factor(&q, &r(2, 1), &r(1, 1)).unwrap(), r(7, 4));
        assert_eq!(g_factor(&q, &r(2, 1), &r(1, 1)).unwrap(), r(-3, 2));
    }

    #[test]
    fn g_vanishes_at_zero_z() {
        let q = r(1, 3);
        assert!(g_factor(&q, &Rational::zero(), &r(5, 2))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn pole_is_detected() {
        let q = r(1, 2);
        assert!(matches!(
            f_factor(&q, &r(3, 2), &r(3, 2)),
            Err(Error::Pole { .. })
        ));
        assert!(matches!(
            g_factor(&q, &r(3, 2), &r(3, 2)),
            Err(Error::Pole { .. })
        ));
    }

    #[test]
    fn g_equals_f_swapped_minus_one_on_random_points() {
        let mut rng = SeededRng::new(17);
        for _ in 0..100 {
            let p = rng.sample_params(2);
            let (z, w) = (&p.z[0], &p.z[1]);
            let lhs = g_factor(&p.q, z, w).unwrap();
            let rhs = f_factor(&p.q, w, z).unwrap() - Rational::one();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn f_plus_g_is_q_squared_on_random_points() {
        let mut rng = SeededRng::new(18);
        for _ in 0..100 {
            let p = rng.sample_params(2);
            let (z, w) = (&p.z[0], &p.z[1]);
            let total = f_factor(&p.q, z, w).unwrap() + g_factor(&p.q, z, w).unwrap();
            assert_eq!(total, p.q_squared());
        }
    }

    #[test]
    fn validate_accepts_admissible_points() {
        let p = SpectralParams {
            q: r(1, 2),
            z: vec![r(2, 1), r(3, 1)],
        };
        assert!(p.validate().is_ok());
    }

    #[test]
    fn validate_rejects_q2_collision() {
        // z_2 = q^2 z_1 with q = 1/2: (2, 1/2).
        let p = SpectralParams {
            q: r(1, 2),
            z: vec![r(2, 1), r(1, 2)],
        };
        assert!(matches!(p.validate(), Err(Error::Param(_))));
    }

    #[test]
    fn validate_rejects_minus_one_and_duplicates() {
        let p = SpectralParams {
            q: r(1, 2),
            z: vec![r(-1, 1)],
        };
        assert!(matches!(p.validate(), Err(Error::Param(_))));
        let p = SpectralParams {
            q: r(1, 2),
            z: vec![r(2, 1), r(2, 1)],
        };
        assert!(matches!(p.validate(), Err(Error::Param(_))));
        let p = SpectralParams {
            q: r(1, 1),
            z: vec![r(2, 1)],
        };
        assert!(matches!(p.validate(), Err(Error::Param(_))));
    }

    #[test]
    fn sampled_params_are_always_admissible_and_canonical() {
        let mut rng = SeededRng::new(99);
        for k in 1..=4 {
            for _ in 0..25 {
                let p = rng.sample_params(k);
                p.validate().unwrap();
                for z in &p.z {
                    // stored in lowest terms with positive denominator
                    assert!(z.denom().is_positive());
                    assert!(num_integer::gcd(z.numer().clone(), z.denom().clone()).is_one());
                }
            }
        }
    }
}
