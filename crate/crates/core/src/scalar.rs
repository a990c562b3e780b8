//! Coefficient fields for jets.
//!
//! Two arithmetic modes are supported: exact Gaussian rationals (a pair of
//! arbitrary-precision rationals) and complex doubles. Generic code is written
//! against [`Coeff`]; the runtime-tagged [`Scalar`] is used where the mode is
//! only known at run time (file input, reports).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact Gaussian rational `a + b i` with `a, b ∈ ℚ`.
pub type Exact = Complex<BigRational>;

/// Arithmetic mode of a coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

/// Magnitude below which float coefficients are dropped from sparse storage.
pub const FLOAT_PURGE_EPS: f64 = 1e-300;

/// Field operations needed by the jet algebra.
pub trait Coeff: Clone + fmt::Debug + PartialEq + Send + Sync + 'static {
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_integer(n: &BigInt) -> Self;
    fn from_rational(re: &BigRational, im: &BigRational) -> Self;

    /// True when the value must not be stored in a canonical sparse jet.
    fn is_zero(&self) -> bool;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
    /// Multiplicative inverse; `None` for zero.
    fn inv(&self) -> Option<Self>;

    fn to_c64(&self) -> Complex64;

    /// Real part strictly positive and imaginary part zero (within `tol` in float mode).
    fn is_positive_real(&self, tol: f64) -> bool;

    fn add_assign(&mut self, other: &Self) {
        *self = Coeff::add(self, other);
    }

    fn from_i64(n: i64) -> Self {
        Self::from_integer(&BigInt::from(n))
    }

    fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|o| self.mul(&o))
    }

    /// Sum in the given order. Float mode overrides this with compensated summation.
    fn accumulate<'a, I: IntoIterator<Item = &'a Self>>(items: I) -> Self {
        let mut acc = Self::zero();
        for x in items {
            acc.add_assign(x);
        }
        acc
    }
}

impl Coeff for Exact {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }
    fn from_integer(n: &BigInt) -> Self {
        Complex::new(BigRational::from_integer(n.clone()), BigRational::zero())
    }
    fn from_rational(re: &BigRational, im: &BigRational) -> Self {
        Complex::new(re.clone(), im.clone())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        if self.im.is_zero() && other.im.is_zero() {
            return Complex::new(&self.re * &other.re, BigRational::zero());
        }
        self * other
    }
    fn neg(&self) -> Self {
        Complex::new(-&self.re, -&self.im)
    }
    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -&self.im)
    }
    fn inv(&self) -> Option<Self> {
        if Coeff::is_zero(self) {
            return None;
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(Complex::new(&self.re / &norm, -&self.im / &norm))
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
    fn is_positive_real(&self, _tol: f64) -> bool {
        self.im.is_zero() && self.re.is_positive()
    }
    fn add_assign(&mut self, other: &Self) {
        self.re += &other.re;
        self.im += &other.im;
    }
}

impl Coeff for Complex64 {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_integer(n: &BigInt) -> Self {
        Complex64::new(n.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn from_rational(re: &BigRational, im: &BigRational) -> Self {
        Complex64::new(rat_to_f64(re), rat_to_f64(im))
    }
    fn is_zero(&self) -> bool {
        self.norm() < FLOAT_PURGE_EPS
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn inv(&self) -> Option<Self> {
        if self.re == 0.0 && self.im == 0.0 {
            None
        } else {
            Some(Complex64::inv(self))
        }
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn is_positive_real(&self, tol: f64) -> bool {
        self.re > tol && self.im.abs() <= tol * self.re.abs().max(1.0)
    }

    fn accumulate<'a, I: IntoIterator<Item = &'a Self>>(items: I) -> Self {
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        for x in items {
            re.add(x.re);
            im.add(x.im);
        }
        Complex64::new(re.total(), im.total())
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy, Debug)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Lossy conversion that survives numerators/denominators beyond `f64` range.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift = (nb - db - 60).max(0) as u64;
    let shift_d = (db - nb - 60).max(0) as u64;
    let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d).to_f64().unwrap_or(f64::INFINITY);
    n / d * 2f64.powi(shift as i32 - shift_d as i32)
}

/// Parse `"p/q"`, `"p"` or a signed integer into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    BigRational::from_str(s.trim()).map_err(|_| Error::Parse(format!("not a rational number: {s:?}")))
}

/// Canonical string form `"p/q"` (or `"p"` for integers).
pub fn format_rational(r: &BigRational) -> String {
    r.to_string()
}

/// Convenience constructor for exact coefficients from small integers.
pub fn exact(num: i64, den: i64) -> Exact {
    Complex::new(BigRational::new(num.into(), den.into()), BigRational::zero())
}

/// Runtime-tagged coefficient value.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Exact),
    Float(Complex64),
}

impl Scalar {
    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Float,
        }
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(Coeff::add(a, b))),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a + b)),
            _ => Err(Error::ModeMismatch),
        }
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(Coeff::mul(a, b))),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a * b)),
            _ => Err(Error::ModeMismatch),
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            Scalar::Exact(a) => a.to_c64(),
            Scalar::Float(a) => *a,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_inverse_of_gaussian_rational() {
        let z = Complex::new(BigRational::new(1.into(), 2.into()), BigRational::new((-3).into(), 4.into()));
        let w = Coeff::inv(&z).unwrap();
        assert_eq!(Coeff::mul(&z, &w), <Exact as Coeff>::one());
        assert!(Coeff::inv(&<Exact as Coeff>::zero()).is_none());
    }

    #[test]
    fn mode_mixing_is_rejected() {
        let a = Scalar::Exact(exact(1, 2));
        let b = Scalar::Float(Complex64::new(0.5, 0.0));
        assert!(matches!(a.try_add(&b), Err(Error::ModeMismatch)));
        assert!(matches!(b.try_mul(&a), Err(Error::ModeMismatch)));
        assert_eq!(a.try_add(&a).unwrap(), Scalar::Exact(exact(1, 1)));
    }

    #[test]
    fn rational_strings_round_trip() {
        let r = parse_rational("-6/4").unwrap();
        assert_eq!(format_rational(&r), "-3/2");
        assert_eq!(format_rational(&parse_rational("7").unwrap()), "7");
        assert!(parse_rational("1.5").is_err());
    }

    #[test]
    fn huge_rationals_convert_to_f64() {
        let big = BigInt::from(10).pow(400);
        let r = BigRational::new(big.clone() * 3, big * 2);
        assert!((rat_to_f64(&r) - 1.5).abs() < 1e-15);
        let tiny = BigRational::new(1.into(), BigInt::from(10).pow(320));
        assert!(rat_to_f64(&tiny) < 1e-300);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [Complex64::new(1e16, 0.0), Complex64::new(1.0, 0.0), Complex64::new(-1e16, 0.0)];
        assert_eq!(<Complex64 as Coeff>::accumulate(xs.iter()).re, 1.0);
    }
}
