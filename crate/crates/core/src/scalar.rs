//! Complex scalars on two backends: exact Gaussian rationals and `f64` pairs.
//!
//! The exact backend stores real and imaginary parts as arbitrary-precision
//! rationals, so ring operations carry no rounding. The approximate backend is
//! double precision. Mixed-backend arithmetic is rejected at the public API
//! boundaries; the scalar ops themselves panic on a mismatch, which is treated
//! as an internal invariant violation.

use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::traits::{One, ToPrimitive, Zero};
use std::fmt;

use crate::error::{Error, Result};

/// Default absolute tolerance for coefficientwise comparisons on the
/// approximate backend.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Approx,
}

/// A Gaussian rational: re + i*im with arbitrary-precision rational parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    fn zero() -> Self {
        GaussianRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

/// A complex scalar tagged with its backend.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(GaussianRational),
    Approx(Complex64),
}

impl Scalar {
    pub fn backend(&self) -> Backend {
        match self {
            Scalar::Exact(_) => Backend::Exact,
            Scalar::Approx(_) => Backend::Approx,
        }
    }

    pub fn zero(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussianRational::zero()),
            Backend::Approx => Scalar::Approx(Complex64::new(0.0, 0.0)),
        }
    }

    pub fn one(backend: Backend) -> Self {
        Scalar::from_integer(1, backend)
    }

    pub fn from_integer(k: i64, backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussianRational {
                re: BigRational::from_integer(BigInt::from(k)),
                im: BigRational::zero(),
            }),
            Backend::Approx => Scalar::Approx(Complex64::new(k as f64, 0.0)),
        }
    }

    /// num/den with a real rational value, on the given backend.
    pub fn from_ratio(num: i64, den: i64, backend: Backend) -> Self {
        assert!(den != 0, "zero denominator");
        match backend {
            Backend::Exact => Scalar::Exact(GaussianRational {
                re: BigRational::new(BigInt::from(num), BigInt::from(den)),
                im: BigRational::zero(),
            }),
            Backend::Approx => Scalar::Approx(Complex64::new(num as f64 / den as f64, 0.0)),
        }
    }

    /// The imaginary unit i, exactly representable on both backends.
    pub fn imaginary_unit(backend: Backend) -> Self {
        match backend {
            Backend::Exact => Scalar::Exact(GaussianRational {
                re: BigRational::zero(),
                im: BigRational::from_integer(BigInt::from(1)),
            }),
            Backend::Approx => Scalar::Approx(Complex64::new(0.0, 1.0)),
        }
    }

    pub fn from_f64(re: f64, im: f64) -> Self {
        Scalar::Approx(Complex64::new(re, im))
    }

    pub fn from_complex(z: Complex64) -> Self {
        Scalar::Approx(z)
    }

    pub fn from_rationals(re: BigRational, im: BigRational) -> Self {
        Scalar::Exact(GaussianRational { re, im })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(g) => g.is_zero(),
            Scalar::Approx(z) => z.re == 0.0 && z.im == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Exact(g) => g.re.is_one() && g.im.is_zero(),
            Scalar::Approx(z) => z.re == 1.0 && z.im == 0.0,
        }
    }

    /// Numeric value, converting exact rationals to doubles.
    pub fn to_complex(&self) -> Complex64 {
        match self {
            Scalar::Exact(g) => Complex64::new(
                g.re.to_f64().unwrap_or(f64::NAN),
                g.im.to_f64().unwrap_or(f64::NAN),
            ),
            Scalar::Approx(z) => *z,
        }
    }

    /// Rebuild this scalar on the approximate backend.
    pub fn to_approx(&self) -> Scalar {
        Scalar::Approx(self.to_complex())
    }

    pub fn norm(&self) -> f64 {
        self.to_complex().norm()
    }

    fn check(&self, other: &Scalar) {
        assert_eq!(
            self.backend(),
            other.backend(),
            "internal invariant violated: mixed scalar backends"
        );
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.check(other);
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(GaussianRational {
                re: &a.re + &b.re,
                im: &a.im + &b.im,
            }),
            (Scalar::Approx(a), Scalar::Approx(b)) => Scalar::Approx(a + b),
            _ => unreachable!(),
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.check(other);
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(GaussianRational {
                re: &a.re - &b.re,
                im: &a.im - &b.im,
            }),
            (Scalar::Approx(a), Scalar::Approx(b)) => Scalar::Approx(a - b),
            _ => unreachable!(),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.check(other);
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(GaussianRational {
                re: &a.re * &b.re - &a.im * &b.im,
                im: &a.re * &b.im + &a.im * &b.re,
            }),
            (Scalar::Approx(a), Scalar::Approx(b)) => Scalar::Approx(a * b),
            _ => unreachable!(),
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(GaussianRational {
                re: -&a.re,
                im: -&a.im,
            }),
            Scalar::Approx(a) => Scalar::Approx(-a),
        }
    }

    pub fn inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::Invalid("division by zero".into()));
        }
        Ok(match self {
            Scalar::Exact(a) => {
                let n = &a.re * &a.re + &a.im * &a.im;
                Scalar::Exact(GaussianRational {
                    re: &a.re / &n,
                    im: -&a.im / &n,
                })
            }
            Scalar::Approx(a) => Scalar::Approx(a.inv()),
        })
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn powi(&self, mut e: u32) -> Scalar {
        let mut base = self.clone();
        let mut acc = Scalar::one(self.backend());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Complex exponential; only available on the approximate backend.
    pub fn exp(&self) -> Result<Scalar> {
        match self {
            Scalar::Approx(z) => Ok(Scalar::Approx(z.exp())),
            Scalar::Exact(g) => {
                if g.is_zero() {
                    Ok(Scalar::one(Backend::Exact))
                } else {
                    Err(Error::ExactTranscendental(format!("exp({self})")))
                }
            }
        }
    }

    /// Principal complex logarithm; approximate backend only.
    pub fn ln(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::ZeroValue);
        }
        match self {
            Scalar::Approx(z) => Ok(Scalar::Approx(z.ln())),
            Scalar::Exact(_) => {
                if self.is_one() {
                    Ok(Scalar::zero(Backend::Exact))
                } else {
                    Err(Error::ExactTranscendental(format!("log({self})")))
                }
            }
        }
    }

    pub fn approx_eq(&self, other: &Scalar, tol: f64) -> bool {
        if self.backend() != other.backend() {
            return false;
        }
        match (self, other) {
            (Scalar::Exact(_), Scalar::Exact(_)) => self == other,
            _ => (self.to_complex() - other.to_complex()).norm() <= tol,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(g) => {
                if g.im.is_zero() {
                    write!(f, "{}", g.re)
                } else {
                    write!(f, "{}+{}i", g.re, g.im)
                }
            }
            Scalar::Approx(z) => {
                if z.im == 0.0 {
                    write!(f, "{}", z.re)
                } else {
                    write!(f, "{}+{}i", z.re, z.im)
                }
            }
        }
    }
}

/// Checks that two scalars share a backend, as the public entry points require.
pub fn same_backend(a: &Scalar, b: &Scalar) -> Result<Backend> {
    if a.backend() != b.backend() {
        return Err(Error::BackendMismatch);
    }
    Ok(a.backend())
}
