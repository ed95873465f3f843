//! Polynomial vector fields `sum_i c_i(z) d/dz_i`, optionally carrying a
//! leading parameter variable that the field does not differentiate.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{Backend, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    params: usize,
    coeffs: Vec<Poly>,
}

impl VectorField {
    pub fn with_params(params: usize, coeffs: Vec<Poly>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid("empty vector field".into()));
        }
        let n = coeffs.len();
        let backend = coeffs[0].backend();
        for c in &coeffs {
            if c.nvars() != params + n {
                return Err(Error::VarMismatch {
                    expected: params + n,
                    got: c.nvars(),
                });
            }
            if c.backend() != backend {
                return Err(Error::BackendMismatch);
            }
        }
        Ok(VectorField { params, coeffs })
    }

    pub fn new(coeffs: Vec<Poly>) -> Result<Self> {
        VectorField::with_params(0, coeffs)
    }

    pub fn zero(n: usize, backend: Backend) -> Self {
        VectorField {
            params: 0,
            coeffs: vec![Poly::zero(n, backend); n],
        }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn params(&self) -> usize {
        self.params
    }

    pub fn backend(&self) -> Backend {
        self.coeffs[0].backend()
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &Poly {
        &self.coeffs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Max degree (in the non-parameter variables) among the coefficients.
    pub fn degree(&self) -> i64 {
        self.coeffs
            .iter()
            .map(|c| c.degree_from(self.params))
            .max()
            .unwrap()
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        VectorField::with_params(self.params, coeffs)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        VectorField::with_params(self.params, coeffs)
    }

    pub fn scale(&self, k: &Scalar) -> Result<VectorField> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.scale(k))
            .collect::<Result<Vec<_>>>()?;
        VectorField::with_params(self.params, coeffs)
    }

    /// The part of the field whose coefficients are homogeneous of degree `d`
    /// in the non-parameter variables.
    pub fn homogeneous_part(&self, d: u32) -> VectorField {
        VectorField {
            params: self.params,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.homogeneous_part_from(self.params, d))
                .collect(),
        }
    }

    pub fn eval(&self, point: &[Scalar]) -> Result<Vec<Scalar>> {
        self.coeffs.iter().map(|c| c.eval(point)).collect()
    }

    pub fn coeff_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.coeff_norm())
            .fold(0.0, f64::max)
    }

    pub fn to_approx(&self) -> VectorField {
        VectorField {
            params: self.params,
            coeffs: self.coeffs.iter().map(|c| c.to_approx()).collect(),
        }
    }
}

/// div W = sum_i d c_i / d z_i, differentiating the non-parameter variables.
pub fn divergence(w: &VectorField) -> Poly {
    let mut acc = Poly::zero(w.params() + w.n(), w.backend());
    for (i, c) in w.coeffs().iter().enumerate() {
        acc = acc.add(&c.partial(w.params() + i)).expect("same ring");
    }
    acc
}
