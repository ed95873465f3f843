//! Polynomial maps of complex affine space and degree-truncated jets.
//!
//! Composition is written `(g o h)(z) = g(h(z))` throughout; `then` applies
//! the receiver first and matches the application-order convention used by
//! generator words.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::{MultiIndex, Poly};
use crate::scalar::{Backend, Scalar};

/// An n-tuple of polynomials in n variables (possibly preceded by parameter
/// variables that the map leaves untouched).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap {
    params: usize,
    components: Vec<Poly>,
}

impl PolyMap {
    /// A map with `components.len()` components in `params + components.len()`
    /// variables; the first `params` variables are carried along unchanged.
    pub fn with_params(params: usize, components: Vec<Poly>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Invalid("empty map".into()));
        }
        let n = components.len();
        let backend = components[0].backend();
        for c in &components {
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
        Ok(PolyMap { params, components })
    }

    pub fn new(components: Vec<Poly>) -> Result<Self> {
        PolyMap::with_params(0, components)
    }

    pub fn identity(n: usize, backend: Backend) -> Self {
        PolyMap {
            params: 0,
            components: (0..n).map(|i| Poly::var(i, n, backend)).collect(),
        }
    }

    pub fn identity_with_params(params: usize, n: usize, backend: Backend) -> Self {
        PolyMap {
            params,
            components: (0..n)
                .map(|i| Poly::var(params + i, params + n, backend))
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn params(&self) -> usize {
        self.params
    }

    pub fn nvars(&self) -> usize {
        self.params + self.components.len()
    }

    pub fn backend(&self) -> Backend {
        self.components[0].backend()
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Poly {
        &self.components[i]
    }

    /// Max total degree in the non-parameter variables.
    pub fn degree(&self) -> i64 {
        self.components
            .iter()
            .map(|c| c.degree_from(self.params))
            .max()
            .unwrap()
    }

    pub fn is_identity(&self) -> bool {
        self.components.iter().enumerate().all(|(i, c)| {
            c.len() == 1
                && c.coeff(&MultiIndex::unit(self.nvars(), self.params + i))
                    .is_one()
        })
    }

    /// `g.after(h) = g o h`. Parameter variables pass through unchanged.
    pub fn after(&self, h: &PolyMap) -> Result<PolyMap> {
        if h.n() != self.n() || h.params != self.params {
            return Err(Error::VarMismatch {
                expected: self.n(),
                got: h.n(),
            });
        }
        let mut args: Vec<Poly> = Vec::with_capacity(self.nvars());
        for p in 0..self.params {
            args.push(Poly::var(p, h.nvars(), h.backend()));
        }
        args.extend(h.components.iter().cloned());
        let components = self
            .components
            .iter()
            .map(|c| c.compose(&args))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::with_params(self.params, components)
    }

    /// `h.then(g) = g o h` (apply the receiver first).
    pub fn then(&self, g: &PolyMap) -> Result<PolyMap> {
        g.after(self)
    }

    /// `h.then_truncated(g, k)`: the degree-<= k part of `g o h`, computed
    /// with truncated intermediates.
    pub fn then_truncated(&self, g: &PolyMap, k: i64) -> Result<PolyMap> {
        if self.n() != g.n() || self.params != g.params {
            return Err(Error::VarMismatch {
                expected: g.n(),
                got: self.n(),
            });
        }
        let mut args: Vec<Poly> = Vec::with_capacity(self.nvars());
        for p in 0..self.params {
            args.push(Poly::var(p, self.nvars(), self.backend()));
        }
        args.extend(self.components.iter().cloned());
        let components = g
            .components
            .iter()
            .map(|c| c.compose_truncated(&args, self.params, k))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::with_params(self.params, components)
    }

    pub fn eval(&self, point: &[Scalar]) -> Result<Vec<Scalar>> {
        if self.params != 0 {
            return Err(Error::Invalid(
                "evaluating a parameterized map needs a parameter value".into(),
            ));
        }
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    /// Value at z = 0 (constant coefficients); parameterized maps return
    /// polynomials in the parameters, here restricted to params = 0.
    pub fn value_at_zero(&self) -> Vec<Scalar> {
        assert_eq!(self.params, 0);
        self.components.iter().map(|c| c.constant_term()).collect()
    }

    /// The matrix of the z-linear part at 0. Requires the linear coefficients
    /// to be parameter-free.
    pub fn linear_part(&self) -> Result<Matrix> {
        let n = self.n();
        let backend = self.backend();
        let mut rows = Vec::with_capacity(n);
        for c in &self.components {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let mut entry = Scalar::zero(backend);
                for (e, coeff) in c.terms() {
                    if e.total_from(self.params) == 1 && e.0[self.params + j] == 1 {
                        if e.0[..self.params].iter().any(|&x| x > 0) {
                            return Err(Error::Invalid(
                                "linear part depends on the parameter".into(),
                            ));
                        }
                        entry = entry.add(coeff);
                    }
                }
                row.push(entry);
            }
            rows.push(row);
        }
        Matrix::from_rows(rows)
    }

    /// Jacobian matrix of z-partials as polynomials.
    pub fn jacobian_matrix(&self) -> Vec<Vec<Poly>> {
        self.components
            .iter()
            .map(|c| (0..self.n()).map(|j| c.partial(self.params + j)).collect())
            .collect()
    }

    /// Jacobian matrix evaluated at a point.
    pub fn jacobian_at(&self, point: &[Scalar]) -> Result<Matrix> {
        let rows = self
            .jacobian_matrix()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|p| p.eval(point))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(rows)
    }

    pub fn truncate(&self, k: i64) -> PolyMap {
        PolyMap {
            params: self.params,
            components: self
                .components
                .iter()
                .map(|c| c.truncate_from(self.params, k))
                .collect(),
        }
    }

    pub fn add(&self, other: &PolyMap) -> Result<PolyMap> {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::with_params(self.params, components)
    }

    pub fn sub(&self, other: &PolyMap) -> Result<PolyMap> {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::with_params(self.params, components)
    }

    /// Applies a matrix on the left: z -> M F(z).
    pub fn apply_matrix(&self, m: &Matrix) -> Result<PolyMap> {
        let n = self.n();
        assert_eq!(m.n, n);
        let mut components = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Poly::zero(self.nvars(), self.backend());
            for j in 0..n {
                acc = acc.add(&self.components[j].scale(m.at(i, j))?)?;
            }
            components.push(acc);
        }
        PolyMap::with_params(self.params, components)
    }

    pub fn approx_eq(&self, other: &PolyMap, tol: f64) -> bool {
        self.n() == other.n()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    pub fn to_approx(&self) -> PolyMap {
        PolyMap {
            params: self.params,
            components: self.components.iter().map(|c| c.to_approx()).collect(),
        }
    }

    /// Substitutes a scalar for the single leading parameter variable.
    pub fn eval_param(&self, x: &Scalar) -> Result<PolyMap> {
        if self.params != 1 {
            return Err(Error::Invalid("map has no single parameter".into()));
        }
        let n = self.n();
        let backend = self.backend();
        let mut args = Vec::with_capacity(self.nvars());
        args.push(Poly::constant(x.clone(), n));
        for i in 0..n {
            args.push(Poly::var(i, n, backend));
        }
        let components = self
            .components
            .iter()
            .map(|c| c.compose(&args))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::new(components)
    }
}

/// Jacobian determinant of a map, expanded as a polynomial.
pub fn jacobian_det(map: &PolyMap) -> Result<Poly> {
    let jac = map.jacobian_matrix();
    poly_det(&jac, map.nvars(), map.backend())
}

fn poly_det(m: &[Vec<Poly>], nvars: usize, backend: Backend) -> Result<Poly> {
    let n = m.len();
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    // Cofactor expansion along the first row; fine for the small n here.
    let mut acc = Poly::zero(nvars, backend);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Poly>> = (1..n)
            .map(|r| {
                (0..n)
                    .filter(|&c| c != j)
                    .map(|c| m[r][c].clone())
                    .collect()
            })
            .collect();
        let sub = poly_det(&minor, nvars, backend)?;
        let term = m[0][j].mul(&sub)?;
        if j % 2 == 0 {
            acc = acc.add(&term)?;
        } else {
            acc = acc.sub(&term)?;
        }
    }
    Ok(acc)
}

/// A polynomial map together with the maximal degree through which its
/// coefficients are meaningful. `truncated` records whether higher-order
/// information has been dropped somewhere along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub map: PolyMap,
    pub order: i64,
    pub truncated: bool,
}

impl Jet {
    pub fn new(map: PolyMap, order: i64) -> Jet {
        let truncated = map.degree() > order;
        Jet {
            map: map.truncate(order),
            order,
            truncated,
        }
    }

    pub fn exact(map: PolyMap, order: i64) -> Jet {
        Jet {
            map: map.truncate(order),
            order,
            truncated: false,
        }
    }

    pub fn identity(n: usize, order: i64, backend: Backend) -> Jet {
        Jet {
            map: PolyMap::identity(n, backend),
            order,
            truncated: false,
        }
    }

    pub fn n(&self) -> usize {
        self.map.n()
    }

    /// `self.then(g)` = jet of `g o self`, truncated to the minimum order.
    pub fn then(&self, g: &Jet) -> Result<Jet> {
        let order = self.order.min(g.order);
        let composed = self.map.then_truncated(&g.map, order)?;
        Ok(Jet {
            map: composed,
            order,
            truncated: self.truncated || g.truncated || self.order != g.order,
        })
    }
}

/// Inverts a jet with j(0) = 0 and invertible linear part, order by order:
/// start from the inverse of the linear part and subtract the lowest-degree
/// error of `g o j - id` composed with the inverse linear map.
pub fn jet_invert(j: &Jet) -> Result<Jet> {
    let n = j.n();
    let params = j.map.params();
    let backend = j.map.backend();
    let order = j.order;
    // j(0) = 0 for all parameter values.
    for c in j.map.components() {
        for (e, _) in c.terms() {
            if e.total_from(params) == 0 {
                return Err(Error::NotSchwarz("jet does not fix 0".into()));
            }
        }
    }
    let lin = j.map.linear_part()?;
    let lin_inv = lin.inverse().map_err(|_| Error::SingularLinearPart)?;
    let lin_inv_map = linear_map(&lin_inv, params, backend)?;
    let mut g = lin_inv_map.clone();
    let jm = j.map.truncate(order);
    let id = PolyMap::identity_with_params(params, n, backend);
    for m in 2..=order {
        // error = g o j - id, exact through degree m.
        let err = jm.then_truncated(&g, m)?;
        let residual = err.sub(&id)?;
        let mut corr_components = Vec::with_capacity(n);
        for c in residual.components() {
            corr_components.push(c.homogeneous_part_from(params, m as u32));
        }
        let corr = PolyMap::with_params(params, corr_components)?;
        if corr.components().iter().all(|c| c.is_zero()) {
            continue;
        }
        // g <- g - corr o (linear inverse)
        let corr_shifted = lin_inv_map.then_truncated(&corr, order)?;
        g = g.sub(&corr_shifted)?;
    }
    Ok(Jet {
        map: g,
        order,
        truncated: j.truncated,
    })
}

/// The linear map z -> M z as a PolyMap (with optional parameter slots).
pub fn linear_map(m: &Matrix, params: usize, backend: Backend) -> Result<PolyMap> {
    let n = m.n;
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let mut c = Poly::zero(params + n, backend);
        for j in 0..n {
            let v = Poly::var(params + j, params + n, backend).scale(m.at(i, j))?;
            c = c.add(&v)?;
        }
        components.push(c);
    }
    PolyMap::with_params(params, components)
}

/// Exact inverse of a polynomial automorphism: runs jet inversion at
/// increasing orders and verifies `g o j = id` by full symbolic composition.
/// Fails if the inverse degree exceeds the cap (certifying that the input is
/// not an automorphism of the expected degree profile).
pub fn polymap_invert(map: &PolyMap) -> Result<PolyMap> {
    let n = map.n();
    let backend = map.backend();
    if map.params() != 0 {
        return Err(Error::Invalid(
            "parameterized maps cannot be inverted here".into(),
        ));
    }
    let a = map.value_at_zero();
    // Reduce to a map fixing 0: invert z -> F(z) - F(0), then shift.
    let centered = PolyMap::new(
        map.components()
            .iter()
            .zip(&a)
            .map(|(c, ai)| c.sub(&Poly::constant(ai.clone(), n)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let deg = centered.degree().max(1) as u32;
    let cap = match n {
        1 => deg as i64,
        2 => deg as i64,
        _ => (deg as i64).pow((n - 1) as u32),
    }
    .max(2);
    let mut order = (deg as i64).max(2);
    loop {
        let jet = Jet::exact(centered.clone(), order);
        let g = jet_invert(&jet)?;
        // Verify by full composition: exact equality on the exact backend,
        // a scaled tolerance on the approximate one.
        let test = centered.then(&g.map)?;
        let verified = match backend {
            Backend::Exact => test.is_identity(),
            Backend::Approx => {
                let tol = 1e-9
                    * (1.0
                        + centered
                            .components()
                            .iter()
                            .map(|c| c.coeff_norm())
                            .fold(0.0, f64::max));
                test.approx_eq(&PolyMap::identity(n, backend), tol)
            }
        };
        if verified {
            // Full inverse of F = centered + a is g(z - a).
            let shift = PolyMap::new(
                (0..n)
                    .map(|i| Poly::var(i, n, backend).sub(&Poly::constant(a[i].clone(), n)))
                    .collect::<Result<Vec<_>>>()?,
            )?;
            return shift.then(&g.map);
        }
        if order >= cap {
            return Err(Error::NotAnAutomorphism(format!(
                "no polynomial inverse through degree {cap}"
            )));
        }
        order = (order * 2).min(cap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(i: usize, n: usize) -> Poly {
        Poly::var(i, n, Backend::Exact)
    }

    fn shear_map() -> PolyMap {
        // (z1 + z2^2, z2)
        PolyMap::new(vec![
            z(0, 2).add(&z(1, 2).pow(2).unwrap()).unwrap(),
            z(1, 2),
        ])
        .unwrap()
    }

    #[test]
    fn jacobian_of_triangular_map_is_one() {
        let d = jacobian_det(&shear_map()).unwrap();
        assert_eq!(d, Poly::one(2, Backend::Exact));
    }

    #[test]
    fn jacobian_of_swap_is_minus_one() {
        let swap = PolyMap::new(vec![z(1, 2), z(0, 2)]).unwrap();
        let d = jacobian_det(&swap).unwrap();
        assert_eq!(
            d,
            Poly::constant(Scalar::from_integer(-1, Backend::Exact), 2)
        );
    }

    #[test]
    fn jacobian_of_square_is_nonconstant() {
        let m = PolyMap::new(vec![z(0, 2).pow(2).unwrap(), z(1, 2)]).unwrap();
        let d = jacobian_det(&m).unwrap();
        let want = z(0, 2)
            .scale(&Scalar::from_integer(2, Backend::Exact))
            .unwrap();
        assert_eq!(d, want);
    }

    #[test]
    fn jet_invert_shear() {
        // Oracle: compose the candidate with the jet and check the identity
        // through the order; the frozen expected inverse is (z1 - z2^2, z2).
        let jet = Jet::exact(shear_map(), 3);
        let inv = jet_invert(&jet).unwrap();
        let expected = PolyMap::new(vec![
            z(0, 2).sub(&z(1, 2).pow(2).unwrap()).unwrap(),
            z(1, 2),
        ])
        .unwrap();
        assert_eq!(inv.map, expected);
        let comp = jet.map.then(&inv.map).unwrap().truncate(3);
        assert!(comp.is_identity());
    }

    #[test]
    fn jet_invert_identity() {
        let jet = Jet::identity(2, 4, Backend::Exact);
        let inv = jet_invert(&jet).unwrap();
        assert!(inv.map.is_identity());
    }

    #[test]
    fn jet_invert_scaled() {
        // j = (2 z1, z2 + z1^2), order 2 -> (z1/2, z2 - z1^2/4)
        let j = PolyMap::new(vec![
            z(0, 2)
                .scale(&Scalar::from_integer(2, Backend::Exact))
                .unwrap(),
            z(1, 2).add(&z(0, 2).pow(2).unwrap()).unwrap(),
        ])
        .unwrap();
        let inv = jet_invert(&Jet::exact(j.clone(), 2)).unwrap();
        let want = PolyMap::new(vec![
            z(0, 2)
                .scale(&Scalar::from_ratio(1, 2, Backend::Exact))
                .unwrap(),
            z(1, 2)
                .sub(
                    &z(0, 2)
                        .pow(2)
                        .unwrap()
                        .scale(&Scalar::from_ratio(1, 4, Backend::Exact))
                        .unwrap(),
                )
                .unwrap(),
        ])
        .unwrap();
        assert_eq!(inv.map, want);
        let comp = j.then(&inv.map).unwrap().truncate(2);
        assert!(comp.is_identity());
    }

    #[test]
    fn jet_invert_rejects_singular() {
        let j = PolyMap::new(vec![z(0, 2), z(0, 2)]).unwrap();
        assert_eq!(
            jet_invert(&Jet::exact(j, 2)).unwrap_err(),
            Error::SingularLinearPart
        );
    }

    #[test]
    fn polymap_invert_full() {
        // Composition of two triangular shears: exact polynomial inverse.
        let a = shear_map();
        let b = PolyMap::new(vec![
            z(0, 2),
            z(1, 2).add(&z(0, 2).pow(2).unwrap()).unwrap(),
        ])
        .unwrap();
        let f = a.then(&b).unwrap();
        let inv = polymap_invert(&f).unwrap();
        assert!(f.then(&inv).unwrap().is_identity());
        assert!(inv.then(&f).unwrap().is_identity());
    }

    #[test]
    fn mixed_order_jets_truncate_and_flag() {
        let a = Jet::exact(shear_map(), 4);
        let b = Jet::exact(shear_map(), 2);
        let c = a.then(&b).unwrap();
        assert_eq!(c.order, 2);
        assert!(c.truncated);
    }
}
