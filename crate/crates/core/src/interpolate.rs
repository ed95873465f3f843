//! Interpolation of automorphism-valued curves at finitely many points of the
//! parameter plane: Lagrange data for centers, transvection chains for the
//! linear parts, and a chain of scaled Schwarz corrections for the tails,
//! assembled as F(x) = a(x) + A(x) H(x).
//!
//! Every curve factor is invertible for every parameter value by
//! construction, so group membership holds globally, not just at the nodes.

use crate::aut::{schwarz_normalize, AutValue};
use crate::error::{Error, Result};
use crate::linalg::{transvection_factorization, ElementaryFactor, Matrix};
use crate::poly::Poly;
use crate::polymap::{linear_map, PolyMap};
use crate::scalar::{Backend, Scalar, DEFAULT_TOL};
use crate::shear::{scaling_curve_map, GroupTag};

/// A parameter function: a polynomial, or a nonvanishing exponential unit.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamFn {
    Poly(Poly),
    /// e^{log(x)}; never zero.
    Unit {
        log: Poly,
    },
}

impl ParamFn {
    pub fn eval(&self, x: &Scalar) -> Result<Scalar> {
        match self {
            ParamFn::Poly(p) => p.eval(std::slice::from_ref(x)),
            ParamFn::Unit { log } => log.eval(std::slice::from_ref(x))?.exp(),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            ParamFn::Poly(p) => p.backend(),
            ParamFn::Unit { log } => log.backend(),
        }
    }
}

/// One factor of a parameter-dependent automorphism curve. Stored in
/// application order within a curve.
#[derive(Debug, Clone)]
pub enum CurveFactor {
    /// z -> z + b(x).
    Translation { b: Vec<Poly> },
    /// z -> (I + c(x) E_{ij}) z.
    Transvection { i: usize, j: usize, c: Poly },
    /// z -> diag(..., e^{log(x)} at i, ...) z.
    DiagonalUnit { i: usize, log: Poly },
    /// The scaling curve of a Schwarz automorphism at parameter h(x).
    ScaledCurve { theta: AutValue, h: Poly },
    /// Planar elementary family (X, Y) -> (a(x) X + p(x, Y), b(x) Y + c(x)).
    PlanarElementary {
        a: ParamFn,
        b: ParamFn,
        c: ParamFn,
        /// Coefficients of p by ascending degree; the leading one is a unit
        /// so the degree is constant in x.
        p: Vec<ParamFn>,
    },
    /// A sub-curve scaled along the full curve formula
    /// `t phi(0) + t^{-1}(phi(tz) - phi(0))` with t = h(x).
    ScaledFamily { factors: Vec<CurveFactor>, h: Poly },
}

/// A parameter-dependent automorphism curve; factors in application order.
#[derive(Debug, Clone)]
pub struct ParamAutCurve {
    pub n: usize,
    pub backend: Backend,
    pub tag: GroupTag,
    pub factors: Vec<CurveFactor>,
}

impl ParamAutCurve {
    pub fn identity(n: usize, backend: Backend, tag: GroupTag) -> ParamAutCurve {
        ParamAutCurve {
            n,
            backend,
            tag,
            factors: Vec::new(),
        }
    }

    /// The concrete automorphism at a parameter value.
    pub fn eval_at(&self, x: &Scalar) -> Result<AutValue> {
        let mut value = AutValue::identity(self.n, self.backend);
        for f in &self.factors {
            append_factor_value(&mut value, f, x, self.n, self.backend)?;
        }
        Ok(value)
    }
}

pub(crate) fn append_factor_value(
    value: &mut AutValue,
    factor: &CurveFactor,
    x: &Scalar,
    n: usize,
    backend: Backend,
) -> Result<()> {
    match factor {
        CurveFactor::Translation { b } => {
            let comps = b
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    Poly::var(i, n, backend)
                        .add(&Poly::constant(p.eval(std::slice::from_ref(x))?, n))
                })
                .collect::<Result<Vec<_>>>()?;
            value.push(crate::aut::Atom::Map(PolyMap::new(comps)?));
        }
        CurveFactor::Transvection { i, j, c } => {
            let mut m = Matrix::identity(n, backend);
            *m.at_mut(*i, *j) = c.eval(std::slice::from_ref(x))?;
            value.push(crate::aut::Atom::Map(linear_map(&m, 0, backend)?));
        }
        CurveFactor::DiagonalUnit { i, log } => {
            let u = log.eval(std::slice::from_ref(x))?.exp()?;
            let mut m = Matrix::identity(n, backend);
            *m.at_mut(*i, *i) = u;
            value.push(crate::aut::Atom::Map(linear_map(&m, 0, backend)?));
        }
        CurveFactor::ScaledCurve { theta, h } => {
            let s = h.eval(std::slice::from_ref(x))?;
            let scaled = theta.scaled_schwarz(&s)?;
            for atom in scaled.atoms() {
                value.push(atom.clone());
            }
        }
        CurveFactor::PlanarElementary { a, b, c, p } => {
            let av = a.eval(x)?;
            let bv = b.eval(x)?;
            let cv = c.eval(x)?;
            if av.is_zero() || bv.is_zero() {
                return Err(Error::Invalid("degenerate elementary factor".into()));
            }
            let y = Poly::var(1, 2, backend);
            let mut pv = Poly::zero(2, backend);
            for (d, coeff) in p.iter().enumerate() {
                pv = pv.add(&y.pow(d as u32)?.scale(&coeff.eval(x)?)?)?;
            }
            let comps = vec![
                Poly::var(0, 2, backend).scale(&av)?.add(&pv)?,
                y.scale(&bv)?.add(&Poly::constant(cv, 2))?,
            ];
            value.push(crate::aut::Atom::Map(PolyMap::new(comps)?));
        }
        CurveFactor::ScaledFamily { factors, h } => {
            let mut inner = AutValue::identity(n, backend);
            for f in factors {
                append_factor_value(&mut inner, f, x, n, backend)?;
            }
            let t = h.eval(std::slice::from_ref(x))?;
            if t.is_zero() {
                let lin = inner.d0()?;
                value.push(crate::aut::Atom::Map(linear_map(&lin, 0, backend)?));
            } else {
                let map = inner.to_polymap()?;
                value.push(crate::aut::Atom::Map(scaling_curve_map(&map, &t)?));
            }
        }
    }
    Ok(())
}

/// Interpolation data: distinct nodes and target automorphisms in a common
/// group.
#[derive(Debug, Clone)]
pub struct NodeData {
    pub n: usize,
    pub tag: GroupTag,
    pub nodes: Vec<Scalar>,
    pub targets: Vec<AutValue>,
}

impl NodeData {
    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() != self.targets.len() {
            return Err(Error::Invalid("node and target counts do not match".into()));
        }
        for (i, a) in self.nodes.iter().enumerate() {
            for b in self.nodes.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::RepeatedNode);
                }
            }
        }
        for t in &self.targets {
            if t.n() != self.n {
                return Err(Error::VarMismatch {
                    expected: self.n,
                    got: t.n(),
                });
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Scalar interpolants.
// ---------------------------------------------------------------------------

/// The unique polynomial of degree < r through the data.
pub fn lagrange(nodes: &[Scalar], values: &[Scalar]) -> Result<Poly> {
    if nodes.len() != values.len() || nodes.is_empty() {
        return Err(Error::Invalid(
            "lagrange needs matching nonempty data".into(),
        ));
    }
    let backend = nodes[0].backend();
    for (i, a) in nodes.iter().enumerate() {
        for b in nodes.iter().skip(i + 1) {
            if a == b {
                return Err(Error::RepeatedNode);
            }
        }
    }
    let x = Poly::var(0, 1, backend);
    let mut acc = Poly::zero(1, backend);
    for (k, yk) in values.iter().enumerate() {
        if yk.is_zero() {
            continue;
        }
        let mut num = Poly::constant(yk.clone(), 1);
        for (j, xj) in nodes.iter().enumerate() {
            if j == k {
                continue;
            }
            let den = nodes[k].sub(xj).inv()?;
            let lin = x.sub(&Poly::constant(xj.clone(), 1))?.scale(&den)?;
            num = num.mul(&lin)?;
        }
        acc = acc.add(&num)?;
    }
    Ok(acc)
}

/// The polynomial vanishing at `zeros` and equal to 1 at `one`.
fn bump(zeros: &[Scalar], one: &Scalar) -> Result<Poly> {
    let backend = one.backend();
    let x = Poly::var(0, 1, backend);
    let mut acc = Poly::one(1, backend);
    for z in zeros {
        let den = one.sub(z).inv()?;
        acc = acc.mul(&x.sub(&Poly::constant(z.clone(), 1))?.scale(&den)?)?;
    }
    Ok(acc)
}

/// A nonvanishing interpolant e^{L(x)} through nonzero values, with L the
/// Lagrange polynomial of the principal logarithms.
pub fn nonvanishing_interpolant(nodes: &[Scalar], values: &[Scalar]) -> Result<ParamFn> {
    for v in values {
        if v.is_zero() {
            return Err(Error::ZeroValue);
        }
    }
    let logs = values.iter().map(|v| v.ln()).collect::<Result<Vec<_>>>()?;
    let log = lagrange(nodes, &logs)?;
    Ok(ParamFn::Unit { log })
}

// ---------------------------------------------------------------------------
// Linear-part interpolation.
// ---------------------------------------------------------------------------

/// Builds a chain of transvection and diagonal-unit factors whose value at
/// node x_k is exactly A_k, and which lies in the tag's linear subgroup for
/// every parameter value.
pub fn interp_linear(
    nodes: &[Scalar],
    matrices: &[Matrix],
    tag: GroupTag,
) -> Result<Vec<CurveFactor>> {
    if nodes.len() != matrices.len() || nodes.is_empty() {
        return Err(Error::Invalid(
            "matrix interpolation needs matching data".into(),
        ));
    }
    let n = matrices[0].n;
    let backend = matrices[0].backend();
    let tol = DEFAULT_TOL;
    if tag.symplectic() && n > 2 {
        return Err(Error::Unsupported(
            "symplectic transvection chains are implemented only for two variables".into(),
        ));
    }
    for m in matrices {
        if m.det().is_zero() {
            return Err(Error::SingularLinearPart);
        }
        if tag.volume() || tag.symplectic() {
            let d = m.det();
            let ok = match backend {
                Backend::Exact => d.is_one(),
                Backend::Approx => {
                    (d.to_complex() - num::complex::Complex64::new(1.0, 0.0)).norm() <= tol
                }
            };
            if !ok {
                return Err(Error::TagViolation(format!(
                    "matrix determinant {d} is not 1"
                )));
            }
        }
    }
    // Group the nodes by matrix value; each distinct value contributes its
    // factor chain once, with every coefficient scaled by the Lagrange
    // indicator that is 1 on the value's nodes and 0 on the others. At any
    // node exactly one group is active, so the value there is exact, and the
    // coefficients stay at the scale of the per-value factorizations (no
    // sequential corrections to compound).
    let same = |a: &Matrix, b: &Matrix| match backend {
        Backend::Exact => a == b,
        Backend::Approx => a.approx_eq(b, 1e-12),
    };
    let mut groups: Vec<(Matrix, Vec<usize>)> = Vec::new();
    for (k, m) in matrices.iter().enumerate() {
        match groups.iter_mut().find(|(v, _)| same(v, m)) {
            Some((_, members)) => members.push(k),
            None => groups.push((m.clone(), vec![k])),
        }
    }
    let mut factors: Vec<CurveFactor> = Vec::new();
    for (value, members) in &groups {
        if value.is_identity() {
            continue;
        }
        let indicator = if members.len() == nodes.len() {
            Poly::one(1, backend)
        } else {
            let ones: Vec<Scalar> = (0..nodes.len())
                .map(|k| {
                    if members.contains(&k) {
                        Scalar::one(backend)
                    } else {
                        Scalar::zero(backend)
                    }
                })
                .collect();
            lagrange(nodes, &ones)?
        };
        let elems = transvection_factorization(value)?;
        // value = F_1 ... F_m as a matrix product; in application order the
        // rightmost factor acts first.
        for ef in elems.iter().rev() {
            factors.push(match ef {
                ElementaryFactor::Transvection { i, j, c } => CurveFactor::Transvection {
                    i: *i,
                    j: *j,
                    c: indicator.scale(c)?,
                },
                ElementaryFactor::Dilation { i, u } => CurveFactor::DiagonalUnit {
                    i: *i,
                    log: indicator.scale(&u.ln()?)?,
                },
            });
        }
    }
    Ok(factors)
}

/// Matrix value of a transvection/diagonal chain at a parameter value.
#[cfg(test)]
fn eval_matrix_chain(
    factors: &[CurveFactor],
    x: &Scalar,
    n: usize,
    backend: Backend,
) -> Result<Matrix> {
    let mut acc = Matrix::identity(n, backend);
    for f in factors {
        let m = match f {
            CurveFactor::Transvection { i, j, c } => {
                let mut m = Matrix::identity(n, backend);
                *m.at_mut(*i, *j) = c.eval(std::slice::from_ref(x))?;
                m
            }
            CurveFactor::DiagonalUnit { i, log } => {
                let mut m = Matrix::identity(n, backend);
                *m.at_mut(*i, *i) = log.eval(std::slice::from_ref(x))?.exp()?;
                m
            }
            _ => return Err(Error::Invalid("non-linear factor in matrix chain".into())),
        };
        // Applied after the accumulated value.
        acc = m.mul(&acc);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Schwarz chains.
// ---------------------------------------------------------------------------

fn is_identity_value(v: &AutValue, tol: f64) -> bool {
    if v.atoms().is_empty() {
        return true;
    }
    match v.to_polymap() {
        Ok(m) => match v.backend() {
            Backend::Exact => m.is_identity(),
            Backend::Approx => m.approx_eq(&PolyMap::identity(v.n(), v.backend()), tol),
        },
        Err(_) => false,
    }
}

fn check_schwarz_value(v: &AutValue, tol: f64) -> Result<()> {
    let zero = v.value_at_zero()?;
    let lin = v.d0()?;
    let ok = match v.backend() {
        Backend::Exact => zero.iter().all(|c| c.is_zero()) && lin.is_identity(),
        Backend::Approx => {
            zero.iter().all(|c| c.norm() <= tol)
                && lin.approx_eq(&Matrix::identity(v.n(), v.backend()), tol)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NotSchwarz("chain target".into()))
    }
}

/// Builds the chain H_m(x) = theta_m^{h_{m-1}(x)} o H_{m-1}(x), with
/// theta_m = psi_m o H_{m-1}(t_m)^{-1} and h_{m-1} vanishing at the earlier
/// nodes and equal to 1 at t_m. The value at t_k is exactly psi_k, and adding
/// nodes never disturbs the earlier values.
pub fn interp_schwarz_chain(nodes: &[Scalar], targets: &[AutValue]) -> Result<Vec<CurveFactor>> {
    if nodes.len() != targets.len() || nodes.is_empty() {
        return Err(Error::Invalid("chain needs matching nonempty data".into()));
    }
    let n = targets[0].n();
    let backend = targets[0].backend();
    let tol = DEFAULT_TOL;
    for t in targets {
        check_schwarz_value(t, tol)?;
    }
    let mut factors: Vec<CurveFactor> = Vec::new();
    for (m, node) in nodes.iter().enumerate() {
        let mut current = AutValue::identity(n, backend);
        for f in &factors {
            append_factor_value(&mut current, f, node, n, backend)?;
        }
        // The correction stays a composite of moderate-degree factors;
        // collapsing it into one polynomial map would compound the degrees
        // and ruin the conditioning of later evaluations.
        let theta = current.inverse()?.then(&targets[m]);
        if is_identity_value(&theta, tol) {
            continue;
        }
        let h = if m == 0 {
            Poly::one(1, backend)
        } else {
            bump(&nodes[..m], node)?
        };
        factors.push(CurveFactor::ScaledCurve { theta, h });
    }
    Ok(factors)
}

// ---------------------------------------------------------------------------
// Full interpolation.
// ---------------------------------------------------------------------------

/// Interpolates automorphism targets at the nodes: centers by Lagrange data,
/// linear parts by a transvection chain, tails by a Schwarz chain.
pub fn interpolate_full(data: &NodeData) -> Result<ParamAutCurve> {
    data.validate()?;
    let n = data.n;
    let backend = data
        .targets
        .first()
        .map(|t| t.backend())
        .ok_or_else(|| Error::Invalid("no targets".into()))?;
    let tol = DEFAULT_TOL;
    let mut centers: Vec<Vec<Scalar>> = Vec::with_capacity(data.targets.len());
    let mut linears: Vec<Matrix> = Vec::with_capacity(data.targets.len());
    let mut tails: Vec<AutValue> = Vec::with_capacity(data.targets.len());
    for t in &data.targets {
        let s = schwarz_normalize(t, Some(data.tag), tol)?;
        centers.push(s.center);
        linears.push(s.linear);
        tails.push(s.tail);
    }
    let mut factors = interp_schwarz_chain(&data.nodes, &tails)?;
    factors.extend(interp_linear(&data.nodes, &linears, data.tag)?);
    let mut translation = Vec::with_capacity(n);
    let mut all_zero = true;
    for i in 0..n {
        let vals: Vec<Scalar> = centers.iter().map(|c| c[i].clone()).collect();
        let p = lagrange(&data.nodes, &vals)?;
        all_zero &= p.is_zero();
        translation.push(p);
    }
    if !all_zero {
        factors.push(CurveFactor::Translation { b: translation });
    }
    Ok(ParamAutCurve {
        n,
        backend,
        tag: data.tag,
        factors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aut::certify_value;

    fn s(k: i64) -> Scalar {
        Scalar::from_integer(k, Backend::Exact)
    }

    fn z(i: usize) -> Poly {
        Poly::var(i, 2, Backend::Exact)
    }

    #[test]
    fn lagrange_through_two_points() {
        let p = lagrange(&[s(0), s(1)], &[s(0), s(1)]).unwrap();
        assert_eq!(p, Poly::var(0, 1, Backend::Exact));
    }

    #[test]
    fn lagrange_three_points() {
        // (0,0), (1,0), (2,1) -> x(x-1)/2.
        let p = lagrange(&[s(0), s(1), s(2)], &[s(0), s(0), s(1)]).unwrap();
        let x = Poly::var(0, 1, Backend::Exact);
        let want = x
            .pow(2)
            .unwrap()
            .sub(&x)
            .unwrap()
            .scale(&Scalar::from_ratio(1, 2, Backend::Exact))
            .unwrap();
        assert_eq!(p, want);
    }

    #[test]
    fn lagrange_single_node_is_constant() {
        let p = lagrange(&[s(3)], &[s(7)]).unwrap();
        assert_eq!(p, Poly::constant(s(7), 1));
    }

    #[test]
    fn lagrange_rejects_repeats() {
        assert_eq!(
            lagrange(&[s(1), s(1)], &[s(0), s(0)]).unwrap_err(),
            Error::RepeatedNode
        );
    }

    #[test]
    fn nonvanishing_constant_one() {
        let f = nonvanishing_interpolant(&[s(0)], &[s(1)]).unwrap();
        assert!(f.eval(&s(2)).unwrap().is_one());
    }

    #[test]
    fn nonvanishing_exponential() {
        let nodes = vec![Scalar::from_f64(0.0, 0.0), Scalar::from_f64(1.0, 0.0)];
        let e = Scalar::from_f64(std::f64::consts::E, 0.0);
        let f = nonvanishing_interpolant(&nodes, &[Scalar::from_f64(1.0, 0.0), e.clone()]).unwrap();
        assert!(f
            .eval(&nodes[0])
            .unwrap()
            .approx_eq(&Scalar::from_f64(1.0, 0.0), 1e-12));
        assert!(f.eval(&nodes[1]).unwrap().approx_eq(&e, 1e-12));
        // The interpolant is e^x.
        let half = f.eval(&Scalar::from_f64(0.5, 0.0)).unwrap();
        assert!(half.approx_eq(&Scalar::from_f64(0.5f64.exp(), 0.0), 1e-12));
    }

    #[test]
    fn nonvanishing_negative_value() {
        let f = nonvanishing_interpolant(
            &[Scalar::from_f64(0.0, 0.0)],
            &[Scalar::from_f64(-1.0, 0.0)],
        )
        .unwrap();
        let v = f.eval(&Scalar::from_f64(3.0, 0.0)).unwrap();
        assert!(v.approx_eq(&Scalar::from_f64(-1.0, 0.0), 1e-12));
        assert!(matches!(
            nonvanishing_interpolant(&[s(0)], &[s(0)]),
            Err(Error::ZeroValue)
        ));
    }

    #[test]
    fn interp_linear_identity_targets() {
        let fs = interp_linear(
            &[s(0), s(1)],
            &[
                Matrix::identity(2, Backend::Exact),
                Matrix::identity(2, Backend::Exact),
            ],
            GroupTag::Aut,
        )
        .unwrap();
        assert!(fs.is_empty());
    }

    #[test]
    fn interp_linear_single_transvection() {
        let t = Matrix::from_rows(vec![vec![s(1), s(1)], vec![s(0), s(1)]]).unwrap();
        let fs = interp_linear(
            &[s(0), s(1)],
            &[Matrix::identity(2, Backend::Exact), t.clone()],
            GroupTag::Aut1,
        )
        .unwrap();
        assert_eq!(fs.len(), 1);
        match &fs[0] {
            CurveFactor::Transvection { i: 0, j: 1, c } => {
                assert_eq!(*c, Poly::var(0, 1, Backend::Exact));
            }
            other => panic!("unexpected factor {other:?}"),
        }
        let v0 = eval_matrix_chain(&fs, &s(0), 2, Backend::Exact).unwrap();
        assert!(v0.is_identity());
        let v1 = eval_matrix_chain(&fs, &s(1), 2, Backend::Exact).unwrap();
        assert_eq!(v1, t);
    }

    #[test]
    fn interp_linear_sl2_diagonal() {
        let d = Matrix::from_rows(vec![
            vec![s(2), s(0)],
            vec![s(0), Scalar::from_ratio(1, 2, Backend::Exact)],
        ])
        .unwrap();
        let fs = interp_linear(
            &[s(0), s(1)],
            &[Matrix::identity(2, Backend::Exact), d.clone()],
            GroupTag::Aut1,
        )
        .unwrap();
        assert!(fs.len() <= 4);
        assert!(fs
            .iter()
            .all(|f| matches!(f, CurveFactor::Transvection { .. })));
        let v1 = eval_matrix_chain(&fs, &s(1), 2, Backend::Exact).unwrap();
        assert_eq!(v1, d);
        let v0 = eval_matrix_chain(&fs, &s(0), 2, Backend::Exact).unwrap();
        assert!(v0.is_identity());
        // Determinant 1 everywhere, not just at the nodes.
        let vh = eval_matrix_chain(
            &fs,
            &Scalar::from_ratio(7, 3, Backend::Exact),
            2,
            Backend::Exact,
        )
        .unwrap();
        assert!(vh.det().is_one());
    }

    fn schwarz_shear() -> PolyMap {
        PolyMap::new(vec![z(0).add(&z(1).pow(2).unwrap()).unwrap(), z(1)]).unwrap()
    }

    #[test]
    fn chain_two_nodes_is_scaling_curve() {
        let id = AutValue::from_map(PolyMap::identity(2, Backend::Exact));
        let psi = AutValue::from_map(schwarz_shear());
        let fs = interp_schwarz_chain(&[s(0), s(1)], &[id, psi]).unwrap();
        assert_eq!(fs.len(), 1);
        match &fs[0] {
            CurveFactor::ScaledCurve { h, .. } => {
                assert_eq!(*h, Poly::var(0, 1, Backend::Exact));
            }
            other => panic!("unexpected factor {other:?}"),
        }
    }

    #[test]
    fn chain_three_nodes_exact_values() {
        // Polynomial Schwarz targets; values at nodes equal targets exactly.
        let id = AutValue::from_map(PolyMap::identity(2, Backend::Exact));
        let psi1 = AutValue::from_map(schwarz_shear());
        let psi2 = AutValue::from_map(
            PolyMap::new(vec![z(0), z(1).add(&z(0).pow(2).unwrap()).unwrap()]).unwrap(),
        );
        let nodes = vec![s(0), s(1), s(2)];
        let targets = vec![id.clone(), psi1.clone(), psi2.clone()];
        let fs = interp_schwarz_chain(&nodes, &targets).unwrap();
        for (node, want) in nodes.iter().zip(&targets) {
            let mut value = AutValue::identity(2, Backend::Exact);
            for f in &fs {
                append_factor_value(&mut value, f, node, 2, Backend::Exact).unwrap();
            }
            assert_eq!(value.to_polymap().unwrap(), want.to_polymap().unwrap());
        }
    }

    #[test]
    fn chain_identity_targets_give_empty_curve() {
        let id = AutValue::from_map(PolyMap::identity(2, Backend::Exact));
        let fs = interp_schwarz_chain(&[s(0), s(1), s(2)], &[id.clone(), id.clone(), id]).unwrap();
        assert!(fs.is_empty());
    }

    #[test]
    fn chain_prefix_stability() {
        // Adding a fourth node leaves the first three values unchanged.
        let id = AutValue::from_map(PolyMap::identity(2, Backend::Exact));
        let psi1 = AutValue::from_map(schwarz_shear());
        let psi2 = AutValue::from_map(
            PolyMap::new(vec![z(0), z(1).add(&z(0).pow(2).unwrap()).unwrap()]).unwrap(),
        );
        let psi3 = AutValue::from_map(
            PolyMap::new(vec![z(0).add(&z(1).pow(3).unwrap()).unwrap(), z(1)]).unwrap(),
        );
        let nodes3 = vec![s(0), s(1), s(2)];
        let targets3 = vec![id.clone(), psi1.clone(), psi2.clone()];
        let fs3 = interp_schwarz_chain(&nodes3, &targets3).unwrap();
        let mut nodes4 = nodes3.clone();
        nodes4.push(s(3));
        let mut targets4 = targets3.clone();
        targets4.push(psi3);
        let fs4 = interp_schwarz_chain(&nodes4, &targets4).unwrap();
        for probe in &nodes3 {
            let mut a = AutValue::identity(2, Backend::Exact);
            for f in &fs3 {
                append_factor_value(&mut a, f, probe, 2, Backend::Exact).unwrap();
            }
            let mut b = AutValue::identity(2, Backend::Exact);
            for f in &fs4 {
                append_factor_value(&mut b, f, probe, 2, Backend::Exact).unwrap();
            }
            assert_eq!(a.to_polymap().unwrap(), b.to_polymap().unwrap());
        }
    }

    #[test]
    fn chain_rejects_non_schwarz() {
        let bad = AutValue::from_map(
            PolyMap::new(vec![z(0).add(&Poly::one(2, Backend::Exact)).unwrap(), z(1)]).unwrap(),
        );
        assert!(matches!(
            interp_schwarz_chain(&[s(0)], &[bad]),
            Err(Error::NotSchwarz(_))
        ));
    }

    #[test]
    fn full_interpolation_single_node() {
        let target = AutValue::from_map(
            PolyMap::new(vec![
                z(0).scale(&s(2))
                    .unwrap()
                    .add(&z(1).pow(2).unwrap())
                    .unwrap()
                    .add(&Poly::one(2, Backend::Exact))
                    .unwrap(),
                z(1),
            ])
            .unwrap(),
        );
        let data = NodeData {
            n: 2,
            tag: GroupTag::Aut,
            nodes: vec![Scalar::from_f64(0.5, 0.0)],
            targets: vec![crate::engine::to_approx_value(&target)],
        };
        let curve = interpolate_full(&data).unwrap();
        let v = curve.eval_at(&data.nodes[0]).unwrap();
        for k in 0..10 {
            let zpt = vec![
                Scalar::from_f64(0.1 * k as f64 - 0.3, 0.02 * k as f64),
                Scalar::from_f64(0.4 - 0.06 * k as f64, 0.01 * k as f64),
            ];
            let a = v.eval(&zpt).unwrap();
            let b = crate::engine::to_approx_value(&target).eval(&zpt).unwrap();
            for (p, q) in a.iter().zip(&b) {
                assert!(p.approx_eq(q, 1e-9), "{p} vs {q}");
            }
        }
    }

    #[test]
    fn full_interpolation_affine_targets() {
        // Two affine targets: the family is exact at the nodes and stays in
        // the group globally.
        let backend = Backend::Exact;
        let t1 = AutValue::from_map(PolyMap::identity(2, backend));
        let t2 = AutValue::from_map(
            PolyMap::new(vec![
                z(0).add(&z(1).scale(&s(3)).unwrap())
                    .unwrap()
                    .add(&Poly::one(2, backend))
                    .unwrap(),
                z(1).add(&Poly::constant(s(-2), 2)).unwrap(),
            ])
            .unwrap(),
        );
        let data = NodeData {
            n: 2,
            tag: GroupTag::Aut1,
            nodes: vec![s(0), s(1)],
            targets: vec![t1.clone(), t2.clone()],
        };
        let curve = interpolate_full(&data).unwrap();
        for (node, want) in data.nodes.iter().zip(&data.targets) {
            let got = curve.eval_at(node).unwrap().to_polymap().unwrap();
            assert_eq!(got, want.to_polymap().unwrap());
        }
        let points: Vec<Vec<Scalar>> = (0..5).map(|k| vec![s(k), s(2 * k - 3)]).collect();
        let off = curve
            .eval_at(&Scalar::from_ratio(5, 7, Backend::Exact))
            .unwrap();
        certify_value(&off, GroupTag::Aut1, &points, 1e-8).unwrap();
    }
}
