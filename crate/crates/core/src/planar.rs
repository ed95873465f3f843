//! Structure theory of planar polynomial automorphisms: factorization into
//! affine and elementary maps by leading-form reduction, certification,
//! polydegree and stratum bookkeeping, and interpolation of families of
//! bounded degree through their strata.

use crate::aut::AutValue;
use crate::error::{Error, Result};
use crate::interpolate::{
    interp_linear, lagrange, nonvanishing_interpolant, CurveFactor, ParamAutCurve, ParamFn,
};
use crate::linalg::Matrix;
use crate::poly::Poly;
use crate::polymap::{jacobian_det, linear_map, PolyMap};
use crate::scalar::{Backend, Scalar};
use crate::shear::GroupTag;

/// The planar elementary map (X, Y) -> (a X + p(Y), b Y + c) with a, b != 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Elementary {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    /// Univariate polynomial in Y.
    pub p: Poly,
}

impl Elementary {
    pub fn new(a: Scalar, b: Scalar, c: Scalar, p: Poly) -> Result<Elementary> {
        if a.is_zero() || b.is_zero() {
            return Err(Error::Invalid("elementary maps need a, b nonzero".into()));
        }
        if p.nvars() != 1 {
            return Err(Error::VarMismatch {
                expected: 1,
                got: p.nvars(),
            });
        }
        Ok(Elementary { a, b, c, p })
    }

    pub fn degree(&self) -> u32 {
        self.p.degree().max(1) as u32
    }

    pub fn backend(&self) -> Backend {
        self.a.backend()
    }

    pub fn to_map(&self) -> Result<PolyMap> {
        let backend = self.backend();
        let x = Poly::var(0, 2, backend);
        let y = Poly::var(1, 2, backend);
        let py = self.p.compose(&[y.clone()])?;
        PolyMap::new(vec![
            x.scale(&self.a)?.add(&py)?,
            y.scale(&self.b)?.add(&Poly::constant(self.c.clone(), 2))?,
        ])
    }

    pub fn inverse(&self) -> Result<Elementary> {
        let backend = self.backend();
        let _ = backend;
        let a_inv = self.a.inv()?;
        let b_inv = self.b.inv()?;
        // p'(y) = -p((y - c)/b)/a.
        let y = Poly::var(0, 1, self.backend());
        let arg = y.sub(&Poly::constant(self.c.clone(), 1))?.scale(&b_inv)?;
        let p = self.p.compose(&[arg])?.scale(&a_inv.neg())?;
        let c_new = self.c.neg().mul(&b_inv);
        Elementary::new(a_inv, b_inv, c_new, p)
    }

    fn compose_after(&self, first: &Elementary) -> Result<Elementary> {
        // self o first.
        let y = Poly::var(0, 1, self.backend());
        let inner = y
            .scale(&first.b)?
            .add(&Poly::constant(first.c.clone(), 1))?;
        let p = first.p.scale(&self.a)?.add(&self.p.compose(&[inner])?)?;
        Elementary::new(
            self.a.mul(&first.a),
            self.b.mul(&first.b),
            self.b.mul(&first.c).add(&self.c),
            p,
        )
    }
}

/// A factor of a planar word: an affine map or an elementary map.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanarFactor {
    Affine { a: Matrix, b: Vec<Scalar> },
    Elementary(Elementary),
}

impl PlanarFactor {
    pub fn to_map(&self) -> Result<PolyMap> {
        match self {
            PlanarFactor::Affine { a, b } => {
                let lin = linear_map(a, 0, a.backend())?;
                let comps = lin
                    .components()
                    .iter()
                    .zip(b)
                    .map(|(c, bi)| c.add(&Poly::constant(bi.clone(), 2)))
                    .collect::<Result<Vec<_>>>()?;
                PolyMap::new(comps)
            }
            PlanarFactor::Elementary(e) => e.to_map(),
        }
    }

    pub fn inverse(&self) -> Result<PlanarFactor> {
        Ok(match self {
            PlanarFactor::Affine { a, b } => {
                let a_inv = a.inverse()?;
                let nb = a_inv.apply(b).iter().map(|c| c.neg()).collect();
                PlanarFactor::Affine { a: a_inv, b: nb }
            }
            PlanarFactor::Elementary(e) => PlanarFactor::Elementary(e.inverse()?),
        })
    }

    /// Membership in S = A n E: triangular affine maps.
    fn in_s(&self) -> bool {
        match self {
            PlanarFactor::Affine { a, .. } => a.at(1, 0).is_zero(),
            PlanarFactor::Elementary(e) => e.p.degree() <= 1,
        }
    }

    fn as_elementary(&self) -> Result<Elementary> {
        match self {
            PlanarFactor::Elementary(e) => Ok(e.clone()),
            PlanarFactor::Affine { a, b } => {
                if !a.at(1, 0).is_zero() {
                    return Err(Error::Invalid("affine factor is not elementary".into()));
                }
                let y = Poly::var(0, 1, a.backend());
                let p = y.scale(a.at(0, 1))?.add(&Poly::constant(b[0].clone(), 1))?;
                Elementary::new(a.at(0, 0).clone(), a.at(1, 1).clone(), b[1].clone(), p)
            }
        }
    }

    fn as_affine(&self) -> Result<PlanarFactor> {
        match self {
            PlanarFactor::Affine { .. } => Ok(self.clone()),
            PlanarFactor::Elementary(e) => {
                if e.p.degree() > 1 {
                    return Err(Error::Invalid("elementary factor is not affine".into()));
                }
                let backend = e.backend();
                let p1 = e.p.coeff(&crate::poly::MultiIndex(vec![1]));
                let p0 = e.p.constant_term();
                let a = Matrix::from_rows(vec![
                    vec![e.a.clone(), p1],
                    vec![Scalar::zero(backend), e.b.clone()],
                ])?;
                Ok(PlanarFactor::Affine {
                    a,
                    b: vec![p0, e.c.clone()],
                })
            }
        }
    }
}

/// An alternating affine/elementary word for a planar automorphism, with its
/// source map; recomposition equals the source exactly on the exact backend.
#[derive(Debug, Clone)]
pub struct Factorization {
    /// Factors in application order.
    pub factors: Vec<PlanarFactor>,
    pub source: PolyMap,
    /// False when the leading-form comparisons ran under a tolerance.
    pub certified: bool,
}

impl Factorization {
    pub fn recompose(&self) -> Result<PolyMap> {
        let backend = self.source.backend();
        let mut map = PolyMap::identity(2, backend);
        for f in &self.factors {
            map = map.then(&f.to_map()?)?;
        }
        Ok(map)
    }

    pub fn polydegree(&self) -> Polydegree {
        Polydegree(
            self.factors
                .iter()
                .filter_map(|f| match f {
                    PlanarFactor::Elementary(e) => Some(e.degree()),
                    _ => None,
                })
                .collect(),
        )
    }
}

/// The sequence of elementary-factor degrees >= 2, in word order; empty for
/// affine maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polydegree(pub Vec<u32>);

impl Polydegree {
    /// Product of the entries (1 for affine maps).
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&d| d as u64).product()
    }

    /// Dimension of the stratum of automorphisms with this polydegree; the
    /// affine group itself has dimension 6.
    pub fn stratum_dim(&self) -> u64 {
        self.0.iter().map(|&d| d as u64).sum::<u64>() + 6
    }
}

/// Max total degree of the components.
pub fn degree_of(map: &PolyMap) -> i64 {
    map.degree()
}

// ---------------------------------------------------------------------------
// Factorization by leading-form reduction.
// ---------------------------------------------------------------------------

fn leading_form_ratio(pbar: &Poly, qk: &Poly, backend: Backend, tol: f64) -> Option<Scalar> {
    let (ep, cp) = pbar.leading()?;
    let (eq, cq) = qk.leading()?;
    if ep != eq {
        return None;
    }
    let c = cp.div(cq).ok()?;
    let diff = pbar.sub(&qk.scale(&c).ok()?).ok()?;
    let ok = match backend {
        Backend::Exact => diff.is_zero(),
        Backend::Approx => diff.coeff_norm() <= tol * (1.0 + pbar.coeff_norm()),
    };
    if ok {
        Some(c)
    } else {
        None
    }
}

/// Factors a planar polynomial automorphism into an alternating word of
/// affine and elementary maps by strictly reducing the top component degree:
/// swap so deg p >= deg q, require deg q | deg p and the leading form of p
/// proportional to the matching power of the leading form of q, and subtract.
/// Failure of either condition certifies that the input is not an
/// automorphism.
pub fn jvdk_factor(g: &PolyMap) -> Result<Factorization> {
    if g.n() != 2 {
        return Err(Error::Unsupported(
            "factorization applies to maps of two variables".into(),
        ));
    }
    let backend = g.backend();
    let tol = 1e-8;
    let jd = jacobian_det(g)?;
    let jd_const = match backend {
        Backend::Exact => jd.degree() <= 0 && !jd.is_zero(),
        Backend::Approx => {
            let tail = jd.sub(&Poly::constant(jd.constant_term(), 2))?;
            !jd.constant_term().is_zero() && tail.coeff_norm() <= tol * (1.0 + jd.coeff_norm())
        }
    };
    if !jd_const {
        return Err(Error::NonConstantJacobian(jd.to_string()));
    }
    let mut cur = g.clone();
    // Applied reductions, in application order; at the end,
    // (last o ... o first)(g) is the affine residual.
    let mut ops: Vec<PlanarFactor> = Vec::new();
    let swap = PlanarFactor::Affine {
        a: Matrix::from_rows(vec![
            vec![Scalar::zero(backend), Scalar::one(backend)],
            vec![Scalar::one(backend), Scalar::zero(backend)],
        ])?,
        b: vec![Scalar::zero(backend); 2],
    };
    loop {
        let dp = cur.component(0).degree();
        let dq = cur.component(1).degree();
        if dp <= 1 && dq <= 1 {
            break;
        }
        if dp < dq {
            cur = cur.then(&swap.to_map()?)?;
            ops.push(swap.clone());
            continue;
        }
        if dq < 1 {
            return Err(Error::NotAnAutomorphism("a component is constant".into()));
        }
        if dp % dq != 0 {
            return Err(Error::NotAnAutomorphism(format!(
                "component degrees {dp} and {dq} fail divisibility"
            )));
        }
        let k = (dp / dq) as u32;
        let pbar = cur.component(0).homogeneous_part(dp as u32);
        let qbar = cur.component(1).homogeneous_part(dq as u32);
        let qk = qbar.pow(k)?;
        let Some(c) = leading_form_ratio(&pbar, &qk, backend, tol) else {
            return Err(Error::NotAnAutomorphism(format!(
                "leading form of degree {dp} is not proportional to the {k}-th power of the degree-{dq} leading form"
            )));
        };
        // Left-compose (X - c Y^k, Y).
        let y = Poly::var(0, 1, backend);
        let e = Elementary::new(
            Scalar::one(backend),
            Scalar::one(backend),
            Scalar::zero(backend),
            y.pow(k)?.scale(&c.neg())?,
        )?;
        let reduced = cur.component(0).sub(&cur.component(1).pow(k)?.scale(&c)?)?;
        if reduced.degree() >= dp {
            return Err(Error::NotAnAutomorphism(
                "leading-form subtraction failed to reduce the degree".into(),
            ));
        }
        cur = PolyMap::new(vec![reduced, cur.component(1).clone()])?;
        ops.push(PlanarFactor::Elementary(e));
    }
    // Affine residual; its linear part is invertible since the Jacobian is a
    // nonzero constant.
    let lin = cur.linear_part()?;
    if lin.det().is_zero() {
        return Err(Error::NotAnAutomorphism("singular affine residual".into()));
    }
    let residual = PlanarFactor::Affine {
        a: lin,
        b: cur.value_at_zero(),
    };
    // g = first^{-1} o ... o last^{-1} o residual: in application order the
    // residual acts first, then the inverted reductions in reverse.
    let mut factors = vec![residual];
    for op in ops.iter().rev() {
        factors.push(op.inverse()?);
    }
    let factors = normalize_word(factors, backend)?;
    let fac = Factorization {
        factors,
        source: g.clone(),
        certified: backend == Backend::Exact,
    };
    debug_assert!(
        backend != Backend::Exact || fac.recompose()? == *g,
        "recomposition drifted"
    );
    Ok(fac)
}

/// Canonical form: adjacent same-kind factors are composed, and factors in
/// S = A n E are folded into the next-applied neighbor (into the previous one
/// at the end of the word). A pure affine word stays as one affine factor.
fn normalize_word(mut factors: Vec<PlanarFactor>, backend: Backend) -> Result<Vec<PlanarFactor>> {
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < factors.len() {
            let same_kind = matches!(
                (&factors[i], &factors[i + 1]),
                (PlanarFactor::Affine { .. }, PlanarFactor::Affine { .. })
                    | (PlanarFactor::Elementary(_), PlanarFactor::Elementary(_))
            );
            if same_kind {
                let merged = compose_pair(&factors[i], &factors[i + 1])?;
                factors.splice(i..i + 2, [merged]);
                changed = true;
            } else {
                i += 1;
            }
        }
        if factors.len() > 1 {
            if let Some(i) = factors.iter().position(|f| f.in_s()) {
                if i + 1 < factors.len() {
                    let merged = compose_mixed(&factors[i], &factors[i + 1])?;
                    factors.splice(i..i + 2, [merged]);
                } else {
                    let merged = compose_mixed(&factors[i - 1], &factors[i])?;
                    factors.splice(i - 1..i + 1, [merged]);
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if factors.is_empty() {
        factors.push(PlanarFactor::Affine {
            a: Matrix::identity(2, backend),
            b: vec![Scalar::zero(backend); 2],
        });
    }
    Ok(factors)
}

/// Composition of (first-applied, then-applied) of the same kind.
fn compose_pair(first: &PlanarFactor, second: &PlanarFactor) -> Result<PlanarFactor> {
    match (first, second) {
        (PlanarFactor::Affine { a: a1, b: b1 }, PlanarFactor::Affine { a: a2, b: b2 }) => {
            let a = a2.mul(a1);
            let mut b = a2.apply(b1);
            for (bi, b2i) in b.iter_mut().zip(b2) {
                *bi = bi.add(b2i);
            }
            Ok(PlanarFactor::Affine { a, b })
        }
        (PlanarFactor::Elementary(e1), PlanarFactor::Elementary(e2)) => {
            Ok(PlanarFactor::Elementary(e2.compose_after(e1)?))
        }
        _ => compose_mixed(first, second),
    }
}

/// Composition when one side is in S: the result takes the other side's kind.
fn compose_mixed(first: &PlanarFactor, second: &PlanarFactor) -> Result<PlanarFactor> {
    match (first, second) {
        (PlanarFactor::Affine { .. }, PlanarFactor::Affine { .. })
        | (PlanarFactor::Elementary(_), PlanarFactor::Elementary(_)) => compose_pair(first, second),
        (PlanarFactor::Affine { .. }, PlanarFactor::Elementary(e2)) => {
            if first.in_s() {
                let e1 = first.as_elementary()?;
                Ok(PlanarFactor::Elementary(e2.compose_after(&e1)?))
            } else {
                let a2 = second.as_affine()?;
                compose_pair(first, &a2)
            }
        }
        (PlanarFactor::Elementary(e1), PlanarFactor::Affine { .. }) => {
            if second.in_s() {
                let e2 = second.as_elementary()?;
                Ok(PlanarFactor::Elementary(e2.compose_after(e1)?))
            } else {
                let a1 = first.as_affine()?;
                compose_pair(&a1, second)
            }
        }
    }
}

/// Reversed word of factor inverses; recomposes to the inverse automorphism.
pub fn invert_planar(f: &Factorization) -> Result<Factorization> {
    let backend = f.source.backend();
    let factors: Vec<PlanarFactor> = f
        .factors
        .iter()
        .rev()
        .map(|x| x.inverse())
        .collect::<Result<Vec<_>>>()?;
    let factors = normalize_word(factors, backend)?;
    let mut source = PolyMap::identity(2, backend);
    for x in &factors {
        source = source.then(&x.to_map()?)?;
    }
    Ok(Factorization {
        factors,
        source,
        certified: f.certified,
    })
}

// ---------------------------------------------------------------------------
// Bounded-degree interpolation through the strata.
// ---------------------------------------------------------------------------

/// Aligns a canonical word to the class template a0 e1 a1 ... e_m a_m by
/// inserting identity affine factors at the ends.
fn pad_to_template(factors: &[PlanarFactor], backend: Backend) -> Vec<PlanarFactor> {
    let id = PlanarFactor::Affine {
        a: Matrix::identity(2, backend),
        b: vec![Scalar::zero(backend); 2],
    };
    let mut out: Vec<PlanarFactor> = Vec::new();
    let mut expect_affine = true;
    for f in factors {
        match (expect_affine, f) {
            (true, PlanarFactor::Affine { .. }) => {
                out.push(f.clone());
                expect_affine = false;
            }
            (true, PlanarFactor::Elementary(_)) => {
                out.push(id.clone());
                out.push(f.clone());
                expect_affine = true;
            }
            (false, PlanarFactor::Elementary(_)) => {
                out.push(f.clone());
                expect_affine = true;
            }
            (false, PlanarFactor::Affine { .. }) => {
                out.push(f.clone());
                expect_affine = false;
            }
        }
    }
    if out.len() % 2 == 0 {
        out.push(id);
    }
    out
}

/// Interpolates planar polynomial automorphisms at finitely many nodes.
/// Nodes are partitioned by polydegree class; each class gets a
/// stratum-respecting family by slotwise interpolation of its canonical
/// factorizations (exponential units keep the structurally nonzero
/// coefficients nonzero for every parameter value), and the classes are
/// blended with scaling curves and matrix corrections that cancel the
/// off-class factors at the nodes.
pub fn interp_planar_bounded(nodes: &[Scalar], targets: &[PolyMap]) -> Result<ParamAutCurve> {
    if nodes.len() != targets.len() || nodes.is_empty() {
        return Err(Error::Invalid(
            "matching nonempty node data required".into(),
        ));
    }
    for (i, a) in nodes.iter().enumerate() {
        for b in nodes.iter().skip(i + 1) {
            if a == b {
                return Err(Error::RepeatedNode);
            }
        }
    }
    // The stratum parameterization uses exponential units, so the curve is
    // built on the approximate backend.
    let backend = Backend::Approx;
    let nodes: Vec<Scalar> = nodes.iter().map(|x| x.to_approx()).collect();
    let targets: Vec<PolyMap> = targets.iter().map(|t| t.to_approx()).collect();

    let mut facs = Vec::with_capacity(targets.len());
    for t in &targets {
        facs.push(jvdk_factor(t)?);
    }
    let mut classes: Vec<(Polydegree, Vec<usize>)> = Vec::new();
    for (i, f) in facs.iter().enumerate() {
        let pd = f.polydegree();
        match classes.iter_mut().find(|(q, _)| *q == pd) {
            Some((_, members)) => members.push(i),
            None => classes.push((pd, vec![i])),
        }
    }

    let mut class_families: Vec<Vec<CurveFactor>> = Vec::new();
    for (_, members) in &classes {
        let class_nodes: Vec<Scalar> = members.iter().map(|&i| nodes[i].clone()).collect();
        let padded: Vec<Vec<PlanarFactor>> = members
            .iter()
            .map(|&i| pad_to_template(&facs[i].factors, backend))
            .collect();
        let slots = padded[0].len();
        for p in &padded {
            if p.len() != slots {
                return Err(Error::Invalid(
                    "class members disagree on the factor template".into(),
                ));
            }
        }
        let mut family: Vec<CurveFactor> = Vec::new();
        for s in 0..slots {
            if s % 2 == 0 {
                // Affine slot: a linear chain plus a translation.
                let mats: Vec<Matrix> = padded
                    .iter()
                    .map(|p| match &p[s] {
                        PlanarFactor::Affine { a, .. } => Ok(a.clone()),
                        _ => Err(Error::Invalid("template slot mismatch".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let trans: Vec<Vec<Scalar>> = padded
                    .iter()
                    .map(|p| match &p[s] {
                        PlanarFactor::Affine { b, .. } => Ok(b.clone()),
                        _ => Err(Error::Invalid("template slot mismatch".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                family.extend(interp_linear(&class_nodes, &mats, GroupTag::Aut)?);
                let mut bpolys = Vec::with_capacity(2);
                let mut all_zero = true;
                for i in 0..2 {
                    let vals: Vec<Scalar> = trans.iter().map(|b| b[i].clone()).collect();
                    let p = lagrange(&class_nodes, &vals)?;
                    all_zero &= p.is_zero();
                    bpolys.push(p);
                }
                if !all_zero {
                    family.push(CurveFactor::Translation { b: bpolys });
                }
            } else {
                // Elementary slot: units for a, b and the leading coefficient
                // keep the stratum constant in the parameter.
                let elems: Vec<Elementary> = padded
                    .iter()
                    .map(|p| match &p[s] {
                        PlanarFactor::Elementary(e) => Ok(e.clone()),
                        _ => Err(Error::Invalid("template slot mismatch".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let deg = elems[0].degree();
                for e in &elems {
                    if e.degree() != deg {
                        return Err(Error::Invalid(
                            "class members disagree on elementary degrees".into(),
                        ));
                    }
                }
                let a_vals: Vec<Scalar> = elems.iter().map(|e| e.a.clone()).collect();
                let b_vals: Vec<Scalar> = elems.iter().map(|e| e.b.clone()).collect();
                let c_vals: Vec<Scalar> = elems.iter().map(|e| e.c.clone()).collect();
                let a = nonvanishing_interpolant(&class_nodes, &a_vals)?;
                let b = nonvanishing_interpolant(&class_nodes, &b_vals)?;
                let c = ParamFn::Poly(lagrange(&class_nodes, &c_vals)?);
                let mut p_fns = Vec::with_capacity(deg as usize + 1);
                for d in 0..=deg {
                    let coeffs: Vec<Scalar> = elems
                        .iter()
                        .map(|e| e.p.coeff(&crate::poly::MultiIndex(vec![d])))
                        .collect();
                    if d == deg {
                        p_fns.push(nonvanishing_interpolant(&class_nodes, &coeffs)?);
                    } else {
                        p_fns.push(ParamFn::Poly(lagrange(&class_nodes, &coeffs)?));
                    }
                }
                family.push(CurveFactor::PlanarElementary { a, b, c, p: p_fns });
            }
        }
        class_families.push(family);
    }

    // Blend the classes: scale each family along its class bump; a matrix
    // correction cancels each family's own derivative at foreign nodes.
    let mut factors: Vec<CurveFactor> = Vec::new();
    for (j, (_, members)) in classes.iter().enumerate().rev() {
        let family = &class_families[j];
        let ones: Vec<Scalar> = (0..nodes.len())
            .map(|k| {
                if members.contains(&k) {
                    Scalar::one(backend)
                } else {
                    Scalar::zero(backend)
                }
            })
            .collect();
        let h = lagrange(&nodes, &ones)?;
        let mut beta_targets: Vec<Matrix> = Vec::with_capacity(nodes.len());
        for (k, x) in nodes.iter().enumerate() {
            if members.contains(&k) {
                beta_targets.push(Matrix::identity(2, backend));
            } else {
                let mut v = AutValue::identity(2, backend);
                for f in family {
                    crate::interpolate::append_factor_value(&mut v, f, x, 2, backend)?;
                }
                beta_targets.push(v.d0()?.inverse()?);
            }
        }
        factors.push(CurveFactor::ScaledFamily {
            factors: family.clone(),
            h,
        });
        factors.extend(interp_linear(&nodes, &beta_targets, GroupTag::Aut)?);
    }
    Ok(ParamAutCurve {
        n: 2,
        backend,
        tag: GroupTag::AutAlg,
        factors,
    })
}
