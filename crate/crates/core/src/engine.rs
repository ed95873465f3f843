//! The approximation pipeline: normalize the target, freeze the isotopy
//! field on time subintervals, decompose each frozen field into complete
//! shear fields, and concatenate their exact flows. A parameterized variant
//! additionally interpolates the identity at finitely many parameter values,
//! structurally: every flow time is a polynomial in the parameter vanishing
//! at the nodes.

use std::time::Instant;

use crate::aut::{schwarz_normalize, AutValue};
use crate::decompose::{
    decompose_field, decompose_field_param, exact_flow, ConjFlavor, FieldTag, ParamSummand,
};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::Poly;
use crate::polymap::{jacobian_det, jet_invert, Jet, PolyMap};
use crate::scalar::{Backend, Scalar, DEFAULT_TOL};
use crate::shear::{GroupTag, ShearGen, ShearWord};
use crate::vectorfield::VectorField;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Number of time subintervals.
    pub steps: usize,
    /// Truncation order of the frozen fields.
    pub order: i64,
    /// Polydisc radii, one per coordinate.
    pub radii: Vec<f64>,
    /// Sample angles per coordinate circle.
    pub angles: usize,
    /// Radial fractions of each radius sampled.
    pub radial_fractions: Vec<f64>,
    /// Radius of the closed parameter disc for the interpolating variant.
    pub param_radius: f64,
}

impl PipelineConfig {
    pub fn new(steps: usize, order: i64, n: usize) -> Result<PipelineConfig> {
        if steps < 1 {
            return Err(Error::Invalid("steps must be at least 1".into()));
        }
        if order < 2 {
            return Err(Error::Invalid("truncation order must be at least 2".into()));
        }
        Ok(PipelineConfig {
            steps,
            order,
            radii: vec![1.0; n],
            angles: 8,
            radial_fractions: vec![0.5, 1.0],
            param_radius: 1.0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// Max over the sample grid of the Euclidean distance to the target.
    pub sup_error: f64,
    /// Per-step sup norm (on the polydisc) of the dropped tail of the frozen
    /// field, estimated from two extra truncation orders.
    pub step_truncation_residuals: Vec<f64>,
    /// Per-step decomposition residual coefficient norms.
    pub decomposition_residuals: Vec<f64>,
    /// Wall-clock duration of the run.
    pub seconds: f64,
}

/// Tensor-product sample grid: roots of unity at the given radial fractions
/// of each coordinate radius.
pub fn polydisc_grid(radii: &[f64], angles: usize, fractions: &[f64]) -> Vec<Vec<Scalar>> {
    let n = radii.len();
    let mut per_coord: Vec<Vec<Scalar>> = Vec::with_capacity(n);
    for r in radii {
        let mut pts = Vec::new();
        for f in fractions {
            for a in 0..angles {
                let th = 2.0 * std::f64::consts::PI * (a as f64) / (angles as f64);
                pts.push(Scalar::from_f64(r * f * th.cos(), r * f * th.sin()));
            }
        }
        per_coord.push(pts);
    }
    let mut grid: Vec<Vec<Scalar>> = vec![Vec::new()];
    for coord_pts in per_coord {
        let mut next = Vec::with_capacity(grid.len() * coord_pts.len());
        for g in &grid {
            for p in &coord_pts {
                let mut h = g.clone();
                h.push(p.clone());
                next.push(h);
            }
        }
        grid = next;
    }
    grid
}

/// Sample points of a closed disc in the parameter plane.
pub fn disc_grid(radius: f64, angles: usize, fractions: &[f64]) -> Vec<Scalar> {
    let mut pts = vec![Scalar::from_f64(0.0, 0.0)];
    for f in fractions {
        for a in 0..angles {
            let th = 2.0 * std::f64::consts::PI * (a as f64) / (angles as f64);
            pts.push(Scalar::from_f64(
                radius * f * th.cos(),
                radius * f * th.sin(),
            ));
        }
    }
    pts
}

// ---------------------------------------------------------------------------
// Isotopy field.
// ---------------------------------------------------------------------------

fn check_schwarz_jet(h: &Jet) -> Result<()> {
    let params = h.map.params();
    for (i, c) in h.map.components().iter().enumerate() {
        for (e, coeff) in c.terms() {
            let zdeg = e.total_from(params);
            if zdeg == 0 {
                return Err(Error::NotSchwarz("value at 0 is not 0".into()));
            }
            if zdeg == 1 {
                let is_own_var = e.0[params + i] == 1 && e.total() == 1;
                if !is_own_var || !coeff.is_one() {
                    return Err(Error::NotSchwarz(
                        "derivative at 0 is not the identity".into(),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// The vector field generating the scaling isotopy of a Schwarz map, frozen
/// at time `t` and truncated to degree `k`:
/// `V(t, .) = (d/dt H_t) o (H_t)^{-1}` with `H_t(z) = t^{-1} H(t z)`.
/// The degree-d coefficient of H picks up `t^{d-1}`, its time derivative
/// `(d-1) t^{d-2}`, and the result vanishes to second order at 0.
pub fn isotopy_field(h: &Jet, t: &Scalar, k: i64) -> Result<VectorField> {
    check_schwarz_jet(h)?;
    let params = h.map.params();
    let backend = h.map.backend();
    let mut ht_comps = Vec::with_capacity(h.map.n());
    let mut dht_comps = Vec::with_capacity(h.map.n());
    for c in h.map.components() {
        let mut ht = Poly::zero(c.nvars(), backend);
        let mut dht = Poly::zero(c.nvars(), backend);
        for (e, coeff) in c.terms() {
            let d = e.total_from(params);
            debug_assert!(d >= 1);
            ht = ht.add(&Poly::monomial(&e.0, coeff.mul(&t.powi(d - 1)), c.nvars()))?;
            if d >= 2 {
                let factor = Scalar::from_integer((d - 1) as i64, backend).mul(&t.powi(d - 2));
                dht = dht.add(&Poly::monomial(&e.0, coeff.mul(&factor), c.nvars()))?;
            }
        }
        ht_comps.push(ht);
        dht_comps.push(dht);
    }
    let ht = PolyMap::with_params(params, ht_comps)?;
    let dht = PolyMap::with_params(params, dht_comps)?;
    let ht_inv = jet_invert(&Jet::exact(ht, k))?;
    let v = ht_inv.map.then_truncated(&dht, k)?;
    VectorField::with_params(params, v.components().to_vec())
}

// ---------------------------------------------------------------------------
// Non-parametric approximation.
// ---------------------------------------------------------------------------

fn group_tag_for(tag: FieldTag) -> GroupTag {
    match tag {
        FieldTag::General => GroupTag::Aut,
        FieldTag::Volume => GroupTag::Aut1,
        FieldTag::Symplectic => GroupTag::AutSp,
    }
}

fn conj_flavor_for(tag: FieldTag) -> ConjFlavor {
    match tag {
        FieldTag::Symplectic => ConjFlavor::Symplectic,
        _ => ConjFlavor::Unimodular,
    }
}

/// Tag consistency of the target: volume targets must have Jacobian 1,
/// symplectic targets must preserve the standard form (checked symbolically
/// for polynomial input, per generator for words).
fn check_target_tag(target: &AutValue, tag: FieldTag, tol: f64) -> Result<()> {
    if tag == FieldTag::General {
        return Ok(());
    }
    if let Ok(map) = target.to_polymap() {
        match tag {
            FieldTag::Volume => {
                let jd = jacobian_det(&map)?;
                let want = Poly::one(jd.nvars(), jd.backend());
                let ok = match map.backend() {
                    Backend::Exact => jd == want,
                    Backend::Approx => jd.approx_eq(&want, tol),
                };
                if !ok {
                    return Err(Error::TagViolation(format!(
                        "target Jacobian is {jd}, expected 1"
                    )));
                }
            }
            FieldTag::Symplectic => {
                check_symplectic_map(&map, tol)?;
            }
            FieldTag::General => {}
        }
        return Ok(());
    }
    // Transcendental words: fall back to the per-generator certificate.
    for atom in target.atoms() {
        if let crate::aut::Atom::Word(w) = atom {
            let mut tagged = w.clone();
            tagged.tag = group_tag_for(tag);
            tagged.certify(tol)?;
        }
    }
    Ok(())
}

/// Symbolic check that DF^T J DF = J.
fn check_symplectic_map(map: &PolyMap, tol: f64) -> Result<()> {
    let n = map.n();
    if n % 2 != 0 {
        return Err(Error::TagViolation(
            "symplectic targets need an even number of variables".into(),
        ));
    }
    let backend = map.backend();
    let jac = map.jacobian_matrix();
    let j = crate::linalg::symplectic_form_matrix(n, backend);
    for a in 0..n {
        for b in 0..n {
            let mut acc = Poly::zero(map.nvars(), backend);
            for i in 0..n {
                for k in 0..n {
                    if j.at(i, k).is_zero() {
                        continue;
                    }
                    acc = acc.add(&jac[i][a].mul(&jac[k][b])?.scale(j.at(i, k))?)?;
                }
            }
            let want = Poly::constant(j.at(a, b).clone(), map.nvars());
            let ok = match backend {
                Backend::Exact => acc == want,
                Backend::Approx => acc.approx_eq(&want, tol),
            };
            if !ok {
                return Err(Error::TagViolation(
                    "target does not preserve the symplectic form".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Approximates the target automorphism by a word of shear flows: Schwarz
/// normalization, per-step frozen isotopy fields, decomposition, and
/// first-order splitting of the summand flows, appended in the
/// decomposition's deterministic order.
pub fn approximate(
    target: &AutValue,
    tag: FieldTag,
    cfg: &PipelineConfig,
) -> Result<(ShearWord, ErrorReport)> {
    let start = Instant::now();
    let n = target.n();
    let backend = target.backend();
    check_target_tag(target, tag, DEFAULT_TOL)?;
    let schwarz = schwarz_normalize(target, Some(group_tag_for(tag)), DEFAULT_TOL)?;
    let hjet = jet_of_value(&schwarz.tail, cfg.order)?;

    let steps = cfg.steps;
    let mut word = ShearWord::empty(n, backend, group_tag_for(tag))?;
    let mut dec_residuals = Vec::with_capacity(steps);
    let mut trunc_residuals = Vec::with_capacity(steps);
    let grid = polydisc_grid(&cfg.radii, cfg.angles, &cfg.radial_fractions);
    let step_time = step_scalar(1, steps as i64, backend);
    for j in 0..steps {
        let t = step_scalar(j as i64, steps as i64, backend);
        let w_j = isotopy_field(&hjet, &t, cfg.order)?;
        // Truncation diagnostic: compare against two more orders.
        let w_wide = isotopy_field(&hjet, &t, cfg.order + 2)?;
        trunc_residuals.push(field_sup_on_grid(&w_wide.sub(&w_j)?, &grid)?);
        let dec = decompose_field(&w_j, tag)?;
        dec_residuals.push(dec.residual.coeff_norm());
        if dec.residual.coeff_norm() > DEFAULT_TOL {
            return Err(Error::RankFailure(format!(
                "decomposition residual {} at step {j}",
                dec.residual.coeff_norm()
            )));
        }
        for s in &dec.summands {
            let gen = exact_flow(s, &step_time, conj_flavor_for(tag))?;
            if !gen.is_identity() {
                word.push(gen)?;
            }
        }
    }
    // Affine part, emitted exactly, applied after the Schwarz tail flows.
    push_affine(&mut word, &schwarz.linear, &schwarz.center)?;
    word.certify(DEFAULT_TOL)?;

    let sup = sup_distance_word(&word, target, &grid)?;
    let report = ErrorReport {
        sup_error: sup,
        step_truncation_residuals: trunc_residuals,
        decomposition_residuals: dec_residuals,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((word, report))
}

fn step_scalar(num: i64, den: i64, backend: Backend) -> Scalar {
    match backend {
        Backend::Exact => Scalar::from_ratio(num, den, Backend::Exact),
        Backend::Approx => Scalar::from_f64(num as f64 / den as f64, 0.0),
    }
}

fn push_affine(word: &mut ShearWord, a: &Matrix, b: &[Scalar]) -> Result<()> {
    let identity = a.is_identity() && b.iter().all(|c| c.is_zero());
    if !identity {
        word.push(ShearGen::affine(a.clone(), b.to_vec())?)?;
    }
    Ok(())
}

/// Jet of a composite automorphism value, exact through the order.
fn jet_of_value(value: &AutValue, k: i64) -> Result<Jet> {
    let mut jet = Jet::identity(value.n(), k, value.backend());
    for atom in value.atoms() {
        match atom {
            crate::aut::Atom::Map(m) => {
                jet = jet.then(&Jet::exact(m.clone(), k))?;
            }
            crate::aut::Atom::Word(w) => {
                for g in w.gens() {
                    jet = g.extend_jet(&jet)?;
                }
            }
            crate::aut::Atom::ScaledWord { word, t } => {
                let base = word.jet(k)?;
                let scaled = crate::shear::scaling_curve_map(&base.map, t)?;
                jet = jet.then(&Jet {
                    map: scaled,
                    order: k,
                    truncated: base.truncated,
                })?;
            }
        }
    }
    Ok(jet)
}

fn field_sup_on_grid(w: &VectorField, grid: &[Vec<Scalar>]) -> Result<f64> {
    let wa = w.to_approx();
    let mut sup: f64 = 0.0;
    for z in grid {
        let v = wa.eval(z)?;
        let norm2: f64 = v.iter().map(|c| c.norm().powi(2)).sum();
        sup = sup.max(norm2.sqrt());
    }
    Ok(sup)
}

fn sup_distance_word(word: &ShearWord, target: &AutValue, grid: &[Vec<Scalar>]) -> Result<f64> {
    let wa = word.to_approx();
    let ta = to_approx_value(target);
    let mut sup: f64 = 0.0;
    for z in grid {
        let a = wa.eval(z)?;
        let b = ta.eval(z)?;
        let norm2: f64 = a.iter().zip(&b).map(|(x, y)| x.sub(y).norm().powi(2)).sum();
        sup = sup.max(norm2.sqrt());
    }
    Ok(sup)
}

pub fn to_approx_value(v: &AutValue) -> AutValue {
    if v.backend() == Backend::Approx {
        return v.clone();
    }
    let mut out = AutValue::identity(v.n(), Backend::Approx);
    for atom in v.atoms() {
        out.push(match atom {
            crate::aut::Atom::Word(w) => crate::aut::Atom::Word(w.to_approx()),
            crate::aut::Atom::Map(m) => crate::aut::Atom::Map(m.to_approx()),
            crate::aut::Atom::ScaledWord { word, t } => crate::aut::Atom::ScaledWord {
                word: word.to_approx(),
                t: t.to_approx(),
            },
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Convergence study.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub sup_error: f64,
    pub truncation_residual: f64,
    pub seconds: f64,
}

/// Runs the pipeline for each step count and reports the observed errors.
/// Monotonicity is not asserted; ratios are left to the caller.
pub fn convergence_study(
    target: &AutValue,
    tag: FieldTag,
    step_counts: &[usize],
    order: i64,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows = Vec::with_capacity(step_counts.len());
    for &s in step_counts {
        let cfg = PipelineConfig::new(s, order, target.n())?;
        let start = Instant::now();
        let (_, report) = approximate(target, tag, &cfg)?;
        rows.push(ConvergenceRow {
            steps: s,
            sup_error: report.sup_error,
            truncation_residual: report
                .step_truncation_residuals
                .iter()
                .cloned()
                .fold(0.0, f64::max),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Parameterized words.
// ---------------------------------------------------------------------------

/// A shear generator whose time is a polynomial in the curve parameter.
#[derive(Debug, Clone)]
pub struct ParamShear {
    /// Generator shape; its stored time is ignored.
    pub base: ShearGen,
    /// Flow time as a univariate polynomial in the parameter.
    pub time: Poly,
}

#[derive(Debug, Clone)]
pub enum ParamGen {
    Shear(ParamShear),
    /// Affine factor with entries polynomial in the parameter.
    Affine {
        matrix: Vec<Vec<Poly>>,
        translation: Vec<Poly>,
    },
}

/// A word of parameter-dependent factors, stored in application order.
#[derive(Debug, Clone)]
pub struct ParamWord {
    pub n: usize,
    pub backend: Backend,
    pub tag: GroupTag,
    pub gens: Vec<ParamGen>,
}

impl ParamWord {
    pub fn eval_at(&self, x: &Scalar) -> Result<ShearWord> {
        let mut w = ShearWord::empty(self.n, self.backend, self.tag)?;
        for g in &self.gens {
            match g {
                ParamGen::Shear(ps) => {
                    let t = ps.time.eval(std::slice::from_ref(x))?;
                    w.push(with_time(&ps.base, t)?)?;
                }
                ParamGen::Affine {
                    matrix,
                    translation,
                } => {
                    let rows = matrix
                        .iter()
                        .map(|row| {
                            row.iter()
                                .map(|p| p.eval(std::slice::from_ref(x)))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let b = translation
                        .iter()
                        .map(|p| p.eval(std::slice::from_ref(x)))
                        .collect::<Result<Vec<_>>>()?;
                    w.push(ShearGen::affine(Matrix::from_rows(rows)?, b)?)?;
                }
            }
        }
        Ok(w)
    }

    /// Symbolic composite as a map in (parameter, z), when every factor is
    /// polynomial (no multiplicative shears).
    pub fn to_polymap(&self) -> Result<PolyMap> {
        let mut map = PolyMap::identity_with_params(1, self.n, self.backend);
        for g in &self.gens {
            let factor = match g {
                ParamGen::Shear(ps) => param_shear_map(ps, self.n, self.backend)?,
                ParamGen::Affine {
                    matrix,
                    translation,
                } => {
                    let nv = 1 + self.n;
                    let mut comps = Vec::with_capacity(self.n);
                    for i in 0..self.n {
                        let mut c = translation[i].embed(nv, 0);
                        for (j, mij) in matrix[i].iter().enumerate() {
                            let term = mij.embed(nv, 0).mul(&Poly::var(1 + j, nv, self.backend))?;
                            c = c.add(&term)?;
                        }
                        comps.push(c);
                    }
                    PolyMap::with_params(1, comps)?
                }
            };
            map = map.then(&factor)?;
        }
        Ok(map)
    }

    pub fn to_approx(&self) -> ParamWord {
        ParamWord {
            n: self.n,
            backend: Backend::Approx,
            tag: self.tag,
            gens: self
                .gens
                .iter()
                .map(|g| match g {
                    ParamGen::Shear(ps) => ParamGen::Shear(ParamShear {
                        base: approx_gen(&ps.base),
                        time: ps.time.to_approx(),
                    }),
                    ParamGen::Affine {
                        matrix,
                        translation,
                    } => ParamGen::Affine {
                        matrix: matrix
                            .iter()
                            .map(|r| r.iter().map(|p| p.to_approx()).collect())
                            .collect(),
                        translation: translation.iter().map(|p| p.to_approx()).collect(),
                    },
                })
                .collect(),
        }
    }
}

fn approx_gen(g: &ShearGen) -> ShearGen {
    match g {
        ShearGen::Additive { conj, profile, t } => ShearGen::Additive {
            conj: conj.to_approx(),
            profile: profile.to_approx(),
            t: t.to_approx(),
        },
        ShearGen::Multiplicative { conj, profile, t } => ShearGen::Multiplicative {
            conj: conj.to_approx(),
            profile: profile.to_approx(),
            t: t.to_approx(),
        },
        ShearGen::Affine { a, b } => ShearGen::Affine {
            a: a.to_approx(),
            b: b.iter().map(|c| c.to_approx()).collect(),
        },
    }
}

fn with_time(base: &ShearGen, t: Scalar) -> Result<ShearGen> {
    Ok(match base {
        ShearGen::Additive { conj, profile, .. } => ShearGen::Additive {
            conj: conj.clone(),
            profile: profile.clone(),
            t,
        },
        ShearGen::Multiplicative { conj, profile, .. } => {
            ShearGen::multiplicative(conj.clone(), profile.clone(), t)?
        }
        ShearGen::Affine { .. } => {
            return Err(Error::Invalid("affine factors carry no flow time".into()))
        }
    })
}

/// The additive parameterized shear as a polynomial map in (x, z).
fn param_shear_map(ps: &ParamShear, n: usize, backend: Backend) -> Result<PolyMap> {
    match &ps.base {
        ShearGen::Additive { conj, profile, .. } => {
            let nv = 1 + n;
            let lmap = crate::polymap::linear_map(conj, 1, backend)?;
            let args: Vec<Poly> = lmap.components()[..n - 1].to_vec();
            let f = profile.compose(&args)?;
            let tf = ps.time.embed(nv, 0).mul(&f)?;
            let mut comps = lmap.components().to_vec();
            comps[n - 1] = comps[n - 1].add(&tf)?;
            let sheared = PolyMap::with_params(1, comps)?;
            let linv = crate::polymap::linear_map(&conj.inverse()?, 1, backend)?;
            sheared.then(&linv)
        }
        _ => Err(Error::ExactTranscendental(
            "only additive parameterized factors have a polynomial form".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Approximation with identity interpolation at parameter nodes.
// ---------------------------------------------------------------------------

/// A parameterized target: a polynomial family of automorphisms in one
/// complex parameter, or a parameterized word with polynomial data.
#[derive(Debug, Clone)]
pub enum ParamTarget {
    Map(PolyMap),
    Word(ParamWord),
}

impl ParamTarget {
    pub fn to_polymap(&self) -> Result<PolyMap> {
        match self {
            ParamTarget::Map(m) => {
                if m.params() != 1 {
                    return Err(Error::Invalid(
                        "parameterized targets need exactly one parameter variable".into(),
                    ));
                }
                Ok(m.clone())
            }
            ParamTarget::Word(w) => w.to_polymap(),
        }
    }
}

/// Approximates a parameterized target while matching the identity exactly at
/// the given parameter nodes. The target must equal the identity at every
/// node; the vanishing of the frozen fields' coefficient polynomials at the
/// nodes survives the linear solves, so the output word's flow times vanish
/// there structurally.
pub fn approximate_interpolating(
    target: &ParamTarget,
    nodes: &[Scalar],
    tag: FieldTag,
    cfg: &PipelineConfig,
) -> Result<(ParamWord, ErrorReport)> {
    let start = Instant::now();
    let map = target.to_polymap()?;
    let n = map.n();
    let backend = map.backend();
    for (i, a) in nodes.iter().enumerate() {
        for b in nodes.iter().skip(i + 1) {
            if a == b {
                return Err(Error::RepeatedNode);
            }
        }
        if a.norm() > cfg.param_radius + 1e-12 {
            return Err(Error::Invalid(format!(
                "node {a} lies outside the parameter disc of radius {}",
                cfg.param_radius
            )));
        }
    }
    for x in nodes {
        let at = map.eval_param(x)?;
        let ok = match backend {
            Backend::Exact => at.is_identity(),
            Backend::Approx => at.approx_eq(&PolyMap::identity(n, backend), DEFAULT_TOL),
        };
        if !ok {
            return Err(Error::NodeNotIdentity(format!("at parameter {x}")));
        }
    }

    let (center, linear, hmap) = schwarz_normalize_param(&map)?;
    check_param_tag(&map, tag)?;
    let hjet = Jet::exact(hmap, cfg.order);

    let steps = cfg.steps;
    let step_time_inv = Scalar::from_integer(steps as i64, backend).inv()?;
    let mut gens: Vec<ParamGen> = Vec::new();
    let mut dec_residuals = Vec::with_capacity(steps);
    let mut trunc_residuals = Vec::with_capacity(steps);
    let zgrid = polydisc_grid(&cfg.radii, cfg.angles, &cfg.radial_fractions);
    let xgrid = disc_grid(cfg.param_radius, cfg.angles, &cfg.radial_fractions);
    for j in 0..steps {
        let t = step_scalar(j as i64, steps as i64, backend);
        let w_j = isotopy_field(&hjet, &t, cfg.order)?;
        let w_wide = isotopy_field(&hjet, &t, cfg.order + 2)?;
        trunc_residuals.push(param_field_sup(&w_wide.sub(&w_j)?, &xgrid, &zgrid)?);
        let dec = decompose_field_param(&w_j, tag)?;
        dec_residuals.push(dec.residual.coeff_norm());
        if dec.residual.coeff_norm() > DEFAULT_TOL {
            return Err(Error::RankFailure(format!(
                "decomposition residual {} at step {j}",
                dec.residual.coeff_norm()
            )));
        }
        for ParamSummand { field, coeff } in &dec.summands {
            let base = exact_flow(field, &Scalar::one(backend), conj_flavor_for(tag))?;
            let time = coeff.scale(&step_time_inv)?;
            if time.is_zero() {
                continue;
            }
            gens.push(ParamGen::Shear(ParamShear { base, time }));
        }
    }
    let affine_trivial = linear.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, p)| {
            if i == j {
                p.degree() == 0 && p.constant_term().is_one()
            } else {
                p.is_zero()
            }
        })
    }) && center.iter().all(|p| p.is_zero());
    if !affine_trivial {
        gens.push(ParamGen::Affine {
            matrix: linear,
            translation: center,
        });
    }
    let word = ParamWord {
        n,
        backend,
        tag: group_tag_for(tag),
        gens,
    };

    // Sup error over the parameter-disc grid (nodes included) x polydisc.
    let mut xs = xgrid.clone();
    xs.extend(nodes.iter().map(|x| x.to_approx()));
    let word_a = word.to_approx();
    let map_a = map.to_approx();
    let mut sup: f64 = 0.0;
    for x in &xs {
        let wx = word_a.eval_at(x)?;
        let tx = map_a.eval_param(x)?;
        for z in &zgrid {
            let a = wx.eval(z)?;
            let b = tx.eval(z)?;
            let norm2: f64 = a.iter().zip(&b).map(|(p, q)| p.sub(q).norm().powi(2)).sum();
            sup = sup.max(norm2.sqrt());
        }
    }
    let report = ErrorReport {
        sup_error: sup,
        step_truncation_residuals: trunc_residuals,
        decomposition_residuals: dec_residuals,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((word, report))
}

/// Schwarz normalization of a parameterized polynomial family: center and
/// linear part become polynomials in the parameter, and the tail stays
/// polynomial because the family's linear part has constant determinant.
fn schwarz_normalize_param(map: &PolyMap) -> Result<(Vec<Poly>, Vec<Vec<Poly>>, PolyMap)> {
    let n = map.n();
    let backend = map.backend();
    let nv = 1 + n;
    let mut center = Vec::with_capacity(n);
    let mut linear: Vec<Vec<Poly>> = vec![vec![Poly::zero(1, backend); n]; n];
    for (i, c) in map.components().iter().enumerate() {
        let mut a_i = Poly::zero(1, backend);
        for (e, coeff) in c.terms() {
            match e.total_from(1) {
                0 => {
                    a_i = a_i.add(&Poly::monomial(&[e.0[0]], coeff.clone(), 1))?;
                }
                1 => {
                    let j = (1..nv).find(|&j| e.0[j] == 1).unwrap() - 1;
                    linear[i][j] =
                        linear[i][j].add(&Poly::monomial(&[e.0[0]], coeff.clone(), 1))?;
                }
                _ => {}
            }
        }
        center.push(a_i);
    }
    // det A(x) must be a nonzero constant for A(x)^{-1} to stay polynomial;
    // a nonvanishing polynomial determinant is necessarily constant.
    let det = poly_matrix_det(&linear)?;
    if det.degree() > 0 || det.is_zero() {
        return Err(Error::NonConstantJacobian(format!(
            "linear part determinant {det} is not a nonzero constant in the parameter"
        )));
    }
    let det_inv = det.constant_term().inv()?;
    let adj = poly_matrix_adjugate(&linear)?;
    let mut centered = Vec::with_capacity(n);
    for (i, c) in map.components().iter().enumerate() {
        centered.push(c.sub(&center[i].embed(nv, 0))?);
    }
    let mut hcomps = vec![Poly::zero(nv, backend); n];
    for i in 0..n {
        for j in 0..n {
            if adj[i][j].is_zero() {
                continue;
            }
            let term = adj[i][j].embed(nv, 0).mul(&centered[j])?;
            hcomps[i] = hcomps[i].add(&term)?;
        }
        hcomps[i] = hcomps[i].scale(&det_inv)?;
    }
    let h = PolyMap::with_params(1, hcomps)?;
    Ok((center, linear, h))
}

fn poly_matrix_det(m: &[Vec<Poly>]) -> Result<Poly> {
    let n = m.len();
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    let backend = m[0][0].backend();
    let nvars = m[0][0].nvars();
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
        let sub = poly_matrix_det(&minor)?;
        let term = m[0][j].mul(&sub)?;
        if j % 2 == 0 {
            acc = acc.add(&term)?;
        } else {
            acc = acc.sub(&term)?;
        }
    }
    Ok(acc)
}

fn poly_matrix_adjugate(m: &[Vec<Poly>]) -> Result<Vec<Vec<Poly>>> {
    let n = m.len();
    let backend = m[0][0].backend();
    let nvars = m[0][0].nvars();
    let mut adj = vec![vec![Poly::zero(nvars, backend); n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<Poly>> = (0..n)
                .filter(|&r| r != j)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != i)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let d = if minor.is_empty() {
                Poly::one(nvars, backend)
            } else {
                poly_matrix_det(&minor)?
            };
            adj[i][j] = if (i + j) % 2 == 0 { d } else { d.neg() };
        }
    }
    Ok(adj)
}

fn check_param_tag(map: &PolyMap, tag: FieldTag) -> Result<()> {
    match tag {
        FieldTag::General => Ok(()),
        FieldTag::Volume => {
            let jd = jacobian_det(map)?;
            let want = Poly::one(jd.nvars(), jd.backend());
            let ok = match map.backend() {
                Backend::Exact => jd == want,
                Backend::Approx => jd.approx_eq(&want, DEFAULT_TOL),
            };
            if ok {
                Ok(())
            } else {
                Err(Error::TagViolation(format!(
                    "target Jacobian is {jd}, expected 1"
                )))
            }
        }
        FieldTag::Symplectic => check_symplectic_map(map, DEFAULT_TOL),
    }
}

fn param_field_sup(w: &VectorField, xs: &[Scalar], zs: &[Vec<Scalar>]) -> Result<f64> {
    let wa = w.to_approx();
    let mut sup: f64 = 0.0;
    for x in xs {
        for z in zs {
            let mut point = Vec::with_capacity(1 + z.len());
            point.push(x.to_approx());
            point.extend(z.iter().cloned());
            let v = wa.eval(&point)?;
            let norm2: f64 = v.iter().map(|c| c.norm().powi(2)).sum();
            sup = sup.max(norm2.sqrt());
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aut::AutValue;

    fn z(i: usize) -> Poly {
        Poly::var(i, 2, Backend::Exact)
    }

    fn shear1() -> PolyMap {
        // (z1 + z2^2, z2)
        PolyMap::new(vec![z(0).add(&z(1).pow(2).unwrap()).unwrap(), z(1)]).unwrap()
    }

    fn shear2() -> PolyMap {
        // (z1, z2 + z1^2)
        PolyMap::new(vec![z(0), z(1).add(&z(0).pow(2).unwrap()).unwrap()]).unwrap()
    }

    #[test]
    fn isotopy_field_of_single_shear_is_constant() {
        // H = (z1 + z2^2, z2): V(t, w) = (w2^2, 0) for every t.
        let jet = Jet::exact(shear1(), 4);
        for t in [
            Scalar::zero(Backend::Exact),
            Scalar::from_ratio(1, 3, Backend::Exact),
            Scalar::one(Backend::Exact),
        ] {
            let v = isotopy_field(&jet, &t, 4).unwrap();
            assert_eq!(v.coeff(0), &z(1).pow(2).unwrap());
            assert!(v.coeff(1).is_zero());
        }
    }

    #[test]
    fn isotopy_field_of_identity_is_zero() {
        let jet = Jet::identity(2, 4, Backend::Exact);
        let v = isotopy_field(&jet, &Scalar::from_ratio(1, 2, Backend::Exact), 4).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn isotopy_field_satisfies_flow_equation() {
        // H = (z1 + z2^2 + z2^3, z2), k = 3: dH_t/dt = V(t, H_t) through deg 3.
        let h = PolyMap::new(vec![
            z(0).add(&z(1).pow(2).unwrap())
                .unwrap()
                .add(&z(1).pow(3).unwrap())
                .unwrap(),
            z(1),
        ])
        .unwrap();
        let jet = Jet::exact(h.clone(), 3);
        for (num, den) in [(0i64, 1i64), (1, 3), (1, 2), (1, 1)] {
            let t = Scalar::from_ratio(num, den, Backend::Exact);
            let v = isotopy_field(&jet, &t, 3).unwrap();
            let mut ht_comps = Vec::new();
            let mut dht_comps = Vec::new();
            for c in h.components() {
                let mut ht = Poly::zero(2, Backend::Exact);
                let mut dht = Poly::zero(2, Backend::Exact);
                for (e, coeff) in c.terms() {
                    let d = e.total();
                    ht = ht
                        .add(&Poly::monomial(&e.0, coeff.mul(&t.powi(d - 1)), 2))
                        .unwrap();
                    if d >= 2 {
                        let f = Scalar::from_integer((d - 1) as i64, Backend::Exact)
                            .mul(&t.powi(d - 2));
                        dht = dht.add(&Poly::monomial(&e.0, coeff.mul(&f), 2)).unwrap();
                    }
                }
                ht_comps.push(ht);
                dht_comps.push(dht);
            }
            let ht = PolyMap::new(ht_comps).unwrap();
            let dht = PolyMap::new(dht_comps).unwrap();
            let vmap = PolyMap::new(v.coeffs().to_vec()).unwrap();
            let rhs = ht.then_truncated(&vmap, 3).unwrap();
            assert_eq!(dht.truncate(3), rhs);
        }
    }

    #[test]
    fn isotopy_rejects_non_schwarz() {
        let bad =
            PolyMap::new(vec![z(0).add(&Poly::one(2, Backend::Exact)).unwrap(), z(1)]).unwrap();
        assert!(matches!(
            isotopy_field(&Jet::exact(bad, 3), &Scalar::one(Backend::Exact), 3),
            Err(Error::NotSchwarz(_))
        ));
    }

    #[test]
    fn isotopy_field_vanishes_to_second_order() {
        let h = shear1().then(&shear2()).unwrap();
        let jet = Jet::exact(h, 6);
        let v = isotopy_field(&jet, &Scalar::from_ratio(2, 5, Backend::Exact), 6).unwrap();
        for c in v.coeffs() {
            for (e, _) in c.terms() {
                assert!(e.total() >= 2, "low-order term {:?}", e);
            }
        }
    }

    #[test]
    fn approximate_identity_gives_empty_word() {
        let target = AutValue::from_map(PolyMap::identity(2, Backend::Exact));
        let cfg = PipelineConfig::new(2, 4, 2).unwrap();
        let (word, report) = approximate(&target, FieldTag::General, &cfg).unwrap();
        assert!(word.is_empty());
        assert_eq!(report.sup_error, 0.0);
    }

    #[test]
    fn approximate_single_shear_is_exact() {
        let target = AutValue::from_map(shear1());
        let cfg = PipelineConfig::new(1, 4, 2).unwrap();
        let (word, report) = approximate(&target, FieldTag::General, &cfg).unwrap();
        assert!(report.sup_error <= 1e-9, "sup error {}", report.sup_error);
        assert!(!word.is_empty());
    }

    #[test]
    fn approximate_certifies_volume_tag() {
        let target = AutValue::from_map(shear1().then(&shear2()).unwrap());
        let cfg = PipelineConfig::new(4, 6, 2).unwrap();
        let (word, _) = approximate(&target, FieldTag::Volume, &cfg).unwrap();
        assert_eq!(word.tag, GroupTag::Aut1);
        word.certify(DEFAULT_TOL).unwrap();
    }

    #[test]
    fn approximate_error_decreases_with_steps() {
        // On a polydisc inside the splitting's stability region the error is
        // cleanly first order in 1/N.
        let target = AutValue::from_map(shear1().then(&shear2()).unwrap());
        let mut rows = Vec::new();
        for n in [4usize, 8] {
            let mut cfg = PipelineConfig::new(n, 8, 2).unwrap();
            cfg.radii = vec![0.2, 0.2];
            let (_, report) = approximate(&target, FieldTag::General, &cfg).unwrap();
            rows.push(report.sup_error);
        }
        assert!(rows[1] < rows[0]);
    }

    #[test]
    fn convergence_study_exact_targets() {
        // A single quadratic shear is recovered exactly at every step count,
        // and the identity gives all-zero rows.
        let target = AutValue::from_map(shear1());
        let rows = convergence_study(&target, FieldTag::General, &[1, 2, 4], 4).unwrap();
        assert!(rows.iter().all(|r| r.sup_error <= 1e-9));
        let id = AutValue::from_map(PolyMap::identity(2, Backend::Exact));
        let rows = convergence_study(&id, FieldTag::General, &[1, 2], 4).unwrap();
        assert!(rows.iter().all(|r| r.sup_error == 0.0));
    }

    #[test]
    fn approximate_symplectic_shear() {
        // (z1, z2 + z1^2) preserves dz1 ^ dz2; its generator is the
        // Hamiltonian shear field of -z1^3/3, so one step recovers it.
        let target = AutValue::from_map(shear2());
        let cfg = PipelineConfig::new(1, 4, 2).unwrap();
        let (word, report) = approximate(&target, FieldTag::Symplectic, &cfg).unwrap();
        assert_eq!(word.tag, GroupTag::AutSp);
        word.certify(DEFAULT_TOL).unwrap();
        assert!(report.sup_error <= 1e-9, "sup {}", report.sup_error);
    }

    #[test]
    fn values_are_send_and_sync() {
        fn check<T: Send + Sync>() {}
        check::<Poly>();
        check::<PolyMap>();
        check::<VectorField>();
        check::<ShearWord>();
        check::<AutValue>();
        check::<ParamWord>();
    }

    #[test]
    fn approximate_rejects_volume_tag_violation() {
        // (2 z1, z2) has Jacobian 2.
        let target = AutValue::from_map(
            PolyMap::new(vec![
                z(0).scale(&Scalar::from_integer(2, Backend::Exact))
                    .unwrap(),
                z(1),
            ])
            .unwrap(),
        );
        let cfg = PipelineConfig::new(1, 4, 2).unwrap();
        assert!(matches!(
            approximate(&target, FieldTag::Volume, &cfg),
            Err(Error::TagViolation(_))
        ));
    }

    #[test]
    fn interpolating_target_vanishes_at_nodes() {
        // target(x, z) = (z1 + x(x-1) z2^2, z2), nodes {0, 1}.
        let backend = Backend::Exact;
        let nv = 3;
        let x = Poly::var(0, nv, backend);
        let z1 = Poly::var(1, nv, backend);
        let z2 = Poly::var(2, nv, backend);
        let cx = x.pow(2).unwrap().sub(&x).unwrap();
        let target = ParamTarget::Map(
            PolyMap::with_params(
                1,
                vec![z1.add(&cx.mul(&z2.pow(2).unwrap()).unwrap()).unwrap(), z2],
            )
            .unwrap(),
        );
        let nodes = vec![Scalar::zero(backend), Scalar::one(backend)];
        let cfg = PipelineConfig::new(2, 4, 2).unwrap();
        let (word, report) =
            approximate_interpolating(&target, &nodes, FieldTag::Volume, &cfg).unwrap();
        for node in &nodes {
            let w = word.eval_at(node).unwrap();
            for g in w.gens() {
                assert!(g.is_identity(), "non-identity factor at node {node}");
            }
        }
        assert!(report.sup_error < 1.0);
    }

    #[test]
    fn interpolating_rejects_non_identity_node() {
        let backend = Backend::Exact;
        let target = ParamTarget::Map(
            PolyMap::with_params(
                1,
                vec![
                    Poly::var(1, 3, backend)
                        .add(&Poly::var(2, 3, backend).pow(2).unwrap())
                        .unwrap(),
                    Poly::var(2, 3, backend),
                ],
            )
            .unwrap(),
        );
        let nodes = vec![Scalar::zero(backend)];
        let cfg = PipelineConfig::new(1, 4, 2).unwrap();
        assert!(matches!(
            approximate_interpolating(&target, &nodes, FieldTag::General, &cfg),
            Err(Error::NodeNotIdentity(_))
        ));
    }

    #[test]
    fn interpolating_no_nodes_reduces_to_plain() {
        let backend = Backend::Exact;
        let nv = 3;
        let x = Poly::var(0, nv, backend);
        let z1 = Poly::var(1, nv, backend);
        let z2 = Poly::var(2, nv, backend);
        let target = ParamTarget::Map(
            PolyMap::with_params(
                1,
                vec![z1.add(&x.mul(&z2.pow(2).unwrap()).unwrap()).unwrap(), z2],
            )
            .unwrap(),
        );
        let cfg = PipelineConfig::new(1, 4, 2).unwrap();
        let (word, report) =
            approximate_interpolating(&target, &[], FieldTag::Volume, &cfg).unwrap();
        assert!(!word.gens.is_empty());
        assert!(report.sup_error <= 1e-9);
    }
}
