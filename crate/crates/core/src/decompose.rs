//! Decomposition of polynomial vector fields into finitely many complete
//! shear fields, with divergence-free, divergence-balancing, and Hamiltonian
//! routes, plus the closed-form flows of the summands.
//!
//! Candidate shear fields are powers of covectors from a fixed integer grid,
//! enumerated deterministically; which candidates enter the spanning subset is
//! decided in exact rational arithmetic on both backends, so identical inputs
//! always yield identical summand lists. The linear solves keep the right-hand
//! side generic: plain scalars for concrete fields, univariate polynomials in
//! the parameter for fields depending on a curve parameter.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{symplectic_completion, ExactEchelon, Matrix};
use crate::poly::{MultiIndex, Poly};
use crate::scalar::{Backend, Scalar};
use crate::shear::ShearGen;
use crate::vectorfield::{divergence, VectorField};

/// How far past the spec grid (entries up to the degree) the enumeration may
/// extend if the induced system has not reached full rank yet.
const GRID_EXTRA_LEVELS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldTag {
    General,
    Volume,
    Symplectic,
}

impl FieldTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            FieldTag::General => "general",
            FieldTag::Volume => "volume",
            FieldTag::Symplectic => "symplectic",
        }
    }

    pub fn parse(s: &str) -> Result<FieldTag> {
        Ok(match s {
            "general" => FieldTag::General,
            "volume" => FieldTag::Volume,
            "symplectic" => FieldTag::Symplectic,
            _ => return Err(Error::Invalid(format!("unknown field tag {s:?}"))),
        })
    }
}

/// A complete shear vector field with a closed-form flow.
#[derive(Debug, Clone, PartialEq)]
pub enum ShearField {
    /// g(lambda . z) b with lambda(b) = 0; divergence-free.
    Additive {
        lambda: Vec<Scalar>,
        b: Vec<Scalar>,
        profile: Poly,
    },
    /// c (lambda . z)^d (mu . z) v with lambda(v) = 0, mu(v) = 1;
    /// divergence c (lambda . z)^d.
    MultiplicativeType {
        lambda: Vec<Scalar>,
        mu: Vec<Scalar>,
        v: Vec<Scalar>,
        d: u32,
        c: Scalar,
    },
}

impl ShearField {
    pub fn n(&self) -> usize {
        match self {
            ShearField::Additive { b, .. } => b.len(),
            ShearField::MultiplicativeType { v, .. } => v.len(),
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            ShearField::Additive { profile, .. } => profile.backend(),
            ShearField::MultiplicativeType { c, .. } => c.backend(),
        }
    }

    /// Scales the field by a constant.
    pub fn scaled(&self, k: &Scalar) -> Result<ShearField> {
        Ok(match self {
            ShearField::Additive { lambda, b, profile } => ShearField::Additive {
                lambda: lambda.clone(),
                b: b.clone(),
                profile: profile.scale(k)?,
            },
            ShearField::MultiplicativeType {
                lambda,
                mu,
                v,
                d,
                c,
            } => ShearField::MultiplicativeType {
                lambda: lambda.clone(),
                mu: mu.clone(),
                v: v.clone(),
                d: *d,
                c: c.mul(k),
            },
        })
    }

    /// Materializes the field as a plain vector field (no parameters).
    pub fn field(&self) -> Result<VectorField> {
        let n = self.n();
        match self {
            ShearField::Additive { lambda, b, profile } => {
                let arg = covector_poly(lambda, n, 0)?;
                let g = profile.compose(&[arg])?;
                let coeffs = b.iter().map(|bi| g.scale(bi)).collect::<Result<Vec<_>>>()?;
                VectorField::new(coeffs)
            }
            ShearField::MultiplicativeType {
                lambda,
                mu,
                v,
                d,
                c,
            } => {
                let lam = covector_poly(lambda, n, 0)?;
                let mu_p = covector_poly(mu, n, 0)?;
                let base = lam.pow(*d)?.mul(&mu_p)?.scale(c)?;
                let coeffs = v
                    .iter()
                    .map(|vi| base.scale(vi))
                    .collect::<Result<Vec<_>>>()?;
                VectorField::new(coeffs)
            }
        }
    }

    /// The symbolic divergence of the materialized field.
    pub fn divergence(&self) -> Result<Poly> {
        Ok(divergence(&self.field()?))
    }
}

fn covector_poly(lambda: &[Scalar], nvars: usize, offset: usize) -> Result<Poly> {
    let backend = lambda[0].backend();
    let mut acc = Poly::zero(nvars, backend);
    for (i, li) in lambda.iter().enumerate() {
        acc = acc.add(&Poly::var(offset + i, nvars, backend).scale(li)?)?;
    }
    Ok(acc)
}

/// A decomposition of a vector field into shear summands. The residual is
/// zero exactly on the exact backend and within tolerance otherwise.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub summands: Vec<ShearField>,
    pub residual: VectorField,
}

impl Decomposition {
    pub fn recompose(&self) -> Result<VectorField> {
        let mut acc = VectorField::zero(self.residual.n(), self.residual.backend());
        for s in &self.summands {
            acc = acc.add(&s.field()?)?;
        }
        acc.add(&self.residual)
    }
}

/// A summand whose coefficient is a polynomial in the curve parameter.
#[derive(Debug, Clone)]
pub struct ParamSummand {
    /// The x-independent shear field shape (unit coefficient).
    pub field: ShearField,
    /// Coefficient polynomial in the parameter.
    pub coeff: Poly,
}

#[derive(Debug, Clone)]
pub struct ParamDecomposition {
    pub summands: Vec<ParamSummand>,
    /// Residual as a field with one parameter variable.
    pub residual: VectorField,
}

// ---------------------------------------------------------------------------
// Right-hand sides for the exact-structure linear solves.
// ---------------------------------------------------------------------------

pub(crate) trait SolveRhs: Clone {
    fn zero_like(&self) -> Self;
    fn sub_scaled(&self, other: &Self, f: &Scalar) -> Self;
    fn div_by(&self, f: &Scalar) -> Self;
    fn is_exactly_zero(&self) -> bool;
    fn norm(&self) -> f64;
}

impl SolveRhs for Scalar {
    fn zero_like(&self) -> Self {
        Scalar::zero(self.backend())
    }

    fn sub_scaled(&self, other: &Self, f: &Scalar) -> Self {
        self.sub(&f.mul(other))
    }

    fn div_by(&self, f: &Scalar) -> Self {
        self.div(f).expect("pivot is nonzero")
    }

    fn is_exactly_zero(&self) -> bool {
        self.is_zero()
    }

    fn norm(&self) -> f64 {
        Scalar::norm(self)
    }
}

impl SolveRhs for Poly {
    fn zero_like(&self) -> Self {
        Poly::zero(self.nvars(), self.backend())
    }

    fn sub_scaled(&self, other: &Self, f: &Scalar) -> Self {
        self.sub(&other.scale(f).expect("same backend"))
            .expect("same ring")
    }

    fn div_by(&self, f: &Scalar) -> Self {
        self.scale(&f.inv().expect("pivot is nonzero"))
            .expect("same backend")
    }

    fn is_exactly_zero(&self) -> bool {
        self.is_zero()
    }

    fn norm(&self) -> f64 {
        self.coeff_norm()
    }
}

// ---------------------------------------------------------------------------
// Covector grid and exact candidate columns.
// ---------------------------------------------------------------------------

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Integer covectors with entries in {0..=level}, gcd 1, in lexicographic
/// order; with `new_only`, keeps those whose max entry is exactly `level`
/// (the ones not already listed at lower levels).
fn lambda_level(n: usize, level: u32, new_only: bool) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    loop {
        let g = cur.iter().copied().fold(0, gcd);
        let maxed = cur.iter().copied().max().unwrap_or(0);
        if g == 1 && (!new_only || maxed == level) {
            out.push(cur.clone());
        }
        // Lex-order counter: index 0 is the most significant digit.
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < level {
                cur[i] += 1;
                for j in i + 1..n {
                    cur[j] = 0;
                }
                break;
            }
        }
    }
}

fn multinomial(d: u32, alpha: &[u32]) -> BigInt {
    let mut num = BigInt::one();
    for k in 2..=d {
        num *= BigInt::from(k);
    }
    let mut den = BigInt::one();
    for &a in alpha {
        for k in 2..=a {
            den *= BigInt::from(k);
        }
    }
    num / den
}

/// Monomials of total degree d in n variables, lex order.
fn monomials_of_degree(n: usize, d: u32) -> Vec<MultiIndex> {
    fn rec(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, left: u32) {
        if pos + 1 == cur.len() {
            cur[pos] = left;
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(out, cur, pos + 1, left - v);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    rec(&mut out, &mut cur, 0, d);
    out.sort();
    out
}

type ExactVec = Vec<(BigRational, BigRational)>;

/// Coefficient vector of (lambda . z)^d over the monomial slots, exactly.
fn power_column(lambda: &[u32], d: u32, slots: &[MultiIndex]) -> ExactVec {
    slots
        .iter()
        .map(|alpha| {
            let mut v = multinomial(d, &alpha.0);
            for (l, a) in lambda.iter().zip(&alpha.0) {
                v *= BigInt::from(*l).pow(*a);
            }
            (BigRational::from_integer(v), BigRational::zero())
        })
        .collect()
}

fn exact_to_scalar(x: &(BigRational, BigRational), backend: Backend) -> Scalar {
    match backend {
        Backend::Exact => Scalar::from_rationals(x.0.clone(), x.1.clone()),
        Backend::Approx => Scalar::from_f64(
            x.0.to_f64().unwrap_or(f64::NAN),
            x.1.to_f64().unwrap_or(f64::NAN),
        ),
    }
}

/// Solves `sum_j c_j col_j = rhs` where the columns are exact (and linearly
/// independent) and the RHS is generic. Fails when the residual is nonzero
/// (exact backend) or exceeds `tol`.
fn solve_in_span<C: SolveRhs>(
    columns: &[ExactVec],
    rhs: &[C],
    backend: Backend,
    tol: f64,
    context: &str,
) -> Result<Vec<C>> {
    let k = columns.len();
    let s = rhs.len();
    let mut m: Vec<ExactVec> = (0..s)
        .map(|r| (0..k).map(|j| columns[j][r].clone()).collect())
        .collect();
    let mut b: Vec<C> = rhs.to_vec();
    let mut row_of_col: Vec<usize> = Vec::with_capacity(k);
    let mut next_row = 0usize;
    for j in 0..k {
        let pivot = (next_row..s).find(|&r| !m[r][j].0.is_zero() || !m[r][j].1.is_zero());
        let Some(p) = pivot else {
            return Err(Error::RankFailure(format!(
                "{context}: dependent candidate column"
            )));
        };
        m.swap(next_row, p);
        b.swap(next_row, p);
        let piv = m[next_row][j].clone();
        for r in next_row + 1..s {
            let e = m[r][j].clone();
            if e.0.is_zero() && e.1.is_zero() {
                continue;
            }
            let f = complex_div(&e, &piv);
            for col in j..k {
                let prod = complex_mul(&f, &m[next_row][col]);
                m[r][col].0 = &m[r][col].0 - prod.0;
                m[r][col].1 = &m[r][col].1 - prod.1;
            }
            let fs = exact_to_scalar(&f, backend);
            b[r] = b[r].sub_scaled(&b[next_row], &fs);
        }
        row_of_col.push(next_row);
        next_row += 1;
    }
    for r in next_row..s {
        let ok = match backend {
            Backend::Exact => b[r].is_exactly_zero(),
            Backend::Approx => b[r].norm() <= tol,
        };
        if !ok {
            return Err(Error::RankFailure(format!(
                "{context}: inconsistent system, residual norm {}",
                b[r].norm()
            )));
        }
    }
    let mut coeffs: Vec<C> = vec![rhs[0].zero_like(); k];
    for j in (0..k).rev() {
        let r = row_of_col[j];
        let mut acc = b[r].clone();
        for l in j + 1..k {
            let f = exact_to_scalar(&m[r][l], backend);
            if !f.is_zero() {
                acc = acc.sub_scaled(&coeffs[l], &f);
            }
        }
        let piv = exact_to_scalar(&m[r][j], backend);
        coeffs[j] = acc.div_by(&piv);
    }
    Ok(coeffs)
}

fn complex_mul(
    a: &(BigRational, BigRational),
    b: &(BigRational, BigRational),
) -> (BigRational, BigRational) {
    (&a.0 * &b.0 - &a.1 * &b.1, &a.0 * &b.1 + &a.1 * &b.0)
}

fn complex_div(
    a: &(BigRational, BigRational),
    b: &(BigRational, BigRational),
) -> (BigRational, BigRational) {
    let n = &b.0 * &b.0 + &b.1 * &b.1;
    let conj = (&b.0 / &n, -(&b.1) / &n);
    complex_mul(a, &conj)
}

// ---------------------------------------------------------------------------
// Waring decomposition of homogeneous polynomials.
// ---------------------------------------------------------------------------

/// Generic Waring core: expresses slot coefficients as a combination of d-th
/// powers of grid covectors. Zero coefficients are dropped.
fn waring_core<C: SolveRhs>(
    n: usize,
    d: u32,
    slot_coeffs: &BTreeMap<MultiIndex, C>,
    zero: &C,
    backend: Backend,
    tol: f64,
) -> Result<Vec<(C, Vec<u32>)>> {
    if slot_coeffs.values().all(|c| c.is_exactly_zero()) {
        return Ok(Vec::new());
    }
    if d == 0 {
        // Constants: 1 * (any lambda)^0; the zero covector is the canonical pick.
        let c = slot_coeffs
            .get(&MultiIndex::zero(n))
            .cloned()
            .unwrap_or_else(|| zero.zero_like());
        return Ok(vec![(c, vec![0; n])]);
    }
    let slots = monomials_of_degree(n, d);
    let dim = slots.len();
    let mut echelon = ExactEchelon::new(dim);
    let mut accepted: Vec<(Vec<u32>, ExactVec)> = Vec::new();
    'levels: for level in 1..=(d + GRID_EXTRA_LEVELS) {
        let lams = if level == 1 {
            lambda_level(n, 1, false)
        } else {
            lambda_level(n, level, true)
        };
        for lam in lams {
            let col = power_column(&lam, d, &slots);
            if echelon.insert(col.clone()) {
                accepted.push((lam, col));
            }
            if echelon.rank() == dim {
                break 'levels;
            }
        }
    }
    if echelon.rank() < dim {
        return Err(Error::RankFailure(format!(
            "power grid for degree {d} in {n} variables stalled at rank {} of {dim}",
            echelon.rank()
        )));
    }
    let rhs: Vec<C> = slots
        .iter()
        .map(|s| {
            slot_coeffs
                .get(s)
                .cloned()
                .unwrap_or_else(|| zero.zero_like())
        })
        .collect();
    let columns: Vec<ExactVec> = accepted.iter().map(|(_, c)| c.clone()).collect();
    let coeffs = solve_in_span(&columns, &rhs, backend, tol, "waring")?;
    Ok(accepted
        .into_iter()
        .zip(coeffs)
        .filter(|(_, c)| !c.is_exactly_zero())
        .map(|((lam, _), c)| (c, lam))
        .collect())
}

/// Writes a homogeneous polynomial of degree d as an exact combination of
/// d-th powers of linear forms from the deterministic integer grid.
pub fn waring(p: &Poly, d: u32) -> Result<Vec<(Scalar, Vec<Scalar>)>> {
    if !p.is_homogeneous(d) {
        return Err(Error::Invalid(format!(
            "polynomial is not homogeneous of degree {d}"
        )));
    }
    let n = p.nvars();
    if n < 2 {
        return Err(Error::Invalid("waring needs at least two variables".into()));
    }
    let backend = p.backend();
    let mut slot_coeffs = BTreeMap::new();
    for (e, c) in p.terms() {
        slot_coeffs.insert(e.clone(), c.clone());
    }
    let zero = Scalar::zero(backend);
    let out = waring_core(
        n,
        d,
        &slot_coeffs,
        &zero,
        backend,
        crate::scalar::DEFAULT_TOL,
    )?;
    Ok(out
        .into_iter()
        .map(|(c, lam)| {
            (
                c,
                lam.iter()
                    .map(|&l| Scalar::from_integer(l as i64, backend))
                    .collect(),
            )
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Kernel vectors and duals.
// ---------------------------------------------------------------------------

/// Deterministic basis of ker(lambda) for an integer covector: if lambda = 0,
/// the standard basis; otherwise, with j0 the first nonzero entry,
/// v_i = lambda_{j0} e_i - lambda_i e_{j0} for i != j0.
fn kernel_basis(lambda: &[u32]) -> Vec<Vec<i64>> {
    let n = lambda.len();
    match lambda.iter().position(|&l| l != 0) {
        None => (0..n)
            .map(|i| {
                let mut v = vec![0i64; n];
                v[i] = 1;
                v
            })
            .collect(),
        Some(j0) => (0..n)
            .filter(|&i| i != j0)
            .map(|i| {
                let mut v = vec![0i64; n];
                v[i] = lambda[j0] as i64;
                v[j0] = -(lambda[i] as i64);
                v
            })
            .collect(),
    }
}

/// First standard basis vector annihilated by lambda, if any; otherwise the
/// first deterministic kernel vector scaled so its first nonzero entry is 1.
/// Returns the vector together with the index carrying 1 (whose coordinate
/// covector serves as mu).
fn mult_type_kernel_vector(lambda: &[u32], backend: Backend) -> (Vec<Scalar>, usize) {
    let n = lambda.len();
    if let Some(i) = lambda.iter().position(|&l| l == 0) {
        let mut v = vec![Scalar::zero(backend); n];
        v[i] = Scalar::one(backend);
        return (v, i);
    }
    let kb = kernel_basis(lambda);
    let raw = &kb[0];
    let j0 = raw
        .iter()
        .position(|&x| x != 0)
        .expect("kernel vector is nonzero");
    let scale = Scalar::from_integer(raw[j0], backend)
        .inv()
        .expect("nonzero");
    let v = raw
        .iter()
        .map(|&x| Scalar::from_integer(x, backend).mul(&scale))
        .collect();
    (v, j0)
}

/// The omega-dual vector of a covector: iota_v omega = lambda for the
/// standard form with pairs (2j, 2j+1).
fn omega_dual(lambda: &[Scalar]) -> Vec<Scalar> {
    let n = lambda.len();
    let mut v = vec![Scalar::zero(lambda[0].backend()); n];
    for j in 0..n / 2 {
        v[2 * j] = lambda[2 * j + 1].clone();
        v[2 * j + 1] = lambda[2 * j].neg();
    }
    v
}

// ---------------------------------------------------------------------------
// Field slots (plain scalars or parameter polynomials).
// ---------------------------------------------------------------------------

fn scalar_slots(w: &VectorField, d: u32) -> BTreeMap<(usize, MultiIndex), Scalar> {
    let mut out = BTreeMap::new();
    for (i, c) in w.coeffs().iter().enumerate() {
        for (e, coeff) in c.terms() {
            if e.total() == d {
                out.insert((i, e.clone()), coeff.clone());
            }
        }
    }
    out
}

/// Same, with one leading parameter variable: coefficients become univariate
/// polynomials in the parameter.
fn param_slots(w: &VectorField, d: u32) -> BTreeMap<(usize, MultiIndex), Poly> {
    let mut out: BTreeMap<(usize, MultiIndex), Poly> = BTreeMap::new();
    let backend = w.backend();
    for (i, c) in w.coeffs().iter().enumerate() {
        for (e, coeff) in c.terms() {
            if e.total_from(1) != d {
                continue;
            }
            let zpart = MultiIndex(e.0[1..].to_vec());
            let entry = out
                .entry((i, zpart))
                .or_insert_with(|| Poly::zero(1, backend));
            *entry = entry
                .add(&Poly::monomial(&[e.0[0]], coeff.clone(), 1))
                .expect("same ring");
        }
    }
    out
}

/// Degree-d z-part of a parameterized polynomial, slotted by z-monomial with
/// univariate coefficients.
fn param_poly_slots(p: &Poly, d: u32) -> BTreeMap<MultiIndex, Poly> {
    let mut out: BTreeMap<MultiIndex, Poly> = BTreeMap::new();
    let backend = p.backend();
    for (e, c) in p.terms() {
        if e.total_from(1) != d {
            continue;
        }
        let zpart = MultiIndex(e.0[1..].to_vec());
        let entry = out.entry(zpart).or_insert_with(|| Poly::zero(1, backend));
        *entry = entry
            .add(&Poly::monomial(&[e.0[0]], c.clone(), 1))
            .expect("same ring");
    }
    out
}

// ---------------------------------------------------------------------------
// Divergence-free decomposition.
// ---------------------------------------------------------------------------

/// Per-degree solve: candidates (lambda . z)^d b over the grid with b running
/// through the kernel basis of lambda.
fn divfree_degree_core<C: SolveRhs>(
    n: usize,
    d: u32,
    slot_coeffs: &BTreeMap<(usize, MultiIndex), C>,
    zero: &C,
    backend: Backend,
    tol: f64,
) -> Result<Vec<(C, Vec<u32>, Vec<i64>)>> {
    if slot_coeffs.values().all(|c| c.is_exactly_zero()) {
        return Ok(Vec::new());
    }
    let monos = monomials_of_degree(n, d);
    let width = n * monos.len();
    let h = |k: i64| -> usize {
        if k < 0 {
            0
        } else {
            monomials_of_degree(n, k as u32).len()
        }
    };
    // Dimension of the divergence-free subspace in homogeneous degree d.
    let target_rank = n * h(d as i64) - h(d as i64 - 1);
    let mut echelon = ExactEchelon::new(width);
    let mut accepted: Vec<(Vec<u32>, Vec<i64>, ExactVec)> = Vec::new();
    let max_level = d.max(0) + GRID_EXTRA_LEVELS;
    'levels: for level in 0..=max_level {
        let lams: Vec<Vec<u32>> = if d == 0 {
            if level == 0 {
                vec![vec![0; n]]
            } else {
                break 'levels;
            }
        } else if level == 0 {
            Vec::new()
        } else if level == 1 {
            lambda_level(n, 1, false)
        } else {
            lambda_level(n, level, true)
        };
        for lam in lams {
            let pow_col = power_column(&lam, d, &monos);
            for bvec in kernel_basis(&lam) {
                let mut col: ExactVec = vec![(BigRational::zero(), BigRational::zero()); width];
                for (mi, pc) in pow_col.iter().enumerate() {
                    for (i, &bi) in bvec.iter().enumerate() {
                        if bi != 0 {
                            col[i * monos.len() + mi].0 =
                                &pc.0 * BigRational::from_integer(BigInt::from(bi));
                        }
                    }
                }
                if echelon.insert(col.clone()) {
                    accepted.push((lam.clone(), bvec, col));
                }
                if echelon.rank() == target_rank {
                    break 'levels;
                }
            }
        }
    }
    let rhs: Vec<C> = (0..n)
        .flat_map(|i| monos.iter().map(move |m| (i, m.clone())))
        .map(|key| {
            slot_coeffs
                .get(&key)
                .cloned()
                .unwrap_or_else(|| zero.zero_like())
        })
        .collect();
    let columns: Vec<ExactVec> = accepted.iter().map(|(_, _, c)| c.clone()).collect();
    let coeffs = solve_in_span(&columns, &rhs, backend, tol, "shear span")?;
    Ok(accepted
        .into_iter()
        .zip(coeffs)
        .filter(|(_, c)| !c.is_exactly_zero())
        .map(|((lam, b, _), c)| (c, lam, b))
        .collect())
}

fn additive_summand(lam: &[u32], bvec: &[i64], d: u32, backend: Backend) -> ShearField {
    ShearField::Additive {
        lambda: lam
            .iter()
            .map(|&l| Scalar::from_integer(l as i64, backend))
            .collect(),
        b: bvec
            .iter()
            .map(|&x| Scalar::from_integer(x, backend))
            .collect(),
        profile: Poly::monomial(&[d], Scalar::one(backend), 1),
    }
}

/// Decomposes a divergence-free field into additive shear fields, exactly.
pub fn decompose_divfree(w: &VectorField) -> Result<Decomposition> {
    let tol = crate::scalar::DEFAULT_TOL;
    let div = divergence(w);
    let div_ok = match w.backend() {
        Backend::Exact => div.is_zero(),
        Backend::Approx => div.coeff_norm() <= tol,
    };
    if !div_ok {
        return Err(Error::NonzeroDivergence(div.to_string()));
    }
    let mut summands = Vec::new();
    let deg = w.degree();
    for d in 0..=deg.max(0) as u32 {
        let slots = scalar_slots(w, d);
        let zero = Scalar::zero(w.backend());
        for (c, lam, b) in divfree_degree_core(w.n(), d, &slots, &zero, w.backend(), tol)? {
            let base = additive_summand(&lam, &b, d, w.backend());
            summands.push(base.scaled(&c)?);
        }
    }
    finish_decomposition(w, summands)
}

fn finish_decomposition(w: &VectorField, summands: Vec<ShearField>) -> Result<Decomposition> {
    let mut acc = VectorField::zero(w.n(), w.backend());
    for s in &summands {
        acc = acc.add(&s.field()?)?;
    }
    let residual = w.sub(&acc)?;
    Ok(Decomposition { summands, residual })
}

// ---------------------------------------------------------------------------
// Divergence balancing.
// ---------------------------------------------------------------------------

/// Multiplicative-type fields matching the divergence of `w`, and the
/// divergence-free remainder.
pub fn balance_divergence(w: &VectorField) -> Result<(Vec<ShearField>, VectorField)> {
    if w.n() < 2 {
        return Err(Error::Invalid(
            "balance needs at least two variables".into(),
        ));
    }
    let backend = w.backend();
    let tol = crate::scalar::DEFAULT_TOL;
    let div = divergence(w);
    let mut fields = Vec::new();
    let max_d = div.degree();
    for d in 0..=max_d.max(0) as u32 {
        if max_d < 0 {
            break;
        }
        let part = div.homogeneous_part(d);
        if part.is_zero() {
            continue;
        }
        let mut slot_coeffs = BTreeMap::new();
        for (e, c) in part.terms() {
            slot_coeffs.insert(e.clone(), c.clone());
        }
        let zero = Scalar::zero(backend);
        for (c, lam) in waring_core(w.n(), d, &slot_coeffs, &zero, backend, tol)? {
            let (v, j0) = mult_type_kernel_vector(&lam, backend);
            let mut mu = vec![Scalar::zero(backend); w.n()];
            mu[j0] = Scalar::one(backend);
            fields.push(ShearField::MultiplicativeType {
                lambda: lam
                    .iter()
                    .map(|&l| Scalar::from_integer(l as i64, backend))
                    .collect(),
                mu,
                v,
                d,
                c,
            });
        }
    }
    let mut acc = VectorField::zero(w.n(), backend);
    for f in &fields {
        acc = acc.add(&f.field()?)?;
    }
    let w0 = w.sub(&acc)?;
    Ok((fields, w0))
}

// ---------------------------------------------------------------------------
// Hamiltonian decomposition.
// ---------------------------------------------------------------------------

/// The 1-form iota_W omega as component polynomials (coefficient of dz_i).
fn contraction_with_omega(w: &VectorField) -> Vec<Poly> {
    let n = w.n();
    let mut a = vec![Poly::zero(w.params() + n, w.backend()); n];
    for j in 0..n / 2 {
        a[2 * j + 1] = w.coeff(2 * j).clone();
        a[2 * j] = w.coeff(2 * j + 1).neg();
    }
    a
}

/// Recovers the Hamiltonian by integrating iota_W omega along rays from 0.
fn hamiltonian_potential(w: &VectorField) -> Result<Poly> {
    let n = w.n();
    let params = w.params();
    let backend = w.backend();
    let a = contraction_with_omega(w);
    for i in 0..n {
        for j in i + 1..n {
            let diff = a[i].partial(params + j).sub(&a[j].partial(params + i))?;
            let ok = match backend {
                Backend::Exact => diff.is_zero(),
                Backend::Approx => diff.coeff_norm() <= crate::scalar::DEFAULT_TOL,
            };
            if !ok {
                return Err(Error::NotHamiltonian(format!(
                    "d(iota_W omega) has component {diff}"
                )));
            }
        }
    }
    let mut h = Poly::zero(params + n, backend);
    for (i, ai) in a.iter().enumerate() {
        for (e, c) in ai.terms() {
            let zdeg = e.total_from(params);
            let mut f = e.clone();
            f.0[params + i] += 1;
            let denom = Scalar::from_integer(zdeg as i64 + 1, backend).inv()?;
            h = h.add(&Poly::monomial(&f.0, c.mul(&denom), params + n))?;
        }
    }
    Ok(h)
}

/// Decomposes a Hamiltonian field into Hamiltonian shear fields via a Waring
/// decomposition of its potential: the term c (lambda . z)^d contributes the
/// field c d (lambda . z)^{d-1} v_lambda, with v_lambda the omega-dual.
pub fn decompose_hamiltonian(w: &VectorField) -> Result<Decomposition> {
    let n = w.n();
    if n % 2 != 0 {
        return Err(Error::Unsupported(
            "Hamiltonian decomposition needs an even number of variables".into(),
        ));
    }
    let backend = w.backend();
    let tol = crate::scalar::DEFAULT_TOL;
    let h = hamiltonian_potential(w)?;
    let mut summands = Vec::new();
    let max_d = h.degree().max(0);
    for d in 1..=max_d as u32 {
        let part = h.homogeneous_part(d);
        if part.is_zero() {
            continue;
        }
        let mut slot_coeffs = BTreeMap::new();
        for (e, c) in part.terms() {
            slot_coeffs.insert(e.clone(), c.clone());
        }
        let zero = Scalar::zero(backend);
        for (c, lam) in waring_core(n, d, &slot_coeffs, &zero, backend, tol)? {
            let lambda: Vec<Scalar> = lam
                .iter()
                .map(|&l| Scalar::from_integer(l as i64, backend))
                .collect();
            let v = omega_dual(&lambda);
            let coeff = c.mul(&Scalar::from_integer(d as i64, backend));
            summands.push(ShearField::Additive {
                lambda,
                b: v,
                profile: Poly::monomial(&[d - 1], coeff, 1),
            });
        }
    }
    finish_decomposition(w, summands)
}

// ---------------------------------------------------------------------------
// Full decomposition.
// ---------------------------------------------------------------------------

pub fn decompose_field(w: &VectorField, tag: FieldTag) -> Result<Decomposition> {
    match tag {
        FieldTag::General => {
            let (mult, w0) = balance_divergence(w)?;
            let mut dec = decompose_divfree(&w0)?;
            let mut summands = mult;
            summands.append(&mut dec.summands);
            finish_decomposition(w, summands)
        }
        FieldTag::Volume => decompose_divfree(w),
        FieldTag::Symplectic => decompose_hamiltonian(w),
    }
}

// ---------------------------------------------------------------------------
// Parameterized decomposition (one leading parameter variable).
// ---------------------------------------------------------------------------

/// Decomposes a field whose coefficients are polynomials in one parameter.
/// The solve is applied coefficientwise in the parameter, so the coefficient
/// functions inherit vanishing at parameter values where the field vanishes.
pub fn decompose_field_param(w: &VectorField, tag: FieldTag) -> Result<ParamDecomposition> {
    if w.params() != 1 {
        return Err(Error::Invalid(
            "expected exactly one parameter variable".into(),
        ));
    }
    let n = w.n();
    let backend = w.backend();
    let tol = crate::scalar::DEFAULT_TOL;
    let zero_poly = Poly::zero(1, backend);
    let mut summands: Vec<ParamSummand> = Vec::new();

    let div = divergence(w);
    match tag {
        FieldTag::Volume => {
            let ok = match backend {
                Backend::Exact => div.is_zero(),
                Backend::Approx => div.coeff_norm() <= tol,
            };
            if !ok {
                return Err(Error::NonzeroDivergence(div.to_string()));
            }
        }
        FieldTag::Symplectic => {
            if n % 2 != 0 {
                return Err(Error::Unsupported(
                    "Hamiltonian decomposition needs an even number of variables".into(),
                ));
            }
        }
        FieldTag::General => {}
    }

    let mut w0 = w.clone();
    if tag == FieldTag::General && !div.is_zero() {
        let max_d = div.degree_from(1);
        for d in 0..=max_d.max(0) as u32 {
            let slot_coeffs = param_poly_slots(&div, d);
            if slot_coeffs.values().all(|p| p.is_zero()) {
                continue;
            }
            for (coeff, lam) in waring_core(n, d, &slot_coeffs, &zero_poly, backend, tol)? {
                let (v, j0) = mult_type_kernel_vector(&lam, backend);
                let mut mu = vec![Scalar::zero(backend); n];
                mu[j0] = Scalar::one(backend);
                summands.push(ParamSummand {
                    field: ShearField::MultiplicativeType {
                        lambda: lam
                            .iter()
                            .map(|&l| Scalar::from_integer(l as i64, backend))
                            .collect(),
                        mu,
                        v,
                        d,
                        c: Scalar::one(backend),
                    },
                    coeff,
                });
            }
        }
        for s in &summands {
            let f = s.field.field()?;
            w0 = w0.sub(&embed_field_with_coeff(&f, &s.coeff)?)?;
        }
    }

    if tag == FieldTag::Symplectic {
        let h = hamiltonian_potential(w)?;
        let max_d = h.degree_from(1).max(0);
        for d in 1..=max_d as u32 {
            let slot_coeffs = param_poly_slots(&h, d);
            if slot_coeffs.values().all(|p| p.is_zero()) {
                continue;
            }
            for (coeff, lam) in waring_core(n, d, &slot_coeffs, &zero_poly, backend, tol)? {
                let lambda: Vec<Scalar> = lam
                    .iter()
                    .map(|&l| Scalar::from_integer(l as i64, backend))
                    .collect();
                let v = omega_dual(&lambda);
                summands.push(ParamSummand {
                    field: ShearField::Additive {
                        lambda,
                        b: v,
                        profile: Poly::monomial(
                            &[d - 1],
                            Scalar::from_integer(d as i64, backend),
                            1,
                        ),
                    },
                    coeff,
                });
            }
        }
    } else {
        let deg = w0.degree();
        for d in 0..=deg.max(0) as u32 {
            let slots = param_slots(&w0, d);
            for (coeff, lam, b) in divfree_degree_core(n, d, &slots, &zero_poly, backend, tol)? {
                summands.push(ParamSummand {
                    field: additive_summand(&lam, &b, d, backend),
                    coeff,
                });
            }
        }
    }

    let mut acc = VectorField::with_params(1, vec![Poly::zero(1 + n, backend); n])?;
    for s in &summands {
        let f = s.field.field()?;
        acc = acc.add(&embed_field_with_coeff(&f, &s.coeff)?)?;
    }
    let residual = w.sub(&acc)?;
    Ok(ParamDecomposition { summands, residual })
}

/// Lifts a z-only field to the parameterized ring, multiplied by a
/// coefficient polynomial in the parameter.
fn embed_field_with_coeff(f: &VectorField, coeff: &Poly) -> Result<VectorField> {
    let n = f.n();
    let cx = coeff.embed(1 + n, 0);
    let coeffs = f
        .coeffs()
        .iter()
        .map(|c| c.embed(1 + n, 1).mul(&cx))
        .collect::<Result<Vec<_>>>()?;
    VectorField::with_params(1, coeffs)
}

// ---------------------------------------------------------------------------
// Exact flows.
// ---------------------------------------------------------------------------

/// Which linear subgroup the flow's conjugator should live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjFlavor {
    /// Determinant-1 conjugators (fine for all tags but symplectic).
    Unimodular,
    /// Symplectic conjugators; requires even dimension.
    Symplectic,
}

/// The time-t map of a shear field, as an invertible generator. Additive
/// fields flow to additive shears; multiplicative-type fields flow to
/// multiplicative overshears (lambda . z is constant along orbits, so the
/// flow integrates a linear equation on each orbit).
pub fn exact_flow(s: &ShearField, t: &Scalar, flavor: ConjFlavor) -> Result<ShearGen> {
    let n = s.n();
    let backend = s.backend();
    if t.is_zero() {
        return ShearGen::additive(
            Matrix::identity(n, backend),
            Poly::zero(n - 1, backend),
            Scalar::zero(backend),
        );
    }
    match s {
        ShearField::Additive { lambda, b, profile } => {
            let l = match flavor {
                ConjFlavor::Unimodular => unimodular_completion(b)?,
                ConjFlavor::Symplectic => symplectic_completion(b)?,
            };
            let linv = l.inverse()?;
            // Profile in normal coordinates: g((lambda o L^{-1}) . w); the
            // last entry of lambda o L^{-1} is lambda(b) = 0.
            let mu = linv.apply_left(lambda);
            debug_assert!(mu[n - 1].is_zero());
            let mut arg = Poly::zero(n - 1, backend);
            for (i, item) in mu.iter().enumerate().take(n - 1) {
                arg = arg.add(&Poly::var(i, n - 1, backend).scale(item)?)?;
            }
            let f = profile.compose(&[arg])?;
            ShearGen::additive(l, f, t.clone())
        }
        ShearField::MultiplicativeType {
            lambda,
            mu,
            v,
            d,
            c,
        } => {
            let l = annihilator_completion(v, mu)?;
            let linv = l.inverse()?;
            let lam_w = linv.apply_left(lambda);
            debug_assert!(lam_w[n - 1].is_zero());
            let mut arg = Poly::zero(n - 1, backend);
            for (i, item) in lam_w.iter().enumerate().take(n - 1) {
                arg = arg.add(&Poly::var(i, n - 1, backend).scale(item)?)?;
            }
            let f = arg.pow(*d)?.scale(c)?;
            ShearGen::multiplicative(l, f, t.clone())
        }
    }
}

/// An invertible matrix with determinant 1 mapping `b` to the last standard
/// basis vector: complete b with standard basis vectors and normalize.
fn unimodular_completion(b: &[Scalar]) -> Result<Matrix> {
    let n = b.len();
    let backend = b[0].backend();
    let j0 = b
        .iter()
        .position(|c| !c.is_zero())
        .ok_or_else(|| Error::Invalid("zero direction vector".into()))?;
    let mut linv = Matrix::zero(n, backend);
    let mut col = 0usize;
    for i in 0..n {
        if i == j0 {
            continue;
        }
        *linv.at_mut(i, col) = Scalar::one(backend);
        col += 1;
    }
    for (i, bi) in b.iter().enumerate() {
        *linv.at_mut(i, n - 1) = bi.clone();
    }
    let det = linv.det();
    if det.is_zero() {
        return Err(Error::SingularLinearPart);
    }
    let fix = det.inv()?;
    if n > 1 {
        for i in 0..n {
            let v = linv.at(i, 0).mul(&fix);
            *linv.at_mut(i, 0) = v;
        }
    }
    linv.inverse()
}

/// An invertible matrix whose last row is `mu` and whose other rows
/// annihilate `v`; maps v to e_{n-1} when mu(v) = 1.
fn annihilator_completion(v: &[Scalar], mu: &[Scalar]) -> Result<Matrix> {
    let n = v.len();
    let backend = v[0].backend();
    let j0 = v
        .iter()
        .position(|c| !c.is_zero())
        .ok_or_else(|| Error::Invalid("zero direction vector".into()))?;
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(n);
    for j in 0..n {
        if j == j0 {
            continue;
        }
        let mut row = vec![Scalar::zero(backend); n];
        row[j] = Scalar::one(backend);
        row[j0] = v[j].div(&v[j0])?.neg();
        rows.push(row);
    }
    rows.push(mu.to_vec());
    let l = Matrix::from_rows(rows)?;
    if l.det().is_zero() {
        return Err(Error::SingularLinearPart);
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(i: usize) -> Poly {
        Poly::var(i, 2, Backend::Exact)
    }

    fn s(k: i64) -> Scalar {
        Scalar::from_integer(k, Backend::Exact)
    }

    #[test]
    fn waring_of_cross_term() {
        // Oracle: expand the powers and match monomial coefficients.
        let p = z(0).mul(&z(1)).unwrap();
        let terms = waring(&p, 2).unwrap();
        let mut acc = Poly::zero(2, Backend::Exact);
        for (c, lam) in &terms {
            let form = covector_poly(lam, 2, 0).unwrap();
            acc = acc.add(&form.pow(2).unwrap().scale(c).unwrap()).unwrap();
        }
        assert_eq!(acc, p);
        assert!(terms.len() >= 2);
    }

    #[test]
    fn waring_of_pure_power() {
        let p = z(0).pow(2).unwrap();
        let terms = waring(&p, 2).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, s(1));
        assert_eq!(terms[0].1, vec![s(1), s(0)]);
    }

    #[test]
    fn waring_of_constant() {
        let p = Poly::one(2, Backend::Exact);
        let terms = waring(&p, 0).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, s(1));
    }

    #[test]
    fn divfree_single_shear_field() {
        // z2^2 d/dz1 is already an additive shear field.
        let w =
            VectorField::new(vec![z(1).pow(2).unwrap(), Poly::zero(2, Backend::Exact)]).unwrap();
        let dec = decompose_divfree(&w).unwrap();
        assert!(dec.residual.is_zero());
        assert_eq!(dec.summands.len(), 1);
        assert_eq!(dec.recompose().unwrap(), w);
        for s in &dec.summands {
            assert!(s.divergence().unwrap().is_zero());
        }
    }

    #[test]
    fn divfree_linear_field() {
        // z1 d/dz1 - z2 d/dz2.
        let w = VectorField::new(vec![z(0), z(1).neg()]).unwrap();
        let dec = decompose_divfree(&w).unwrap();
        assert!(dec.residual.is_zero());
        assert_eq!(dec.recompose().unwrap(), w);
        for s in &dec.summands {
            match s {
                ShearField::Additive { lambda, b, .. } => {
                    let mut acc = Scalar::zero(Backend::Exact);
                    for (l, x) in lambda.iter().zip(b) {
                        acc = acc.add(&l.mul(x));
                    }
                    assert!(acc.is_zero(), "lambda(b) != 0");
                }
                _ => panic!("expected additive summands"),
            }
        }
    }

    #[test]
    fn divfree_zero_field() {
        let w = VectorField::zero(2, Backend::Exact);
        let dec = decompose_divfree(&w).unwrap();
        assert!(dec.summands.is_empty());
        assert!(dec.residual.is_zero());
    }

    #[test]
    fn divfree_rejects_nonzero_divergence() {
        let w = VectorField::new(vec![z(0), Poly::zero(2, Backend::Exact)]).unwrap();
        assert!(matches!(
            decompose_divfree(&w),
            Err(Error::NonzeroDivergence(_))
        ));
    }

    #[test]
    fn balance_linear_euler_field() {
        // W = z1 d/dz1: div = 1, M = z1 d/dz1 itself (lambda power 0), W0 = 0.
        let w = VectorField::new(vec![z(0), Poly::zero(2, Backend::Exact)]).unwrap();
        let (m, w0) = balance_divergence(&w).unwrap();
        assert_eq!(m.len(), 1);
        assert!(w0.is_zero());
        match &m[0] {
            ShearField::MultiplicativeType { d, c, v, mu, .. } => {
                assert_eq!(*d, 0);
                assert_eq!(*c, s(1));
                assert_eq!(v[0], s(1));
                assert!(v[1].is_zero());
                assert_eq!(mu[0], s(1));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn balance_quadratic_field() {
        // W = z1^2 d/dz1: div = 2 z1; M = 2 z1 z2 d/dz2; W0 div-free.
        let w =
            VectorField::new(vec![z(0).pow(2).unwrap(), Poly::zero(2, Backend::Exact)]).unwrap();
        let (m, w0) = balance_divergence(&w).unwrap();
        assert_eq!(m.len(), 1);
        let mf = m[0].field().unwrap();
        let want = VectorField::new(vec![
            Poly::zero(2, Backend::Exact),
            z(0).mul(&z(1)).unwrap().scale(&s(2)).unwrap(),
        ])
        .unwrap();
        assert_eq!(mf, want);
        assert!(divergence(&w0).is_zero());
        assert_eq!(m[0].divergence().unwrap(), z(0).scale(&s(2)).unwrap());
    }

    #[test]
    fn balance_divfree_input_passes_through() {
        let w =
            VectorField::new(vec![z(1).pow(3).unwrap(), Poly::zero(2, Backend::Exact)]).unwrap();
        let (m, w0) = balance_divergence(&w).unwrap();
        assert!(m.is_empty());
        assert_eq!(w0, w);
    }

    #[test]
    fn general_decomposition_recomposes() {
        let w =
            VectorField::new(vec![z(0).pow(2).unwrap(), Poly::zero(2, Backend::Exact)]).unwrap();
        let dec = decompose_field(&w, FieldTag::General).unwrap();
        assert!(dec.residual.is_zero());
        assert_eq!(dec.recompose().unwrap(), w);
        let mult = dec
            .summands
            .iter()
            .filter(|s| matches!(s, ShearField::MultiplicativeType { .. }))
            .count();
        let add = dec
            .summands
            .iter()
            .filter(|s| matches!(s, ShearField::Additive { .. }))
            .count();
        assert_eq!(mult, 1);
        assert!(add >= 2);
    }

    #[test]
    fn hamiltonian_of_rotation_like_field() {
        // W = z2 d/dz1: h = z2^2/2, single summand with lambda = dz2.
        let w = VectorField::new(vec![z(1), Poly::zero(2, Backend::Exact)]).unwrap();
        let dec = decompose_hamiltonian(&w).unwrap();
        assert!(dec.residual.is_zero());
        assert_eq!(dec.summands.len(), 1);
        match &dec.summands[0] {
            ShearField::Additive { lambda, .. } => {
                assert!(lambda[0].is_zero());
                assert_eq!(lambda[1], s(1));
            }
            _ => panic!(),
        }
        assert_eq!(dec.recompose().unwrap(), w);
    }

    #[test]
    fn hamiltonian_zero_field() {
        let dec = decompose_hamiltonian(&VectorField::zero(2, Backend::Exact)).unwrap();
        assert!(dec.summands.is_empty());
    }

    #[test]
    fn hamiltonian_cubic_potential() {
        // h = z1^2 z2; X_h = (dh/dz2, -dh/dz1) = (z1^2, -2 z1 z2).
        let xh = VectorField::new(vec![
            z(0).pow(2).unwrap(),
            z(0).mul(&z(1)).unwrap().scale(&s(-2)).unwrap(),
        ])
        .unwrap();
        let dec = decompose_hamiltonian(&xh).unwrap();
        assert!(dec.residual.is_zero());
        assert_eq!(dec.recompose().unwrap(), xh);
        // Every summand is Hamiltonian: iota_s omega is the differential of
        // its own potential.
        for sum in &dec.summands {
            let f = sum.field().unwrap();
            let a = contraction_with_omega(&f);
            let h = hamiltonian_potential(&f).unwrap();
            for (i, ai) in a.iter().enumerate() {
                assert_eq!(h.partial(i), *ai);
            }
        }
    }

    #[test]
    fn hamiltonian_rejects_nonclosed() {
        // W = z1 d/dz1 has iota_W omega = z1 dz2, not closed.
        let w = VectorField::new(vec![z(0), Poly::zero(2, Backend::Exact)]).unwrap();
        assert!(matches!(
            decompose_hamiltonian(&w),
            Err(Error::NotHamiltonian(_))
        ));
    }

    #[test]
    fn symplectic_tag_example() {
        // z1 d/dz2 with omega = dz1 ^ dz2: h = -z1^2/2.
        let w = VectorField::new(vec![Poly::zero(2, Backend::Exact), z(0)]).unwrap();
        let dec = decompose_field(&w, FieldTag::Symplectic).unwrap();
        assert!(dec.residual.is_zero());
        assert_eq!(dec.summands.len(), 1);
        assert_eq!(dec.recompose().unwrap(), w);
    }

    #[test]
    fn exact_flow_additive() {
        // Field z2^2 d/dz1 flows to (z1 + t z2^2, z2).
        let field = ShearField::Additive {
            lambda: vec![s(0), s(1)],
            b: vec![s(1), s(0)],
            profile: Poly::monomial(&[2], s(1), 1),
        };
        let t = Scalar::from_ratio(1, 2, Backend::Exact);
        let gen = exact_flow(&field, &t, ConjFlavor::Unimodular).unwrap();
        let map = gen.polymap().unwrap();
        let want = crate::polymap::PolyMap::new(vec![
            z(0).add(&z(1).pow(2).unwrap().scale(&t).unwrap()).unwrap(),
            z(1),
        ])
        .unwrap();
        assert_eq!(map, want);
        match &gen {
            ShearGen::Additive { conj, .. } => assert!(conj.det().is_one()),
            _ => panic!(),
        }
    }

    #[test]
    fn exact_flow_multiplicative() {
        // c=1, d=1, lambda=dz1, mu=dz2, v=e2 -> (z1, e^{t z1} z2).
        let backend = Backend::Approx;
        let field = ShearField::MultiplicativeType {
            lambda: vec![Scalar::one(backend), Scalar::zero(backend)],
            mu: vec![Scalar::zero(backend), Scalar::one(backend)],
            v: vec![Scalar::zero(backend), Scalar::one(backend)],
            d: 1,
            c: Scalar::one(backend),
        };
        let t = Scalar::from_f64(0.7, 0.0);
        let gen = exact_flow(&field, &t, ConjFlavor::Unimodular).unwrap();
        for (x, y) in [(0.3, -0.2), (1.1, 0.4)] {
            let z = vec![Scalar::from_f64(x, 0.0), Scalar::from_f64(y, 0.0)];
            let out = gen.eval(&z).unwrap();
            assert!(out[0].approx_eq(&z[0], 1e-13));
            let want = Scalar::from_f64((0.7 * x).exp() * y, 0.0);
            assert!(out[1].approx_eq(&want, 1e-12), "{} vs {}", out[1], want);
        }
    }

    #[test]
    fn exact_flow_zero_time_is_identity() {
        let field = ShearField::Additive {
            lambda: vec![s(0), s(1)],
            b: vec![s(1), s(0)],
            profile: Poly::monomial(&[2], s(1), 1),
        };
        let gen = exact_flow(
            &field,
            &Scalar::zero(Backend::Exact),
            ConjFlavor::Unimodular,
        )
        .unwrap();
        assert!(gen.is_identity());
    }

    #[test]
    fn flow_derivative_matches_field() {
        // Central difference of the flow at t = 1e-4 approximates the field.
        let backend = Backend::Approx;
        let fields = vec![
            ShearField::Additive {
                lambda: vec![Scalar::one(backend), Scalar::from_f64(2.0, 0.0)],
                b: vec![Scalar::from_f64(2.0, 0.0), Scalar::from_f64(-1.0, 0.0)],
                profile: Poly::monomial(&[3], Scalar::from_f64(0.8, 0.3), 1),
            },
            ShearField::MultiplicativeType {
                lambda: vec![Scalar::one(backend), Scalar::zero(backend)],
                mu: vec![Scalar::zero(backend), Scalar::one(backend)],
                v: vec![Scalar::zero(backend), Scalar::one(backend)],
                d: 2,
                c: Scalar::from_f64(0.5, -0.2),
            },
        ];
        let h = 1e-4;
        let tp = Scalar::from_f64(h, 0.0);
        let tm = Scalar::from_f64(-h, 0.0);
        for field in &fields {
            let fp = exact_flow(field, &tp, ConjFlavor::Unimodular).unwrap();
            let fm = exact_flow(field, &tm, ConjFlavor::Unimodular).unwrap();
            let vf = field.field().unwrap();
            for k in 0..20 {
                let z = vec![
                    Scalar::from_f64(0.1 * (k as f64) - 1.0, 0.03 * k as f64),
                    Scalar::from_f64(0.8 - 0.07 * k as f64, -0.02 * k as f64),
                ];
                let plus = fp.eval(&z).unwrap();
                let minus = fm.eval(&z).unwrap();
                let want = vf.eval(&z).unwrap();
                for i in 0..2 {
                    let diff = plus[i]
                        .sub(&minus[i])
                        .mul(&Scalar::from_f64(1.0 / (2.0 * h), 0.0));
                    assert!(diff.approx_eq(&want[i], 1e-8), "{} vs {}", diff, want[i]);
                }
            }
        }
    }

    #[test]
    fn determinism_same_summands() {
        let w = VectorField::new(vec![
            z(0).pow(3).unwrap().add(&z(1).pow(2).unwrap()).unwrap(),
            z(0).mul(&z(1)).unwrap(),
        ])
        .unwrap();
        let a = decompose_field(&w, FieldTag::General).unwrap();
        let b = decompose_field(&w, FieldTag::General).unwrap();
        assert_eq!(a.summands, b.summands);
    }

    #[test]
    fn param_decomposition_inherits_vanishing() {
        // W(x, z) = x(x-1) z2^2 d/dz1: coefficients vanish at x = 0, 1.
        let backend = Backend::Exact;
        let x = Poly::var(0, 3, backend);
        let z2 = Poly::var(2, 3, backend);
        let cx = x.pow(2).unwrap().sub(&x).unwrap();
        let w = VectorField::with_params(
            1,
            vec![cx.mul(&z2.pow(2).unwrap()).unwrap(), Poly::zero(3, backend)],
        )
        .unwrap();
        let dec = decompose_field_param(&w, FieldTag::General).unwrap();
        assert!(dec.residual.is_zero());
        assert!(!dec.summands.is_empty());
        for s in &dec.summands {
            for node in [Scalar::zero(backend), Scalar::one(backend)] {
                assert!(s.coeff.eval(&[node]).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn monomial_fields_general_tag() {
        // All monomial fields z^alpha d/dz_i with |alpha| <= 3 in 2 vars.
        for d in 0..=3u32 {
            for alpha in monomials_of_degree(2, d) {
                for i in 0..2 {
                    let mut coeffs = vec![Poly::zero(2, Backend::Exact); 2];
                    coeffs[i] = Poly::monomial(&alpha.0, s(1), 2);
                    let w = VectorField::new(coeffs).unwrap();
                    let dec = decompose_field(&w, FieldTag::General).unwrap();
                    assert!(dec.residual.is_zero(), "alpha={:?} i={}", alpha, i);
                    assert_eq!(dec.recompose().unwrap(), w);
                    for sum in &dec.summands {
                        match sum {
                            ShearField::Additive { .. } => {
                                assert!(sum.divergence().unwrap().is_zero())
                            }
                            ShearField::MultiplicativeType { lambda, d, c, .. } => {
                                let lam = covector_poly(lambda, 2, 0).unwrap();
                                let want = lam.pow(*d).unwrap().scale(c).unwrap();
                                assert_eq!(sum.divergence().unwrap(), want);
                            }
                        }
                    }
                }
            }
        }
    }
}
