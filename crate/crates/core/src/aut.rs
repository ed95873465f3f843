//! Concrete automorphism values: compositions of generator words, polynomial
//! maps, and lazily scaled words, closed under inversion and evaluation.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::Poly;
use crate::polymap::{jacobian_det, linear_map, polymap_invert, PolyMap};
use crate::scalar::{Backend, Scalar};
use crate::shear::{
    conjugate_scale_map, scaling_curve_map, GroupTag, SchwarzDecomposition, ShearGen, ShearWord,
};

/// Below this magnitude the scaling-curve formula for word values switches to
/// an order-2 jet expansion to dodge the cancellation in t^{-1}(phi(tz)-phi(0)).
const SCALING_JET_CUTOFF: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum Atom {
    Word(ShearWord),
    Map(PolyMap),
    /// The value of the scaling curve of `word` at parameter `t` (nonzero),
    /// kept unexpanded because words have no polynomial form in general.
    ScaledWord {
        word: ShearWord,
        t: Scalar,
    },
}

impl Atom {
    fn n(&self) -> usize {
        match self {
            Atom::Word(w) => w.n(),
            Atom::Map(m) => m.n(),
            Atom::ScaledWord { word, .. } => word.n(),
        }
    }

    fn eval(&self, z: &[Scalar]) -> Result<Vec<Scalar>> {
        match self {
            Atom::Word(w) => w.eval(z),
            Atom::Map(m) => m.eval(z),
            Atom::ScaledWord { word, t } => {
                debug_assert!(!t.is_zero());
                if word.backend() == Backend::Approx && t.norm() < SCALING_JET_CUTOFF {
                    let jet2 = word.jet(2)?;
                    let scaled = scaling_curve_map(&jet2.map, t)?;
                    return scaled.eval(z);
                }
                // t phi(0) + t^{-1} (phi(t z) - phi(0))
                let tz: Vec<Scalar> = z.iter().map(|c| c.mul(t)).collect();
                let ftz = word.eval(&tz)?;
                let f0 = word.eval(&vec![Scalar::zero(word.backend()); word.n()])?;
                let tinv = t.inv()?;
                Ok(ftz
                    .iter()
                    .zip(&f0)
                    .map(|(v, a)| t.mul(a).add(&tinv.mul(&v.sub(a))))
                    .collect())
            }
        }
    }

    fn jacobian_at(&self, z: &[Scalar]) -> Result<Matrix> {
        match self {
            Atom::Word(w) => {
                let mut p = z.to_vec();
                let mut jac = Matrix::identity(w.n(), w.backend());
                for g in w.gens() {
                    jac = g.jacobian_at(&p)?.mul(&jac);
                    p = g.eval(&p)?;
                }
                Ok(jac)
            }
            Atom::Map(m) => m.jacobian_at(z),
            Atom::ScaledWord { word, t } => {
                // D(tau_t phi)(z) = D phi(t z).
                let tz: Vec<Scalar> = z.iter().map(|c| c.mul(t)).collect();
                Atom::Word(word.clone()).jacobian_at(&tz)
            }
        }
    }

    fn inverse(&self) -> Result<Vec<Atom>> {
        Ok(match self {
            Atom::Word(w) => vec![Atom::Word(w.inverse())],
            Atom::Map(m) => vec![Atom::Map(polymap_invert(m)?)],
            Atom::ScaledWord { word, t } => {
                let n = word.n();
                let backend = word.backend();
                let a = word.eval(&vec![Scalar::zero(backend); n])?;
                let inv_word = word.inverse();
                if a.iter().all(|c| c.is_zero()) {
                    // Schwarz case: (tau_t phi)^{-1} = tau_t (phi^{-1}).
                    vec![Atom::ScaledWord {
                        word: inv_word,
                        t: t.clone(),
                    }]
                } else {
                    // General case: sigma_{1/t} o phi^{-1} o rho^{-1} with
                    // rho^{-1}(u) = t u + (1 - t^2) a, listed in application order.
                    let one = Scalar::one(backend);
                    let c = one.sub(&t.mul(t));
                    let pre = affine_map(
                        &scalar_matrix(n, t),
                        &a.iter().map(|ai| ai.mul(&c)).collect::<Vec<_>>(),
                    )?;
                    let post = affine_map(
                        &scalar_matrix(n, &t.inv()?),
                        &vec![Scalar::zero(backend); n],
                    )?;
                    vec![Atom::Map(pre), Atom::Word(inv_word), Atom::Map(post)]
                }
            }
        })
    }

    fn to_polymap(&self) -> Result<PolyMap> {
        match self {
            Atom::Word(w) => w.polymap(),
            Atom::Map(m) => Ok(m.clone()),
            Atom::ScaledWord { word, t } => scaling_curve_map(&word.polymap()?, t),
        }
    }
}

/// sigma_s^{-1} o w o sigma_s as a word: the scaling affines become the first
/// and last generators.
fn sandwich_scaling(w: &ShearWord, s: &Scalar) -> Result<ShearWord> {
    let n = w.n();
    let backend = w.backend();
    let zero = vec![Scalar::zero(backend); n];
    let mut out = ShearWord::empty(n, backend, w.tag)?;
    out.push(ShearGen::affine(scalar_matrix(n, s), zero.clone())?)?;
    for g in w.gens() {
        out.push(g.clone())?;
    }
    out.push(ShearGen::affine(scalar_matrix(n, &s.inv()?), zero)?)?;
    Ok(out)
}

/// Determinant of a word's derivative along an orbit: additive shears
/// contribute exactly 1, affine factors their constant determinant, and
/// multiplicative shears the only genuinely pointwise factor e^{t f(w')}.
fn word_det_at(w: &ShearWord, z: &[Scalar]) -> Result<Scalar> {
    let backend = w.backend();
    let n = w.n();
    let mut det = Scalar::one(backend);
    let mut p = z.to_vec();
    for g in w.gens() {
        match g {
            ShearGen::Additive { .. } => {}
            ShearGen::Affine { a, .. } => {
                det = det.mul(&a.det());
            }
            ShearGen::Multiplicative { conj, profile, t } => {
                let wpt = conj.apply(&p);
                let f = profile.eval(&wpt[..n - 1])?;
                det = det.mul(&t.mul(&f).exp()?);
            }
        }
        p = g.eval(&p)?;
    }
    Ok(det)
}

fn scalar_matrix(n: usize, t: &Scalar) -> Matrix {
    let mut m = Matrix::zero(n, t.backend());
    for i in 0..n {
        *m.at_mut(i, i) = t.clone();
    }
    m
}

fn affine_map(a: &Matrix, b: &[Scalar]) -> Result<PolyMap> {
    let n = a.n;
    let lin = linear_map(a, 0, a.backend())?;
    let comps = lin
        .components()
        .iter()
        .zip(b)
        .map(|(c, bi)| c.add(&Poly::constant(bi.clone(), n)))
        .collect::<Result<Vec<_>>>()?;
    PolyMap::new(comps)
}

/// A concrete automorphism: a composite of atoms in application order.
#[derive(Debug, Clone)]
pub struct AutValue {
    n: usize,
    backend: Backend,
    atoms: Vec<Atom>,
}

impl AutValue {
    pub fn identity(n: usize, backend: Backend) -> AutValue {
        AutValue {
            n,
            backend,
            atoms: Vec::new(),
        }
    }

    pub fn from_word(w: ShearWord) -> AutValue {
        AutValue {
            n: w.n(),
            backend: w.backend(),
            atoms: vec![Atom::Word(w)],
        }
    }

    pub fn from_map(m: PolyMap) -> AutValue {
        AutValue {
            n: m.n(),
            backend: m.backend(),
            atoms: vec![Atom::Map(m)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn push(&mut self, atom: Atom) {
        debug_assert_eq!(atom.n(), self.n);
        self.atoms.push(atom);
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &AutValue) -> AutValue {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        AutValue {
            n: self.n,
            backend: self.backend,
            atoms,
        }
    }

    pub fn eval(&self, z: &[Scalar]) -> Result<Vec<Scalar>> {
        let mut p = z.to_vec();
        for a in &self.atoms {
            p = a.eval(&p)?;
        }
        Ok(p)
    }

    pub fn value_at_zero(&self) -> Result<Vec<Scalar>> {
        self.eval(&vec![Scalar::zero(self.backend); self.n])
    }

    /// Jacobian matrix at a point, by the chain rule along the orbit.
    pub fn jacobian_at(&self, z: &[Scalar]) -> Result<Matrix> {
        let mut p = z.to_vec();
        let mut jac = Matrix::identity(self.n, self.backend);
        for a in &self.atoms {
            jac = a.jacobian_at(&p)?.mul(&jac);
            p = a.eval(&p)?;
        }
        Ok(jac)
    }

    /// Jacobian determinant at a point, as the product of per-atom
    /// determinants along the orbit. Polynomial atoms contribute their
    /// symbolic determinant, so constant-Jacobian factors are evaluated
    /// exactly even when the orbit point is large.
    pub fn jacobian_det_at(&self, z: &[Scalar]) -> Result<Scalar> {
        let mut p = z.to_vec();
        let mut det = Scalar::one(self.backend);
        for a in &self.atoms {
            let factor = match a {
                Atom::Map(m) => {
                    let jd = jacobian_det(m)?;
                    let c0 = jd.constant_term();
                    let tail = jd.sub(&Poly::constant(c0.clone(), jd.nvars()))?;
                    // The nonconstant part of a determinant is a sum of
                    // products of two coefficient-scale quantities; on the
                    // approximate backend, tails below the rounding floor of
                    // that scale are cancellation residue, not signal.
                    let m_scale = m
                        .components()
                        .iter()
                        .map(|c| c.coeff_norm())
                        .fold(0.0, f64::max);
                    let residue_floor = 1e-12 * (1.0 + m_scale) * (1.0 + m_scale);
                    if tail.is_zero()
                        || (m.backend() == Backend::Approx && tail.coeff_norm() <= residue_floor)
                    {
                        c0
                    } else {
                        jd.eval(&p)?
                    }
                }
                Atom::Word(w) => word_det_at(w, &p)?,
                Atom::ScaledWord { word, t } => {
                    let tp: Vec<Scalar> = p.iter().map(|c| c.mul(t)).collect();
                    word_det_at(word, &tp)?
                }
            };
            det = det.mul(&factor);
            p = a.eval(&p)?;
        }
        Ok(det)
    }

    /// Derivative at the origin.
    pub fn d0(&self) -> Result<Matrix> {
        self.jacobian_at(&vec![Scalar::zero(self.backend); self.n])
    }

    pub fn inverse(&self) -> Result<AutValue> {
        let mut atoms = Vec::new();
        for a in self.atoms.iter().rev() {
            atoms.extend(a.inverse()?);
        }
        Ok(AutValue {
            n: self.n,
            backend: self.backend,
            atoms,
        })
    }

    /// Symbolic composite when every atom has a polynomial form.
    pub fn to_polymap(&self) -> Result<PolyMap> {
        let mut map = PolyMap::identity(self.n, self.backend);
        for a in &self.atoms {
            map = map.then(&a.to_polymap()?)?;
        }
        Ok(map)
    }

    /// The scaling curve of a Schwarz composite at parameter `s`. Because the
    /// composite fixes 0 with identity derivative, this is conjugation by the
    /// scaling z -> s z, which distributes over the atoms: polynomial atoms
    /// are conjugated symbolically, word atoms are sandwiched between scaling
    /// affines, and scaled word atoms (necessarily of Schwarz words here)
    /// multiply their scales.
    pub fn scaled_schwarz(&self, s: &Scalar) -> Result<AutValue> {
        if s.is_zero() {
            let lin = self.d0()?;
            return Ok(AutValue::from_map(linear_map(&lin, 0, self.backend)?));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            atoms.push(match a {
                Atom::Map(m) => Atom::Map(conjugate_scale_map(m, s)?),
                Atom::Word(w) => Atom::Word(sandwich_scaling(w, s)?),
                Atom::ScaledWord { word, t } => Atom::ScaledWord {
                    word: word.clone(),
                    t: t.mul(s),
                },
            });
        }
        Ok(AutValue {
            n: self.n,
            backend: self.backend,
            atoms,
        })
    }

    pub fn approx_eq_on(&self, other: &AutValue, points: &[Vec<Scalar>], tol: f64) -> bool {
        points.iter().all(|z| match (self.eval(z), other.eval(z)) {
            (Ok(a), Ok(b)) => a.iter().zip(&b).all(|(x, y)| x.approx_eq(y, tol)),
            _ => false,
        })
    }
}

/// Writes an automorphism as `z -> a + A H(z)` with `H(0) = 0` and
/// `D_0 H = I`. For a required group tag, checks that the linear part lies in
/// the tag's linear subgroup. Polynomial-map inputs must have constant
/// nonzero Jacobian.
pub fn schwarz_normalize(
    value: &AutValue,
    require: Option<GroupTag>,
    tol: f64,
) -> Result<SchwarzDecomposition> {
    let _n = value.n();
    let _backend = value.backend();
    for atom in value.atoms() {
        if let Atom::Map(m) = atom {
            let jd = jacobian_det(m)?;
            if jd.degree() > 0 || jd.is_zero() {
                return Err(Error::NonConstantJacobian(jd.to_string()));
            }
        }
    }
    let center = value.value_at_zero()?;
    let linear = value.d0()?;
    if linear.det().is_zero() {
        return Err(Error::SingularLinearPart);
    }
    if let Some(tag) = require {
        check_linear_subgroup(&linear, tag, tol)?;
    }
    // tail = A^{-1} (F - a): append the affine correction to the composite.
    let a_inv = linear.inverse()?;
    let shift: Vec<Scalar> = a_inv.apply(&center).iter().map(|c| c.neg()).collect();
    let correction = affine_map(&a_inv, &shift)?;
    let mut tail = value.clone();
    tail.push(Atom::Map(correction));
    // Materialize all-polynomial tails, which keeps later chains symbolic.
    let tail = match tail.to_polymap() {
        Ok(m) => AutValue::from_map(m),
        Err(_) => tail,
    };
    Ok(SchwarzDecomposition {
        center,
        linear,
        tail,
    })
}

/// Membership of a matrix in the linear subgroup of a tagged group.
pub fn check_linear_subgroup(m: &Matrix, tag: GroupTag, tol: f64) -> Result<()> {
    if tag.volume() {
        let d = m.det();
        let ok = match m.backend() {
            Backend::Exact => d.is_one(),
            Backend::Approx => {
                (d.to_complex() - num::complex::Complex64::new(1.0, 0.0)).norm() <= tol
            }
        };
        if !ok {
            return Err(Error::TagViolation(format!(
                "linear part determinant {} is not 1",
                d
            )));
        }
    }
    if tag.symplectic() && !m.is_symplectic(tol) {
        return Err(Error::TagViolation("linear part is not symplectic".into()));
    }
    Ok(())
}

/// The entire curve `t -> tau_t(phi)` with `tau_1 = phi` and
/// `tau_0 = D_0 phi`, evaluated at `t`. Polynomial inputs give a polynomial
/// map whose degree-d coefficients carry `t^{d-1}`; words stay lazy.
pub fn scaling_curve(value: &AutValue, t: &Scalar) -> Result<AutValue> {
    if t.backend() != value.backend() {
        return Err(Error::BackendMismatch);
    }
    if t.is_zero() {
        let lin = value.d0()?;
        return Ok(AutValue::from_map(linear_map(&lin, 0, value.backend())?));
    }
    let mut atoms = Vec::with_capacity(value.atoms().len());
    if value.atoms().len() == 1 {
        // Single atom: use the genuine curve formula on the atom itself.
        match &value.atoms()[0] {
            Atom::Map(m) => atoms.push(Atom::Map(scaling_curve_map(m, t)?)),
            Atom::Word(w) => atoms.push(Atom::ScaledWord {
                word: w.clone(),
                t: t.clone(),
            }),
            Atom::ScaledWord { .. } => {
                return Err(Error::Invalid(
                    "scaling an already scaled value needs a Schwarz composite".into(),
                ))
            }
        }
        return Ok(AutValue {
            n: value.n(),
            backend: value.backend(),
            atoms,
        });
    }
    // Composites: fall back to the symbolic route when possible.
    match value.to_polymap() {
        Ok(m) => Ok(AutValue::from_map(scaling_curve_map(&m, t)?)),
        Err(_) => Err(Error::Unsupported(
            "scaling a transcendental composite; scale the factors instead".into(),
        )),
    }
}

/// Group certification of a concrete automorphism value: invertibility is
/// structural; volume tags check the Jacobian determinant at sample points,
/// taking the symbolic per-factor route so constant-Jacobian factors certify
/// exactly.
pub fn certify_value(
    value: &AutValue,
    tag: GroupTag,
    points: &[Vec<Scalar>],
    tol: f64,
) -> Result<()> {
    for z in points {
        if tag.volume() || (tag.symplectic() && value.n() == 2) {
            let d = value.jacobian_det_at(z)?;
            let ok = match value.backend() {
                Backend::Exact => d.is_one(),
                Backend::Approx => {
                    (d.to_complex() - num::complex::Complex64::new(1.0, 0.0)).norm() <= tol
                }
            };
            if !ok {
                return Err(Error::TagViolation(format!(
                    "Jacobian determinant {d} at a sample point is not 1"
                )));
            }
        } else if tag.symplectic() {
            let jac = value.jacobian_at(z)?;
            if !jac.is_symplectic(tol) {
                return Err(Error::TagViolation(
                    "derivative at a sample point is not symplectic".into(),
                ));
            }
        }
    }
    Ok(())
}
