//! Shear generators with exact flows, composition words, group-tag
//! certification, Schwarz normalization, and the scaling curve.
//!
//! Generator words are stored in application order: the first generator in
//! the list acts first. An additive generator in normal coordinates acts as
//! `(w', w_n + t f(w'))`, a multiplicative one as `(w', e^{t f(w')} w_n)`;
//! the stored conjugator `L` maps ambient coordinates to normal coordinates,
//! so the generator acts as `L^{-1} o S o L`.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::Poly;
use crate::polymap::{linear_map, Jet, PolyMap};
use crate::scalar::{Backend, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupTag {
    /// All holomorphic automorphisms.
    Aut,
    /// Jacobian-1 automorphisms.
    Aut1,
    /// Automorphisms preserving the standard symplectic form (even n).
    AutSp,
    /// Polynomial automorphisms.
    AutAlg,
    /// Polynomial, Jacobian 1.
    AutAlg1,
    /// Polynomial, symplectic.
    AutAlgSp,
}

impl GroupTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupTag::Aut => "Aut",
            GroupTag::Aut1 => "Aut1",
            GroupTag::AutSp => "AutSp",
            GroupTag::AutAlg => "AutAlg",
            GroupTag::AutAlg1 => "AutAlg1",
            GroupTag::AutAlgSp => "AutAlgSp",
        }
    }

    pub fn parse(s: &str) -> Result<GroupTag> {
        Ok(match s {
            "Aut" => GroupTag::Aut,
            "Aut1" => GroupTag::Aut1,
            "AutSp" => GroupTag::AutSp,
            "AutAlg" => GroupTag::AutAlg,
            "AutAlg1" => GroupTag::AutAlg1,
            "AutAlgSp" => GroupTag::AutAlgSp,
            _ => return Err(Error::Invalid(format!("unknown group tag {s:?}"))),
        })
    }

    /// Jacobian must be identically 1.
    pub fn volume(&self) -> bool {
        matches!(self, GroupTag::Aut1 | GroupTag::AutAlg1)
    }

    pub fn symplectic(&self) -> bool {
        matches!(self, GroupTag::AutSp | GroupTag::AutAlgSp)
    }

    pub fn algebraic(&self) -> bool {
        matches!(
            self,
            GroupTag::AutAlg | GroupTag::AutAlg1 | GroupTag::AutAlgSp
        )
    }
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShearGen {
    Additive {
        conj: Matrix,
        profile: Poly,
        t: Scalar,
    },
    Multiplicative {
        conj: Matrix,
        profile: Poly,
        t: Scalar,
    },
    Affine {
        a: Matrix,
        b: Vec<Scalar>,
    },
}

impl ShearGen {
    pub fn additive(conj: Matrix, profile: Poly, t: Scalar) -> Result<ShearGen> {
        validate_shear_parts(&conj, &profile, &t)?;
        Ok(ShearGen::Additive { conj, profile, t })
    }

    pub fn multiplicative(conj: Matrix, profile: Poly, t: Scalar) -> Result<ShearGen> {
        validate_shear_parts(&conj, &profile, &t)?;
        if conj.backend() == Backend::Exact {
            return Err(Error::ExactTranscendental(
                "multiplicative shears need the approximate backend".into(),
            ));
        }
        Ok(ShearGen::Multiplicative { conj, profile, t })
    }

    pub fn affine(a: Matrix, b: Vec<Scalar>) -> Result<ShearGen> {
        if b.len() != a.n {
            return Err(Error::VarMismatch {
                expected: a.n,
                got: b.len(),
            });
        }
        for c in &b {
            if c.backend() != a.backend() {
                return Err(Error::BackendMismatch);
            }
        }
        if a.det().is_zero() {
            return Err(Error::SingularLinearPart);
        }
        Ok(ShearGen::Affine { a, b })
    }

    pub fn n(&self) -> usize {
        match self {
            ShearGen::Additive { conj, .. } | ShearGen::Multiplicative { conj, .. } => conj.n,
            ShearGen::Affine { a, .. } => a.n,
        }
    }

    pub fn backend(&self) -> Backend {
        match self {
            ShearGen::Additive { conj, .. } | ShearGen::Multiplicative { conj, .. } => {
                conj.backend()
            }
            ShearGen::Affine { a, .. } => a.backend(),
        }
    }

    pub fn inverse(&self) -> ShearGen {
        match self {
            ShearGen::Additive { conj, profile, t } => ShearGen::Additive {
                conj: conj.clone(),
                profile: profile.clone(),
                t: t.neg(),
            },
            ShearGen::Multiplicative { conj, profile, t } => ShearGen::Multiplicative {
                conj: conj.clone(),
                profile: profile.clone(),
                t: t.neg(),
            },
            ShearGen::Affine { a, b } => {
                let a_inv = a.inverse().expect("affine generators are invertible");
                let nb: Vec<Scalar> = a_inv.apply(b).iter().map(|c| c.neg()).collect();
                ShearGen::Affine { a: a_inv, b: nb }
            }
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            ShearGen::Additive { profile, t, .. } | ShearGen::Multiplicative { profile, t, .. } => {
                t.is_zero() || profile.is_zero()
            }
            ShearGen::Affine { a, b } => a.is_identity() && b.iter().all(|c| c.is_zero()),
        }
    }

    pub fn eval(&self, z: &[Scalar]) -> Result<Vec<Scalar>> {
        let n = self.n();
        if z.len() != n {
            return Err(Error::VarMismatch {
                expected: n,
                got: z.len(),
            });
        }
        match self {
            ShearGen::Additive { conj, profile, t } => {
                let mut w = conj.apply(z);
                let f = profile.eval(&w[..n - 1])?;
                w[n - 1] = w[n - 1].add(&t.mul(&f));
                Ok(conj.inverse()?.apply(&w))
            }
            ShearGen::Multiplicative { conj, profile, t } => {
                if self.backend() == Backend::Exact {
                    return Err(Error::ExactTranscendental(
                        "multiplicative shear evaluation".into(),
                    ));
                }
                let mut w = conj.apply(z);
                let f = profile.eval(&w[..n - 1])?;
                let u = t.mul(&f).exp()?;
                w[n - 1] = u.mul(&w[n - 1]);
                Ok(conj.inverse()?.apply(&w))
            }
            ShearGen::Affine { a, b } => {
                let mut w = a.apply(z);
                for i in 0..n {
                    w[i] = w[i].add(&b[i]);
                }
                Ok(w)
            }
        }
    }

    /// The generator as a polynomial map; errors for multiplicative shears.
    pub fn polymap(&self) -> Result<PolyMap> {
        let n = self.n();
        let backend = self.backend();
        match self {
            ShearGen::Additive { conj, profile, t } => {
                let lmap = linear_map(conj, 0, backend)?;
                let fz = profile.embed(n, 0);
                let mut comps: Vec<Poly> = (0..n).map(|i| Poly::var(i, n, backend)).collect();
                comps[n - 1] = comps[n - 1].add(&fz.scale(t)?)?;
                let shear = PolyMap::new(comps)?;
                let linv = linear_map(&conj.inverse()?, 0, backend)?;
                lmap.then(&shear)?.then(&linv)
            }
            ShearGen::Multiplicative { .. } => Err(Error::ExactTranscendental(
                "multiplicative shears have no polynomial form".into(),
            )),
            ShearGen::Affine { a, b } => {
                let lmap = linear_map(a, 0, backend)?;
                let comps = lmap
                    .components()
                    .iter()
                    .zip(b)
                    .map(|(c, bi)| c.add(&Poly::constant(bi.clone(), n)))
                    .collect::<Result<Vec<_>>>()?;
                PolyMap::new(comps)
            }
        }
    }

    /// Jacobian matrix at a point (analytic for multiplicative shears).
    pub fn jacobian_at(&self, z: &[Scalar]) -> Result<Matrix> {
        match self {
            ShearGen::Multiplicative { conj, profile, t } => {
                let n = self.n();
                let backend = self.backend();
                let w = conj.apply(z);
                let f = profile.eval(&w[..n - 1])?;
                let u = t.mul(&f).exp()?;
                // dS rows: identity except the last: d/dw_j (e^{t f} w_n).
                let mut ds = Matrix::identity(n, backend);
                for j in 0..n - 1 {
                    let df = profile.partial(j).eval(&w[..n - 1])?;
                    *ds.at_mut(n - 1, j) = t.mul(&df).mul(&u).mul(&w[n - 1]);
                }
                *ds.at_mut(n - 1, n - 1) = u;
                Ok(conj.inverse()?.mul(&ds).mul(conj))
            }
            _ => self.polymap()?.jacobian_at(z),
        }
    }

    /// Extends a jet by this generator (generator applied after the jet),
    /// exactly through the jet's order. Multiplicative profiles are expanded
    /// through the exponential series.
    pub fn extend_jet(&self, prefix: &Jet) -> Result<Jet> {
        let n = self.n();
        let k = prefix.order;
        match self {
            ShearGen::Multiplicative { conj, profile, t } => {
                let backend = self.backend();
                let u = prefix.map.apply_matrix(conj)?;
                let q = profile
                    .compose_truncated(&u.components()[..n - 1], 0, k)?
                    .scale(t)?;
                let q0 = q.constant_term();
                let q_pos = q.sub(&Poly::constant(q0.clone(), n))?;
                // e^q = e^{q0} sum (q - q0)^m / m!, truncated at the order.
                let unit = q0.exp()?;
                let mut series = Poly::constant(unit.clone(), n);
                let mut term = Poly::constant(unit, n);
                for m in 1..=k {
                    term = term
                        .mul(&q_pos)?
                        .scale(&Scalar::from_integer(m, backend).inv()?)?
                        .truncate(k);
                    if term.is_zero() {
                        break;
                    }
                    series = series.add(&term)?;
                }
                let mut comps = u.components().to_vec();
                comps[n - 1] = series.mul(&comps[n - 1])?.truncate(k);
                let scaled = PolyMap::new(comps)?;
                let out = scaled.apply_matrix(&conj.inverse()?)?;
                Ok(Jet {
                    map: out.truncate(k),
                    order: k,
                    truncated: true,
                })
            }
            _ => {
                let g = self.polymap()?;
                let map = prefix.map.then_truncated(&g, k)?;
                let truncated = prefix.truncated
                    || match self {
                        ShearGen::Affine { .. } => false,
                        _ => g.degree() + prefix.map.degree().max(1) > k + 1,
                    };
                Ok(Jet {
                    map,
                    order: k,
                    truncated,
                })
            }
        }
    }
}

fn validate_shear_parts(conj: &Matrix, profile: &Poly, t: &Scalar) -> Result<()> {
    let n = conj.n;
    if n < 2 {
        return Err(Error::Invalid("shears need at least two variables".into()));
    }
    if profile.nvars() != n - 1 {
        return Err(Error::VarMismatch {
            expected: n - 1,
            got: profile.nvars(),
        });
    }
    if profile.backend() != conj.backend() || t.backend() != conj.backend() {
        return Err(Error::BackendMismatch);
    }
    if conj.det().is_zero() {
        return Err(Error::SingularLinearPart);
    }
    Ok(())
}

/// A finite composition of invertible generators, in application order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearWord {
    n: usize,
    backend: Backend,
    pub tag: GroupTag,
    gens: Vec<ShearGen>,
}

impl ShearWord {
    pub fn empty(n: usize, backend: Backend, tag: GroupTag) -> Result<ShearWord> {
        if n < 2 {
            return Err(Error::Invalid("words act on at least two variables".into()));
        }
        Ok(ShearWord {
            n,
            backend,
            tag,
            gens: Vec::new(),
        })
    }

    pub fn from_gens(
        n: usize,
        backend: Backend,
        tag: GroupTag,
        gens: Vec<ShearGen>,
    ) -> Result<ShearWord> {
        let mut w = ShearWord::empty(n, backend, tag)?;
        for g in gens {
            w.push(g)?;
        }
        Ok(w)
    }

    /// Appends a generator (applied after the current word). Multiplicative
    /// generators with constant profile are re-expressed as affine diagonal
    /// generators.
    pub fn push(&mut self, gen: ShearGen) -> Result<()> {
        if gen.n() != self.n {
            return Err(Error::VarMismatch {
                expected: self.n,
                got: gen.n(),
            });
        }
        if gen.backend() != self.backend {
            return Err(Error::BackendMismatch);
        }
        let gen = match &gen {
            ShearGen::Multiplicative { conj, profile, t } if profile.degree() <= 0 => {
                let u = t.mul(&profile.constant_term()).exp()?;
                let mut d = Matrix::identity(self.n, self.backend);
                *d.at_mut(self.n - 1, self.n - 1) = u;
                let a = conj.inverse()?.mul(&d).mul(conj);
                ShearGen::affine(a, vec![Scalar::zero(self.backend); self.n])?
            }
            _ => gen,
        };
        self.gens.push(gen);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn gens(&self) -> &[ShearGen] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn concat(&self, other: &ShearWord) -> Result<ShearWord> {
        if other.n != self.n || other.backend != self.backend {
            return Err(Error::Invalid("concatenating incompatible words".into()));
        }
        let mut w = self.clone();
        for g in &other.gens {
            w.push(g.clone())?;
        }
        Ok(w)
    }

    /// Applies the generators in order.
    pub fn eval(&self, z: &[Scalar]) -> Result<Vec<Scalar>> {
        if z.len() != self.n {
            return Err(Error::VarMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        let mut p = z.to_vec();
        for g in &self.gens {
            p = g.eval(&p)?;
        }
        Ok(p)
    }

    /// Reversed list of inverted generators.
    pub fn inverse(&self) -> ShearWord {
        ShearWord {
            n: self.n,
            backend: self.backend,
            tag: self.tag,
            gens: self.gens.iter().rev().map(|g| g.inverse()).collect(),
        }
    }

    /// Truncated Taylor expansion at 0 of the composite, exact through
    /// degree `k`.
    pub fn jet(&self, k: i64) -> Result<Jet> {
        let mut jet = Jet::identity(self.n, k, self.backend);
        for g in &self.gens {
            jet = g.extend_jet(&jet)?;
        }
        Ok(jet)
    }

    /// The composite as an exact polynomial map; errors when a multiplicative
    /// generator makes the word transcendental.
    pub fn polymap(&self) -> Result<PolyMap> {
        let mut map = PolyMap::identity(self.n, self.backend);
        for g in &self.gens {
            map = map.then(&g.polymap()?)?;
        }
        Ok(map)
    }

    pub fn to_approx(&self) -> ShearWord {
        ShearWord {
            n: self.n,
            backend: Backend::Approx,
            tag: self.tag,
            gens: self
                .gens
                .iter()
                .map(|g| match g {
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
                })
                .collect(),
        }
    }

    /// Checks the per-generator certificate of the word's group tag.
    pub fn certify(&self, tol: f64) -> Result<()> {
        let tag = self.tag;
        for (idx, g) in self.gens.iter().enumerate() {
            if tag.algebraic() || tag.volume() || tag.symplectic() {
                if let ShearGen::Multiplicative { .. } = g {
                    return Err(Error::TagViolation(format!(
                        "generator {idx}: multiplicative shear not allowed in {tag}"
                    )));
                }
            }
            if tag.volume() {
                match g {
                    ShearGen::Additive { conj, .. } => {
                        if !det_is_one(conj, tol) {
                            return Err(Error::TagViolation(format!(
                                "generator {idx}: conjugator determinant is not 1"
                            )));
                        }
                    }
                    ShearGen::Affine { a, .. } => {
                        if !det_is_one(a, tol) {
                            return Err(Error::TagViolation(format!(
                                "generator {idx}: affine determinant is not 1"
                            )));
                        }
                    }
                    _ => {}
                }
            }
            if tag.symplectic() {
                if self.n % 2 != 0 {
                    return Err(Error::TagViolation(
                        "symplectic tags need an even number of variables".into(),
                    ));
                }
                match g {
                    ShearGen::Additive { conj, profile, .. } => {
                        if !conj.is_symplectic(tol) {
                            return Err(Error::TagViolation(format!(
                                "generator {idx}: conjugator is not symplectic"
                            )));
                        }
                        // In symplectic normal coordinates the profile may only
                        // depend on the partner coordinate w_{n-1}.
                        for (e, _) in profile.terms() {
                            if e.0[..self.n - 2].iter().any(|&x| x > 0) {
                                return Err(Error::TagViolation(format!(
                                    "generator {idx}: profile is not Hamiltonian in normal coordinates"
                                )));
                            }
                        }
                    }
                    ShearGen::Affine { a, .. } => {
                        if !a.is_symplectic(tol) {
                            return Err(Error::TagViolation(format!(
                                "generator {idx}: affine part is not symplectic"
                            )));
                        }
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

fn det_is_one(m: &Matrix, tol: f64) -> bool {
    let d = m.det();
    match m.backend() {
        Backend::Exact => d.is_one(),
        Backend::Approx => (d.to_complex() - num::complex::Complex64::new(1.0, 0.0)).norm() <= tol,
    }
}

/// Result of writing F as a + A H with H tangent to the identity at 0.
#[derive(Debug, Clone)]
pub struct SchwarzDecomposition {
    pub center: Vec<Scalar>,
    pub linear: Matrix,
    pub tail: crate::aut::AutValue,
}

/// Conjugates a polynomial map by the scaling z -> s z (s nonzero): the
/// degree-d coefficients pick up s^{d-1}, constants s^{-1}. Agrees with the
/// scaling curve exactly on maps fixing 0 and distributes over composition.
pub fn conjugate_scale_map(map: &PolyMap, s: &Scalar) -> Result<PolyMap> {
    if s.backend() != map.backend() {
        return Err(Error::BackendMismatch);
    }
    let s_inv = s.inv()?;
    let params = map.params();
    let comps = map
        .components()
        .iter()
        .map(|c| {
            let mut out = Poly::zero(c.nvars(), c.backend());
            for (e, coeff) in c.terms() {
                let d = e.total_from(params);
                let factor = if d == 0 { s_inv.clone() } else { s.powi(d - 1) };
                out = out.add(&Poly::monomial(&e.0, coeff.mul(&factor), c.nvars()))?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    PolyMap::with_params(params, comps)
}

/// Scales a polynomial map along the curve
/// `t phi(0) + t^{-1} (phi(t z) - phi(0))`: the degree-d part picks up
/// `t^{d-1}` and the constant part `t`, so the result is polynomial in `t`.
pub fn scaling_curve_map(map: &PolyMap, t: &Scalar) -> Result<PolyMap> {
    if t.backend() != map.backend() {
        return Err(Error::BackendMismatch);
    }
    let params = map.params();
    let comps = map
        .components()
        .iter()
        .map(|c| {
            let mut out = Poly::zero(c.nvars(), c.backend());
            for (e, coeff) in c.terms() {
                let d = e.total_from(params);
                let factor = if d == 0 { t.clone() } else { t.powi(d - 1) };
                let term = Poly::monomial(&e.0, coeff.mul(&factor), c.nvars());
                out = out.add(&term)?;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    PolyMap::with_params(params, comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::DEFAULT_TOL;

    fn swap2(backend: Backend) -> Matrix {
        // Determinant-1 coordinate exchange: (z1, z2) -> (-z2, z1).
        Matrix::from_rows(vec![
            vec![Scalar::zero(backend), Scalar::from_integer(-1, backend)],
            vec![Scalar::one(backend), Scalar::zero(backend)],
        ])
        .unwrap()
    }

    /// The shear (z1 + t z2^2, z2), realized with a det-1 conjugator.
    fn first_coord_shear(t: i64, backend: Backend) -> ShearGen {
        let profile = Poly::var(0, 1, backend).pow(2).unwrap();
        ShearGen::additive(swap2(backend), profile, Scalar::from_integer(t, backend)).unwrap()
    }

    #[test]
    fn additive_eval_matches_hand_value() {
        // (1, 2) -> (1 + 4, 2) under z1 += z2^2.
        let g = first_coord_shear(1, Backend::Exact);
        let z = vec![
            Scalar::from_integer(1, Backend::Exact),
            Scalar::from_integer(2, Backend::Exact),
        ];
        let out = g.eval(&z).unwrap();
        assert_eq!(out[0], Scalar::from_integer(5, Backend::Exact));
        assert_eq!(out[1], Scalar::from_integer(2, Backend::Exact));
    }

    #[test]
    fn empty_word_is_identity() {
        let w = ShearWord::empty(2, Backend::Exact, GroupTag::Aut).unwrap();
        let z = vec![
            Scalar::from_integer(7, Backend::Exact),
            Scalar::from_integer(-3, Backend::Exact),
        ];
        assert_eq!(w.eval(&z).unwrap(), z);
    }

    #[test]
    fn swap_then_shear_composes_in_order() {
        // Swap affine, then z1 += z2^2: (1,2) -> (2,1) -> (3,1).
        let backend = Backend::Exact;
        let swap = ShearGen::affine(
            Matrix::from_rows(vec![
                vec![Scalar::zero(backend), Scalar::one(backend)],
                vec![Scalar::one(backend), Scalar::zero(backend)],
            ])
            .unwrap(),
            vec![Scalar::zero(backend); 2],
        )
        .unwrap();
        let w = ShearWord::from_gens(
            2,
            backend,
            GroupTag::Aut,
            vec![swap, first_coord_shear(1, backend)],
        )
        .unwrap();
        let z = vec![
            Scalar::from_integer(1, backend),
            Scalar::from_integer(2, backend),
        ];
        let out = w.eval(&z).unwrap();
        assert_eq!(out[0], Scalar::from_integer(3, backend));
        assert_eq!(out[1], Scalar::from_integer(1, backend));
    }

    #[test]
    fn word_inverse_round_trip() {
        let backend = Backend::Approx;
        let gens = vec![
            first_coord_shear(1, backend),
            ShearGen::affine(
                Matrix::from_rows(vec![
                    vec![Scalar::from_f64(2.0, 0.0), Scalar::from_f64(1.0, 0.0)],
                    vec![Scalar::from_f64(1.0, 0.0), Scalar::from_f64(1.0, 0.0)],
                ])
                .unwrap(),
                vec![Scalar::from_f64(0.5, 0.0), Scalar::from_f64(-1.0, 0.0)],
            )
            .unwrap(),
            ShearGen::multiplicative(
                swap2(backend),
                Poly::var(0, 1, backend),
                Scalar::from_f64(0.3, 0.1),
            )
            .unwrap(),
            first_coord_shear(-2, backend),
        ];
        let w = ShearWord::from_gens(2, backend, GroupTag::Aut, gens).unwrap();
        let winv = w.inverse();
        for k in 0..10 {
            let z = vec![
                Scalar::from_f64(0.1 * k as f64 - 0.4, 0.05 * k as f64),
                Scalar::from_f64(0.3 - 0.07 * k as f64, -0.02 * k as f64),
            ];
            let round = winv.eval(&w.eval(&z).unwrap()).unwrap();
            for (a, b) in round.iter().zip(&z) {
                assert!(a.approx_eq(b, 1e-12), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn single_gen_inverses() {
        let g = first_coord_shear(3, Backend::Exact);
        match g.inverse() {
            ShearGen::Additive { t, .. } => {
                assert_eq!(t, Scalar::from_integer(-3, Backend::Exact))
            }
            _ => panic!(),
        }
    }

    #[test]
    fn word_jet_of_additive_word_is_exact() {
        let w = ShearWord::from_gens(
            2,
            Backend::Exact,
            GroupTag::Aut1,
            vec![first_coord_shear(1, Backend::Exact)],
        )
        .unwrap();
        let jet = w.jet(4).unwrap();
        assert_eq!(jet.map, w.polymap().unwrap());
        assert!(!jet.truncated);
    }

    #[test]
    fn word_jet_multiplicative_series() {
        // e^{z1} z2 truncated at total degree 2 -> z2 + z1 z2.
        let backend = Backend::Approx;
        let g = ShearGen::multiplicative(
            Matrix::identity(2, backend),
            Poly::var(0, 1, backend),
            Scalar::one(backend),
        )
        .unwrap();
        let w = ShearWord::from_gens(2, backend, GroupTag::Aut, vec![g]).unwrap();
        let jet = w.jet(2).unwrap();
        let z0 = Poly::var(0, 2, backend);
        let z1 = Poly::var(1, 2, backend);
        let want = PolyMap::new(vec![z0.clone(), z1.add(&z0.mul(&z1).unwrap()).unwrap()]).unwrap();
        assert!(jet.map.approx_eq(&want, 1e-12));
        assert!(jet.truncated);
    }

    #[test]
    fn word_jet_matches_symbolic_composition() {
        let backend = Backend::Exact;
        let g1 = first_coord_shear(1, backend);
        let g2 = {
            let profile = Poly::var(0, 1, backend).pow(3).unwrap();
            ShearGen::additive(
                Matrix::identity(2, backend),
                profile,
                Scalar::from_integer(2, backend),
            )
            .unwrap()
        };
        let w = ShearWord::from_gens(2, backend, GroupTag::Aut1, vec![g1, g2]).unwrap();
        let jet = w.jet(6).unwrap();
        assert_eq!(jet.map, w.polymap().unwrap().truncate(6));
    }

    #[test]
    fn additive_generator_has_unit_jacobian() {
        let g = first_coord_shear(5, Backend::Exact);
        let d = crate::polymap::jacobian_det(&g.polymap().unwrap()).unwrap();
        assert_eq!(d, Poly::one(2, Backend::Exact));
    }

    #[test]
    fn tag_certification() {
        let w = ShearWord::from_gens(
            2,
            Backend::Exact,
            GroupTag::Aut1,
            vec![first_coord_shear(1, Backend::Exact)],
        )
        .unwrap();
        assert!(w.certify(DEFAULT_TOL).is_ok());

        // Non-unimodular affine part violates Aut1.
        let bad = ShearWord::from_gens(
            2,
            Backend::Exact,
            GroupTag::Aut1,
            vec![ShearGen::affine(
                Matrix::from_rows(vec![
                    vec![
                        Scalar::from_integer(2, Backend::Exact),
                        Scalar::zero(Backend::Exact),
                    ],
                    vec![Scalar::zero(Backend::Exact), Scalar::one(Backend::Exact)],
                ])
                .unwrap(),
                vec![Scalar::zero(Backend::Exact); 2],
            )
            .unwrap()],
        )
        .unwrap();
        assert!(matches!(
            bad.certify(DEFAULT_TOL),
            Err(Error::TagViolation(_))
        ));
    }

    #[test]
    fn constant_profile_multiplicative_becomes_affine() {
        let backend = Backend::Approx;
        let g = ShearGen::multiplicative(
            Matrix::identity(2, backend),
            Poly::one(1, backend),
            Scalar::from_f64(0.7, 0.0),
        )
        .unwrap();
        let w = ShearWord::from_gens(2, backend, GroupTag::Aut, vec![g]).unwrap();
        assert!(matches!(w.gens()[0], ShearGen::Affine { .. }));
        let z = vec![Scalar::from_f64(1.0, 0.0), Scalar::from_f64(1.0, 0.0)];
        let out = w.eval(&z).unwrap();
        assert!(out[1].approx_eq(&Scalar::from_f64(0.7f64.exp(), 0.0), 1e-12));
    }
}
