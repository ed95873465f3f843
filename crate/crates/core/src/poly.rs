//! Sparse multivariate polynomials over complex scalars.
//!
//! Terms are stored in a `BTreeMap` keyed by exponent multi-index under the
//! graded-lexicographic order, so iteration (and hence serialization) is
//! canonical. Zero coefficients are never stored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Backend, Scalar};

/// Exponent multi-index. Ordered graded-lexicographically: first by total
/// degree, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        MultiIndex(e)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Total degree of the entries from `skip` on (degree in the non-parameter
    /// variables).
    pub fn total_from(&self, skip: usize) -> u32 {
        self.0[skip..].iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Degree of the zero polynomial, by convention.
pub const ZERO_DEGREE: i64 = -1;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    backend: Backend,
    terms: BTreeMap<MultiIndex, Scalar>,
}

impl Poly {
    pub fn zero(nvars: usize, backend: Backend) -> Self {
        Poly {
            nvars,
            backend,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Scalar, nvars: usize) -> Self {
        let mut p = Poly::zero(nvars, c.backend());
        if !c.is_zero() {
            p.terms.insert(MultiIndex::zero(nvars), c);
        }
        p
    }

    pub fn one(nvars: usize, backend: Backend) -> Self {
        Poly::constant(Scalar::one(backend), nvars)
    }

    /// The coordinate polynomial `z_var`.
    pub fn var(var: usize, nvars: usize, backend: Backend) -> Self {
        assert!(var < nvars);
        let mut p = Poly::zero(nvars, backend);
        p.terms
            .insert(MultiIndex::unit(nvars, var), Scalar::one(backend));
        p
    }

    pub fn monomial(exps: &[u32], c: Scalar, nvars: usize) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Poly::zero(nvars, c.backend());
        if !c.is_zero() {
            p.terms.insert(MultiIndex(exps.to_vec()), c);
        }
        p
    }

    pub fn from_terms(
        nvars: usize,
        backend: Backend,
        terms: impl IntoIterator<Item = (MultiIndex, Scalar)>,
    ) -> Result<Self> {
        let mut p = Poly::zero(nvars, backend);
        for (e, c) in terms {
            if e.0.len() != nvars {
                return Err(Error::VarMismatch {
                    expected: nvars,
                    got: e.0.len(),
                });
            }
            if c.backend() != backend {
                return Err(Error::BackendMismatch);
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; -1 for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|e| e.total() as i64)
            .max()
            .unwrap_or(ZERO_DEGREE)
    }

    /// Total degree in the variables from `skip` on; -1 for zero.
    pub fn degree_from(&self, skip: usize) -> i64 {
        self.terms
            .keys()
            .map(|e| e.total_from(skip) as i64)
            .max()
            .unwrap_or(ZERO_DEGREE)
    }

    pub fn coeff(&self, e: &MultiIndex) -> Scalar {
        self.terms
            .get(e)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.backend))
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(&MultiIndex::zero(self.nvars))
    }

    fn add_term(&mut self, e: MultiIndex, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    fn check_compat(&self, other: &Poly) -> Result<()> {
        if self.backend != other.backend {
            return Err(Error::BackendMismatch);
        }
        if self.nvars != other.nvars {
            return Err(Error::VarMismatch {
                expected: self.nvars,
                got: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, k: &Scalar) -> Result<Poly> {
        if k.backend() != self.backend {
            return Err(Error::BackendMismatch);
        }
        if k.is_zero() {
            return Ok(Poly::zero(self.nvars, self.backend));
        }
        let mut out = Poly::zero(self.nvars, self.backend);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.mul(k));
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly> {
        self.check_compat(other)?;
        let mut out = Poly::zero(self.nvars, self.backend);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.add(eb), ca.mul(cb));
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Poly> {
        let mut acc = Poly::one(self.nvars, self.backend);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Substitutes `args[i]` for variable `i`. The arguments may live in a
    /// different variable count, as long as they agree among themselves.
    pub fn compose(&self, args: &[Poly]) -> Result<Poly> {
        if args.len() != self.nvars {
            return Err(Error::VarMismatch {
                expected: self.nvars,
                got: args.len(),
            });
        }
        if self.nvars == 0 {
            return Ok(self.clone());
        }
        let out_nvars = args[0].nvars();
        for a in args {
            if a.backend() != self.backend {
                return Err(Error::BackendMismatch);
            }
            if a.nvars() != out_nvars {
                return Err(Error::VarMismatch {
                    expected: out_nvars,
                    got: a.nvars(),
                });
            }
        }
        // Cache powers of each argument up to the maximal exponent used.
        let mut max_exp = vec![0u32; self.nvars];
        for e in self.terms.keys() {
            for (i, &x) in e.0.iter().enumerate() {
                max_exp[i] = max_exp[i].max(x);
            }
        }
        let mut powers: Vec<Vec<Poly>> = Vec::with_capacity(self.nvars);
        for (i, a) in args.iter().enumerate() {
            let mut ps = vec![Poly::one(out_nvars, self.backend)];
            for k in 1..=max_exp[i] {
                let next = ps[(k - 1) as usize].mul(a)?;
                ps.push(next);
            }
            powers.push(ps);
        }
        let mut out = Poly::zero(out_nvars, self.backend);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(c.clone(), out_nvars);
            for (i, &x) in e.0.iter().enumerate() {
                if x > 0 {
                    t = t.mul(&powers[i][x as usize])?;
                }
            }
            out = out.add(&t)?;
        }
        Ok(out)
    }

    /// Composition that truncates every intermediate product to degree <= `k`
    /// in the variables from `skip` on. The degree-<= k part of the result is
    /// exact whenever the arguments are exact through degree k.
    pub fn compose_truncated(&self, args: &[Poly], skip: usize, k: i64) -> Result<Poly> {
        if args.len() != self.nvars {
            return Err(Error::VarMismatch {
                expected: self.nvars,
                got: args.len(),
            });
        }
        if self.nvars == 0 {
            return Ok(self.clone());
        }
        let out_nvars = args[0].nvars();
        let mut max_exp = vec![0u32; self.nvars];
        for e in self.terms.keys() {
            for (i, &x) in e.0.iter().enumerate() {
                max_exp[i] = max_exp[i].max(x);
            }
        }
        let mut powers: Vec<Vec<Poly>> = Vec::with_capacity(self.nvars);
        for (i, a) in args.iter().enumerate() {
            let mut ps = vec![Poly::one(out_nvars, self.backend)];
            for p in 1..=max_exp[i] {
                let next = ps[(p - 1) as usize].mul(a)?.truncate_from(skip, k);
                ps.push(next);
            }
            powers.push(ps);
        }
        let mut out = Poly::zero(out_nvars, self.backend);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(c.clone(), out_nvars);
            for (i, &x) in e.0.iter().enumerate() {
                if x > 0 {
                    t = t.mul(&powers[i][x as usize])?.truncate_from(skip, k);
                }
            }
            out = out.add(&t)?;
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[Scalar]) -> Result<Scalar> {
        if point.len() != self.nvars {
            return Err(Error::VarMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        for p in point {
            if p.backend() != self.backend {
                return Err(Error::BackendMismatch);
            }
        }
        let mut acc = Scalar::zero(self.backend);
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &x) in e.0.iter().enumerate() {
                if x > 0 {
                    t = t.mul(&point[i].powi(x));
                }
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// Partial derivative with respect to variable `var`.
    pub fn partial(&self, var: usize) -> Poly {
        assert!(var < self.nvars);
        let mut out = Poly::zero(self.nvars, self.backend);
        for (e, c) in &self.terms {
            let x = e.0[var];
            if x > 0 {
                let mut f = e.clone();
                f.0[var] -= 1;
                out.add_term(f, c.mul(&Scalar::from_integer(x as i64, self.backend)));
            }
        }
        out
    }

    /// Keeps the terms whose degree in the variables from `skip` on is <= `k`.
    pub fn truncate_from(&self, skip: usize, k: i64) -> Poly {
        let mut out = Poly::zero(self.nvars, self.backend);
        for (e, c) in &self.terms {
            if (e.total_from(skip) as i64) <= k {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn truncate(&self, k: i64) -> Poly {
        self.truncate_from(0, k)
    }

    /// The part of the polynomial homogeneous of degree `d` in the variables
    /// from `skip` on.
    pub fn homogeneous_part_from(&self, skip: usize, d: u32) -> Poly {
        let mut out = Poly::zero(self.nvars, self.backend);
        for (e, c) in &self.terms {
            if e.total_from(skip) == d {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn homogeneous_part(&self, d: u32) -> Poly {
        self.homogeneous_part_from(0, d)
    }

    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.terms.keys().all(|e| e.total() == d)
    }

    /// Scalar value of a constant polynomial; errors otherwise.
    pub fn as_constant(&self) -> Result<Scalar> {
        if self.degree() > 0 {
            return Err(Error::Invalid(format!("not a constant: {self}")));
        }
        Ok(self.constant_term())
    }

    /// Re-embeds into a polynomial ring with more variables, sending variable
    /// `i` to variable `i + offset`.
    pub fn embed(&self, nvars: usize, offset: usize) -> Poly {
        assert!(self.nvars + offset <= nvars);
        let mut out = Poly::zero(nvars, self.backend);
        for (e, c) in &self.terms {
            let mut f = vec![0u32; nvars];
            f[offset..offset + self.nvars].copy_from_slice(&e.0);
            out.terms.insert(MultiIndex(f), c.clone());
        }
        out
    }

    /// Largest coefficient modulus (0 for the zero polynomial).
    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Poly, tol: f64) -> bool {
        if self.nvars != other.nvars || self.backend != other.backend {
            return false;
        }
        match self.sub(other) {
            Ok(d) => d.coeff_norm() <= tol,
            Err(_) => false,
        }
    }

    pub fn to_approx(&self) -> Poly {
        let mut out = Poly::zero(self.nvars, Backend::Approx);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.to_approx());
        }
        out
    }

    /// Applies a map to every coefficient, dropping zeros.
    pub fn map_coeffs(&self, f: impl Fn(&Scalar) -> Scalar) -> Poly {
        let mut out = Poly::zero(self.nvars, self.backend);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Leading term in graded-lex order, if any.
    pub fn leading(&self) -> Option<(&MultiIndex, &Scalar)> {
        self.terms.iter().next_back()
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, &x) in e.0.iter().enumerate() {
                if x == 1 {
                    write!(f, "*z{}", i + 1)?;
                } else if x > 1 {
                    write!(f, "*z{}^{}", i + 1, x)?;
                }
            }
        }
        Ok(())
    }
}
