//! Dense matrices of scalars and the small amount of linear algebra the
//! library needs: Gaussian inversion, determinants, transvection
//! factorization of invertible matrices, and symplectic basis completion.

use num::rational::BigRational;
use num::traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Backend, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    backend: Backend,
    data: Vec<Scalar>, // row-major
}

impl Matrix {
    pub fn identity(n: usize, backend: Backend) -> Self {
        let mut m = Matrix::zero(n, backend);
        for i in 0..n {
            *m.at_mut(i, i) = Scalar::one(backend);
        }
        m
    }

    pub fn zero(n: usize, backend: Backend) -> Self {
        Matrix {
            n,
            backend,
            data: vec![Scalar::zero(backend); n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("empty matrix".into()));
        }
        let backend = rows[0][0].backend();
        let mut data = Vec::with_capacity(n * n);
        for r in &rows {
            if r.len() != n {
                return Err(Error::Invalid("matrix is not square".into()));
            }
            for c in r {
                if c.backend() != backend {
                    return Err(Error::BackendMismatch);
                }
                data.push(c.clone());
            }
        }
        Ok(Matrix { n, backend, data })
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn at(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.n + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Scalar {
        &mut self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> Vec<Scalar> {
        (0..self.n).map(|j| self.at(i, j).clone()).collect()
    }

    pub fn rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let mut out = Matrix::zero(self.n, self.backend);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut acc = Scalar::zero(self.backend);
                for k in 0..self.n {
                    acc = acc.add(&self.at(i, k).mul(other.at(k, j)));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = Scalar::zero(self.backend);
                for j in 0..self.n {
                    acc = acc.add(&self.at(i, j).mul(&v[j]));
                }
                acc
            })
            .collect()
    }

    /// Applies the transpose to a covector (row vector): `out = v * M`.
    pub fn apply_left(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|j| {
                let mut acc = Scalar::zero(self.backend);
                for i in 0..self.n {
                    acc = acc.add(&v[i].mul(self.at(i, j)));
                }
                acc
            })
            .collect()
    }

    pub fn det(&self) -> Scalar {
        // Fraction-free enough for our sizes: plain elimination with exact
        // division on the exact backend, partial pivoting on the approximate.
        let mut m = self.clone();
        let mut det = Scalar::one(self.backend);
        for col in 0..self.n {
            let pivot_row = match self.backend {
                Backend::Exact => (col..self.n).find(|&r| !m.at(r, col).is_zero()),
                Backend::Approx => {
                    (col..self.n)
                        .filter(|&r| !m.at(r, col).is_zero())
                        .max_by(|&a, &b| {
                            m.at(a, col)
                                .norm()
                                .partial_cmp(&m.at(b, col).norm())
                                .unwrap()
                        })
                }
            };
            let Some(p) = pivot_row else {
                return Scalar::zero(self.backend);
            };
            if p != col {
                for j in 0..self.n {
                    let tmp = m.at(p, j).clone();
                    *m.at_mut(p, j) = m.at(col, j).clone();
                    *m.at_mut(col, j) = tmp;
                }
                det = det.neg();
            }
            let piv = m.at(col, col).clone();
            det = det.mul(&piv);
            for r in col + 1..self.n {
                let f = m.at(r, col).div(&piv).unwrap();
                for j in col..self.n {
                    let v = m.at(r, j).sub(&f.mul(m.at(col, j)));
                    *m.at_mut(r, j) = v;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let n = self.n;
        let mut m = self.clone();
        let mut inv = Matrix::identity(n, self.backend);
        for col in 0..n {
            let pivot_row = match self.backend {
                Backend::Exact => (col..n).find(|&r| !m.at(r, col).is_zero()),
                Backend::Approx => {
                    (col..n)
                        .filter(|&r| m.at(r, col).norm() > 0.0)
                        .max_by(|&a, &b| {
                            m.at(a, col)
                                .norm()
                                .partial_cmp(&m.at(b, col).norm())
                                .unwrap()
                        })
                }
            };
            let Some(p) = pivot_row else {
                return Err(Error::SingularLinearPart);
            };
            if p != col {
                for j in 0..n {
                    m.data.swap(p * n + j, col * n + j);
                    inv.data.swap(p * n + j, col * n + j);
                }
            }
            let piv = m.at(col, col).clone();
            let piv_inv = piv.inv()?;
            for j in 0..n {
                let v = m.at(col, j).mul(&piv_inv);
                *m.at_mut(col, j) = v;
                let w = inv.at(col, j).mul(&piv_inv);
                *inv.at_mut(col, j) = w;
            }
            for r in 0..n {
                if r == col || m.at(r, col).is_zero() {
                    continue;
                }
                let f = m.at(r, col).clone();
                for j in 0..n {
                    let v = m.at(r, j).sub(&f.mul(m.at(col, j)));
                    *m.at_mut(r, j) = v;
                    let w = inv.at(r, j).sub(&f.mul(inv.at(col, j)));
                    *inv.at_mut(r, j) = w;
                }
            }
        }
        Ok(inv)
    }

    pub fn is_identity(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                let want = i == j;
                let c = self.at(i, j);
                if want && !c.is_one() {
                    return false;
                }
                if !want && !c.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    pub fn approx_eq(&self, other: &Matrix, tol: f64) -> bool {
        self.n == other.n
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    pub fn to_approx(&self) -> Matrix {
        Matrix {
            n: self.n,
            backend: Backend::Approx,
            data: self.data.iter().map(|c| c.to_approx()).collect(),
        }
    }

    /// M^T J M = J for the standard symplectic form (pairs (2j, 2j+1)).
    pub fn is_symplectic(&self, tol: f64) -> bool {
        if self.n % 2 != 0 {
            return false;
        }
        let j = symplectic_form_matrix(self.n, self.backend);
        let t = self.transpose().mul(&j).mul(self);
        t.approx_eq(&j, tol)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zero(self.n, self.backend);
        for i in 0..self.n {
            for j in 0..self.n {
                *out.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        out
    }
}

/// The matrix of the standard symplectic form: omega(u, v) = u^T J v.
pub fn symplectic_form_matrix(n: usize, backend: Backend) -> Matrix {
    assert!(n % 2 == 0);
    let mut j = Matrix::zero(n, backend);
    for k in 0..n / 2 {
        *j.at_mut(2 * k, 2 * k + 1) = Scalar::one(backend);
        *j.at_mut(2 * k + 1, 2 * k) = Scalar::one(backend).neg();
    }
    j
}

/// omega(u, v) for the standard symplectic form.
pub fn symplectic_pairing(u: &[Scalar], v: &[Scalar]) -> Scalar {
    let n = u.len();
    assert!(n % 2 == 0 && v.len() == n);
    let backend = u[0].backend();
    let mut acc = Scalar::zero(backend);
    for k in 0..n / 2 {
        acc = acc.add(&u[2 * k].mul(&v[2 * k + 1]));
        acc = acc.sub(&u[2 * k + 1].mul(&v[2 * k]));
    }
    acc
}

/// One multiplicative step of a transvection chain: either `I + c E_{ij}` or
/// the dilation `diag(.., u at position i, ..)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementaryFactor {
    Transvection { i: usize, j: usize, c: Scalar },
    Dilation { i: usize, u: Scalar },
}

impl ElementaryFactor {
    pub fn matrix(&self, n: usize, backend: Backend) -> Matrix {
        let mut m = Matrix::identity(n, backend);
        match self {
            ElementaryFactor::Transvection { i, j, c } => {
                *m.at_mut(*i, *j) = c.clone();
            }
            ElementaryFactor::Dilation { i, u } => {
                *m.at_mut(*i, *i) = u.clone();
            }
        }
        m
    }
}

/// Factors an invertible matrix as a product `M = F_1 F_2 ... F_k` of
/// transvections followed (at most) by one dilation placed in coordinate 0.
/// Transvections alone suffice exactly when det M = 1.
pub fn transvection_factorization(m: &Matrix) -> Result<Vec<ElementaryFactor>> {
    let n = m.n;
    let backend = m.backend();
    let mut a = m.clone();
    // Scale-relative zero threshold: on the approximate backend, entries at
    // the rounding floor of the matrix scale are treated as structural zeros
    // so they never become pivots.
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| m.at(i, j).norm())
        .fold(0.0f64, f64::max);
    let floor = match backend {
        Backend::Exact => 0.0,
        Backend::Approx => 1e-13 * (1.0 + scale),
    };
    let negligible = |s: &Scalar| match backend {
        Backend::Exact => s.is_zero(),
        Backend::Approx => s.norm() <= floor,
    };
    // Row-reduce to a diagonal using only "add multiple of row j to row i",
    // collecting the inverse operations. a = (ops...) * diag.
    let mut left_inv_ops: Vec<ElementaryFactor> = Vec::new();
    let apply_row_op = |a: &mut Matrix, i: usize, j: usize, c: &Scalar| {
        // row_i += c * row_j
        for col in 0..n {
            let v = a.at(i, col).add(&c.mul(a.at(j, col)));
            *a.at_mut(i, col) = v;
        }
    };
    for col in 0..n {
        // Pivot fixup: donate the strongest row when the diagonal entry is
        // negligible or much smaller than the column.
        let donor = (0..n).filter(|&r| r != col).max_by(|&p, &q| {
            a.at(p, col)
                .norm()
                .partial_cmp(&a.at(q, col).norm())
                .unwrap()
        });
        let colmax = donor.map(|r| a.at(r, col).norm()).unwrap_or(0.0);
        let piv_norm = a.at(col, col).norm();
        let needs_fixup = if negligible(a.at(col, col)) {
            true
        } else {
            backend == Backend::Approx && piv_norm < 0.1 * colmax
        };
        if needs_fixup {
            let Some(r) = donor.filter(|&r| !negligible(a.at(r, col))) else {
                if negligible(a.at(col, col)) {
                    return Err(Error::SingularLinearPart);
                } else {
                    // Column is essentially diagonal already.
                    continue_elimination(
                        &mut a,
                        col,
                        n,
                        &mut left_inv_ops,
                        &negligible,
                        &apply_row_op,
                    )?;
                    continue;
                }
            };
            let one = Scalar::one(backend);
            apply_row_op(&mut a, col, r, &one);
            left_inv_ops.push(ElementaryFactor::Transvection {
                i: col,
                j: r,
                c: one.neg(),
            });
        }
        continue_elimination(
            &mut a,
            col,
            n,
            &mut left_inv_ops,
            &negligible,
            &apply_row_op,
        )?;
    }
    // The recorded inverses, in order, rebuild m from the diagonal:
    // m = left_inv_ops * diag.
    let mut factors = left_inv_ops;
    // Reduce diag(d_0,...,d_{n-1}) to diag(prod, 1, ..., 1): for the pair
    // (i-1, i), diag(x, y) = diag(xy, 1) * block(1/y, y), and
    // block(u, 1/u) = E_{i-1,i}(1) E_{i,i-1}(u-1) E_{i-1,i}(-1/u) E_{i,i-1}(u(1-u)).
    // Successive blocks multiply on the inside, so groups are appended in
    // reverse iteration order.
    let mut diag: Vec<Scalar> = (0..n).map(|i| a.at(i, i).clone()).collect();
    let mut block_groups: Vec<Vec<ElementaryFactor>> = Vec::new();
    for i in (1..n).rev() {
        let y = diag[i].clone();
        if y.is_one() {
            continue;
        }
        let x = diag[i - 1].clone();
        diag[i - 1] = x.mul(&y);
        diag[i] = Scalar::one(backend);
        let one = Scalar::one(backend);
        let u = y.inv()?;
        let group = vec![
            ElementaryFactor::Transvection {
                i: i - 1,
                j: i,
                c: one.clone(),
            },
            ElementaryFactor::Transvection {
                i,
                j: i - 1,
                c: u.sub(&one),
            },
            ElementaryFactor::Transvection {
                i: i - 1,
                j: i,
                c: u.inv()?.neg(),
            },
            ElementaryFactor::Transvection {
                i,
                j: i - 1,
                c: u.mul(&one.sub(&u)),
            },
        ];
        block_groups.push(group);
    }
    let det = diag[0].clone();
    for d in diag.iter().skip(1) {
        debug_assert!(d.is_one());
    }
    if !det.is_one() {
        factors.push(ElementaryFactor::Dilation { i: 0, u: det });
    }
    for group in block_groups.into_iter().rev() {
        factors.extend(group);
    }
    Ok(factors)
}

fn continue_elimination(
    a: &mut Matrix,
    col: usize,
    n: usize,
    ops: &mut Vec<ElementaryFactor>,
    negligible: &impl Fn(&Scalar) -> bool,
    apply_row_op: &impl Fn(&mut Matrix, usize, usize, &Scalar),
) -> Result<()> {
    let piv = a.at(col, col).clone();
    for r in 0..n {
        if r == col || negligible(a.at(r, col)) {
            continue;
        }
        let c = a.at(r, col).div(&piv)?.neg();
        apply_row_op(a, r, col, &c);
        ops.push(ElementaryFactor::Transvection {
            i: r,
            j: col,
            c: c.neg(),
        });
    }
    Ok(())
}

/// Builds a symplectic matrix `L` (L^T J L = J) with `L v = e_{n-1}`, the
/// last vector of the standard basis (0-indexed), for the standard form with
/// pairs (2j, 2j+1). Requires nonzero `v` and even `n`.
pub fn symplectic_completion(v: &[Scalar]) -> Result<Matrix> {
    let n = v.len();
    if n % 2 != 0 {
        return Err(Error::Unsupported(
            "symplectic completion needs even dimension".into(),
        ));
    }
    let backend = v[0].backend();
    if v.iter().all(|c| c.is_zero()) {
        return Err(Error::Invalid("zero vector".into()));
    }
    // Build a symplectic basis (a_1, b_1, ..., a_m, b_m) with b_m = v, then
    // L^{-1} has those vectors as columns (in standard pair order) and maps
    // e_{n-1} to v.
    let m = n / 2;
    let mut basis: Vec<Vec<Scalar>> = Vec::with_capacity(n);
    let mut pairs: Vec<(Vec<Scalar>, Vec<Scalar>)> = Vec::new();
    // Candidate pool: v last so the first pair is (u, v).
    let mut pool: Vec<Vec<Scalar>> = Vec::new();
    for i in 0..n {
        let mut e = vec![Scalar::zero(backend); n];
        e[i] = Scalar::one(backend);
        pool.push(e);
    }
    // First pair: find u with omega(u, v) != 0.
    let vv = v.to_vec();
    let u0 = pool
        .iter()
        .find(|u| !symplectic_pairing(u, &vv).is_zero())
        .cloned()
        .ok_or(Error::SingularLinearPart)?;
    let c = symplectic_pairing(&u0, &vv).inv()?;
    let a_last: Vec<Scalar> = u0.iter().map(|x| x.mul(&c)).collect();
    pairs.push((a_last, vv));
    // Remaining pairs from projected pool vectors.
    while pairs.len() < m {
        // Project the pool into the symplectic complement of the pairs found.
        let project = |w: &[Scalar], pairs: &[(Vec<Scalar>, Vec<Scalar>)]| -> Vec<Scalar> {
            let mut out = w.to_vec();
            for (a, b) in pairs {
                let ca = symplectic_pairing(&out, b); // coefficient along a
                let cb = symplectic_pairing(a, &out); // coefficient along b
                for i in 0..out.len() {
                    out[i] = out[i].sub(&ca.mul(&a[i])).sub(&cb.mul(&b[i]));
                }
            }
            out
        };
        let mut next_b: Option<Vec<Scalar>> = None;
        for w in &pool {
            let p = project(w, &pairs);
            if p.iter().any(|c| !c.is_zero()) {
                next_b = Some(p);
                break;
            }
        }
        let b = next_b.ok_or(Error::SingularLinearPart)?;
        let mut next_a: Option<Vec<Scalar>> = None;
        for w in &pool {
            let p = project(w, &pairs);
            let pairing = symplectic_pairing(&p, &b);
            if !pairing.is_zero() {
                let c = pairing.inv()?;
                next_a = Some(p.iter().map(|x| x.mul(&c)).collect());
                break;
            }
        }
        let a = next_a.ok_or(Error::SingularLinearPart)?;
        pairs.push((a, b));
    }
    // Order pairs so v's pair sits last: pairs[0] holds v, move it to the end.
    let first = pairs.remove(0);
    pairs.push(first);
    for (a, b) in pairs {
        basis.push(a);
        basis.push(b);
    }
    // L^{-1} columns are the basis vectors.
    let mut linv = Matrix::zero(n, backend);
    for (j, col) in basis.iter().enumerate() {
        for i in 0..n {
            *linv.at_mut(i, j) = col[i].clone();
        }
    }
    linv.inverse()
}

/// Reduces a vector against a row-echelon basis of BigRational-pair rows,
/// used by the exact rank bookkeeping in the decomposition solver.
pub(crate) struct ExactEchelon {
    // Each row: (pivot column, coefficients as Gaussian rationals).
    rows: Vec<(usize, Vec<(BigRational, BigRational)>)>,
    width: usize,
}

impl ExactEchelon {
    pub fn new(width: usize) -> Self {
        ExactEchelon {
            rows: Vec::new(),
            width,
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &mut [(BigRational, BigRational)]) {
        for (piv, row) in &self.rows {
            let (re, im) = v[*piv].clone();
            if re.is_zero() && im.is_zero() {
                continue;
            }
            // v -= v[piv] * row  (complex multiply)
            for k in 0..self.width {
                let (rre, rim) = &row[k];
                let prod_re = &re * rre - &im * rim;
                let prod_im = &re * rim + &im * rre;
                v[k].0 = &v[k].0 - prod_re;
                v[k].1 = &v[k].1 - prod_im;
            }
        }
    }

    /// Tries to insert; returns true if the vector increased the rank.
    pub fn insert(&mut self, mut v: Vec<(BigRational, BigRational)>) -> bool {
        self.reduce(&mut v);
        let piv = v.iter().position(|(re, im)| !re.is_zero() || !im.is_zero());
        let Some(piv) = piv else {
            return false;
        };
        // Normalize the pivot to 1.
        let (pre, pim) = v[piv].clone();
        let norm = &pre * &pre + &pim * &pim;
        let inv_re = &pre / &norm;
        let inv_im = -&pim / &norm;
        for k in 0..self.width {
            let (re, im) = v[k].clone();
            v[k].0 = &re * &inv_re - &im * &inv_im;
            v[k].1 = &re * &inv_im + &im * &inv_re;
        }
        self.rows.push((piv, v));
        true
    }
}
