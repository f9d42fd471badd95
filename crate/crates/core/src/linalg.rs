//! Small dense linear algebra: matrices, LU/Cholesky, symmetric and
//! nonsymmetric eigenvalue solvers. Sized for systems of a few hundred DOFs.

#![allow(clippy::needless_range_loop)]

use std::ops::{Index, IndexMut};

use crate::error::{IgaError, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_slice(rows: usize, cols: usize, values: &[T]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(IgaError::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            data: values.to_vec(),
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(IgaError::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != rhs.rows {
            return Err(IgaError::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = rhs.row(k);
                let dst = out.row_mut(i);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if self.cols != x.len() {
            return Err(IgaError::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix<T>) -> Result<Matrix<T>> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Matrix<T>, f: impl Fn(T, T) -> T) -> Result<Matrix<T>> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(IgaError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: rhs.rows * rhs.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// True when `|a_ij - a_ji| <= rel_tol * max|a|` for all entries.
    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = rel_tol * self.max_abs();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Extracts the submatrix with the given row and column indices.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows)
            .map(|i| self.row(i).iter().copied().sum())
            .collect()
    }

    /// Sets entries with `|a_ij| < tol` to exactly zero.
    pub fn prune(&mut self, tol: T) {
        for v in &mut self.data {
            if v.abs() < tol {
                *v = T::zero();
            }
        }
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&v| U::lit(v.to_f64_lossy()))
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Diagonal matrix stored as its diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMatrix<T> {
    diag: Vec<T>,
}

impl<T: Scalar> DiagonalMatrix<T> {
    pub fn new(diag: Vec<T>) -> Self {
        Self { diag }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn values(&self) -> &[T] {
        &self.diag
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.diag.len() {
            return Err(IgaError::DimensionMismatch {
                expected: self.diag.len(),
                found: x.len(),
            });
        }
        Ok(self.diag.iter().zip(x).map(|(&d, &v)| d * v).collect())
    }

    pub fn to_dense(&self) -> Matrix<T> {
        Matrix::from_diagonal(&self.diag)
    }
}

/// Mass operator: either a full matrix or a lumped diagonal.
#[derive(Clone, Debug, PartialEq)]
pub enum MassMatrix<T> {
    Full(Matrix<T>),
    Diagonal(DiagonalMatrix<T>),
}

impl<T: Scalar> MassMatrix<T> {
    pub fn dim(&self) -> usize {
        match self {
            MassMatrix::Full(m) => m.rows(),
            MassMatrix::Diagonal(d) => d.dim(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, MassMatrix::Diagonal(_))
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        match self {
            MassMatrix::Full(m) => m.matvec(x),
            MassMatrix::Diagonal(d) => d.matvec(x),
        }
    }

    pub fn to_dense(&self) -> Matrix<T> {
        match self {
            MassMatrix::Full(m) => m.clone(),
            MassMatrix::Diagonal(d) => d.to_dense(),
        }
    }

    /// Sum of all entries (total mass for partition-of-unity bases).
    pub fn total(&self) -> T {
        match self {
            MassMatrix::Full(m) => m.as_slice().iter().copied().sum(),
            MassMatrix::Diagonal(d) => d.values().iter().copied().sum(),
        }
    }

    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        match self {
            MassMatrix::Full(m) => m.is_symmetric(rel_tol),
            MassMatrix::Diagonal(_) => true,
        }
    }
}

/// Solver for `M x = b`, factored once.
#[derive(Clone, Debug)]
pub enum MassSolver<T> {
    Diagonal(Vec<T>),
    Lu(Lu<T>),
}

impl<T: Scalar> MassSolver<T> {
    pub fn new(m: &MassMatrix<T>) -> Result<Self> {
        match m {
            MassMatrix::Diagonal(d) => {
                let mut inv = Vec::with_capacity(d.dim());
                for (i, &v) in d.values().iter().enumerate() {
                    if v == T::zero() || !v.is_finite() {
                        return Err(IgaError::Singular { column: i });
                    }
                    inv.push(T::one() / v);
                }
                Ok(MassSolver::Diagonal(inv))
            }
            MassMatrix::Full(m) => Ok(MassSolver::Lu(Lu::factor(m)?)),
        }
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        match self {
            MassSolver::Diagonal(inv) => {
                if b.len() != inv.len() {
                    return Err(IgaError::DimensionMismatch {
                        expected: inv.len(),
                        found: b.len(),
                    });
                }
                Ok(inv.iter().zip(b).map(|(&d, &v)| d * v).collect())
            }
            MassSolver::Lu(lu) => lu.solve(b),
        }
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(IgaError::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        let tiny = scale * T::epsilon() * T::of_usize(n.max(1));
        for k in 0..n {
            let mut piv = k;
            let mut best = lu[(k, k)].abs();
            for i in (k + 1)..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best <= tiny || !best.is_finite() {
                return Err(IgaError::Singular { column: k });
            }
            if piv != k {
                perm.swap(piv, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = t;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in (k + 1)..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if b.len() != n {
            return Err(IgaError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve(&b.column(j))?;
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    Lu::factor(a)?.solve(b)
}

pub fn invert<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    Lu::factor(a)?.solve_matrix(&Matrix::identity(a.rows()))
}

/// Cholesky factor `A = L L^T` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(IgaError::DimensionMismatch {
                expected: a.rows(),
                found: a.cols(),
            });
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= T::zero() || !d.is_finite() {
                return Err(IgaError::NotPositiveDefinite {
                    row: j,
                    pivot: d.to_f64_lossy(),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn lower(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn forward(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `L^T x = y`.
    pub fn backward(&self, y: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.backward(&self.forward(b))
    }
}

/// Eigenvalues (ascending) and matching eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

const JACOBI_MAX_SWEEPS: usize = 50;

/// Cyclic Jacobi eigensolver for a symmetric matrix.
pub fn sym_eig<T: Scalar>(a: &Matrix<T>) -> Result<EigenDecomposition<T>> {
    if !a.is_square() {
        return Err(IgaError::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    let mut a = a.clone();
    // symmetrize to remove assembly round-off
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (a[(i, j)] + a[(j, i)]) * T::lit(0.5);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = Matrix::identity(n);
    let rel = T::lit(1e-12).max(T::epsilon() * T::lit(4.0));
    let thresh = rel * a.frobenius_norm();
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if (off + off).sqrt() <= thresh {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = T::zero();
                a[(q, p)] = T::zero();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if (off + off).sqrt() > thresh {
            return Err(IgaError::NoConvergence(format!(
                "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .partial_cmp(&a[(j, j)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition { values, vectors })
}

/// Solves `K x = lambda M x` for symmetric `K` and SPD `M`.
/// Eigenvectors are M-orthonormal.
pub fn sym_generalized_eig<T: Scalar>(
    k: &Matrix<T>,
    m: &MassMatrix<T>,
) -> Result<EigenDecomposition<T>> {
    let n = k.rows();
    if m.dim() != n || !k.is_square() {
        return Err(IgaError::DimensionMismatch {
            expected: n,
            found: m.dim(),
        });
    }
    match m {
        MassMatrix::Diagonal(d) => {
            let mut s = Vec::with_capacity(n);
            for (i, &v) in d.values().iter().enumerate() {
                if v <= T::zero() {
                    return Err(IgaError::NotPositiveDefinite {
                        row: i,
                        pivot: v.to_f64_lossy(),
                    });
                }
                s.push(T::one() / v.sqrt());
            }
            let c = Matrix::from_fn(n, n, |i, j| s[i] * k[(i, j)] * s[j]);
            let e = sym_eig(&c)?;
            let vectors = Matrix::from_fn(n, n, |i, j| s[i] * e.vectors[(i, j)]);
            Ok(EigenDecomposition {
                values: e.values,
                vectors,
            })
        }
        MassMatrix::Full(mf) => {
            let ch = Cholesky::factor(mf)?;
            // C = L^-1 K L^-T
            let mut tmp = Matrix::zeros(n, n);
            for j in 0..n {
                let y = ch.forward(&k.column(j));
                for i in 0..n {
                    tmp[(i, j)] = y[i];
                }
            }
            let mut c = Matrix::zeros(n, n);
            for i in 0..n {
                let y = ch.forward(tmp.row(i));
                for j in 0..n {
                    c[(i, j)] = y[j];
                }
            }
            let e = sym_eig(&c)?;
            let mut vectors = Matrix::zeros(n, n);
            for j in 0..n {
                let x = ch.backward(&e.vectors.column(j));
                for i in 0..n {
                    vectors[(i, j)] = x[i];
                }
            }
            Ok(EigenDecomposition {
                values: e.values,
                vectors,
            })
        }
    }
}

/// Singular values (descending) by one-sided Jacobi.
pub fn singular_values<T: Scalar>(a: &Matrix<T>) -> Result<Vec<T>> {
    let (m, n) = (a.rows(), a.cols());
    // work on columns of a (or a^T if wide)
    let mut cols: Vec<Vec<T>> = if m >= n {
        (0..n).map(|j| a.column(j)).collect()
    } else {
        (0..m).map(|i| a.row(i).to_vec()).collect()
    };
    let tol = T::epsilon() * T::lit(10.0);
    let k = cols.len();
    let mut converged = false;
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let t = if zeta == T::zero() { T::one() } else { t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let cp = &mut left[p];
                let cq = &mut right[0];
                for i in 0..cp.len() {
                    let x = cp[i];
                    let y = cq[i];
                    cp[i] = c * x - s * y;
                    cq[i] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(IgaError::NoConvergence("one-sided Jacobi SVD".into()));
    }
    let mut sv: Vec<T> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    Ok(sv)
}

/// Spectral condition number `sigma_max / sigma_min` (infinite when singular).
pub fn condition_number_2<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(IgaError::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let sv = singular_values(a)?;
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(T::infinity()),
        _ => Ok(T::one()),
    }
}

/// Largest `|i - j|` with `|a_ij| > tol`.
pub fn bandwidth<T: Scalar>(a: &Matrix<T>, tol: T) -> usize {
    let mut bw = 0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if a[(i, j)].abs() > tol {
                bw = bw.max(i.abs_diff(j));
            }
        }
    }
    bw
}

/// A possibly complex eigenvalue of a real matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexEigenvalue<T> {
    pub re: T,
    pub im: T,
}

/// All eigenvalues of a general real matrix (balancing, Hessenberg reduction
/// and Francis double-shift QR).
pub fn eigenvalues_general<T: Scalar>(a: &Matrix<T>) -> Result<Vec<ComplexEigenvalue<T>>> {
    if !a.is_square() {
        return Err(IgaError::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based working copy
    let mut w = vec![vec![T::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            w[i + 1][j + 1] = a[(i, j)];
        }
    }
    balance(&mut w, n);
    hessenberg(&mut w, n);
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            w[i][j] = T::zero();
        }
    }
    let (wr, wi) = hqr(&mut w, n)?;
    Ok((1..=n)
        .map(|i| ComplexEigenvalue {
            re: wr[i],
            im: wi[i],
        })
        .collect())
}

fn balance<T: Scalar>(a: &mut [Vec<T>], n: usize) {
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let g = T::one() / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg<T: Scalar>(a: &mut [Vec<T>], n: usize) {
    if n < 3 {
        return;
    }
    for m in 2..n {
        let mut x = T::zero();
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut().take(n + 1).skip(1) {
                row.swap(i, m);
            }
        }
        if x != T::zero() {
            for i in (m + 1)..=n {
                let mut y = a[i][m - 1];
                if y != T::zero() {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        let v = a[m][j];
                        a[i][j] -= y * v;
                    }
                    for row in a.iter_mut().take(n + 1).skip(1) {
                        let v = row[i];
                        row[m] += y * v;
                    }
                }
            }
        }
    }
}

fn sign<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr<T: Scalar>(a: &mut [Vec<T>], n: usize) -> Result<(Vec<T>, Vec<T>)> {
    let mut wr = vec![T::zero(); n + 1];
    let mut wi = vec![T::zero(); n + 1];
    let mut anorm = T::zero();
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n as isize;
    let mut t = T::zero();
    let half = T::lit(0.5);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = T::zero();
                nn -= 1;
            } else {
                let mut y = a[nu - 1][nu - 1];
                let mut w = a[nu][nu - 1] * a[nu - 1][nu];
                if l == nu - 1 {
                    let p = half * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= T::zero() {
                        z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != T::zero() {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = T::zero();
                        wi[nu] = T::zero();
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu] = z;
                        wi[nu - 1] = -z;
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(IgaError::NoConvergence("Hessenberg QR iteration".into()));
                    }
                    if its == 10 || its == 20 || its == 40 {
                        t += x;
                        for i in 1..=nu {
                            a[i][i] -= x;
                        }
                        let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                        x = T::lit(0.75) * s;
                        y = x;
                        w = T::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut m = nu - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = a[m][m];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nu {
                        a[i][i - 2] = T::zero();
                        if i != m + 2 {
                            a[i][i - 3] = T::zero();
                        }
                    }
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = T::zero();
                            if k != nu - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != T::zero() {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != T::zero() {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nu - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = if nu < k + 3 { nu } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if k != nu - 1 {
                                    p += z * a[i][k + 2];
                                    a[i][k + 2] -= p * r;
                                }
                                a[i][k + 1] -= p * q;
                                a[i][k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 1 || l as isize >= nn - 1 {
                break;
            }
        }
    }
    Ok((wr, wi))
}

/// Eigenvalues of a real matrix whose spectrum is known to be real, sorted
/// ascending. Fails if an eigenvalue has an imaginary part larger than
/// `imag_tol` times the spectral radius.
pub fn real_eigenvalues<T: Scalar>(a: &Matrix<T>, imag_tol: T) -> Result<Vec<T>> {
    let ev = eigenvalues_general(a)?;
    let radius = ev
        .iter()
        .fold(T::zero(), |m, e| m.max((e.re * e.re + e.im * e.im).sqrt()));
    for e in &ev {
        if e.im.abs() > imag_tol * radius {
            return Err(IgaError::NoConvergence(format!(
                "complex eigenvalue {} + {}i in a spectrum expected to be real",
                e.re, e.im
            )));
        }
    }
    let mut re: Vec<T> = ev.iter().map(|e| e.re).collect();
    re.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(re)
}

/// Right eigenvector of `a` for a (real) eigenvalue estimate by inverse
/// iteration. The result has unit Euclidean norm.
pub fn inverse_iteration<T: Scalar>(a: &Matrix<T>, lambda: T) -> Result<Vec<T>> {
    let n = a.rows();
    let scale = a.max_abs().max(lambda.abs()).max(T::min_positive_value());
    let mut shift = lambda + scale * T::epsilon() * T::lit(64.0);
    let mut lu = None;
    for _ in 0..8 {
        let shifted = Matrix::from_fn(
            n,
            n,
            |i, j| if i == j { a[(i, j)] - shift } else { a[(i, j)] },
        );
        match Lu::factor(&shifted) {
            Ok(f) => {
                lu = Some(f);
                break;
            }
            Err(_) => shift += scale * T::epsilon() * T::lit(1024.0),
        }
    }
    let lu = lu.ok_or(IgaError::Singular { column: 0 })?;
    let mut x: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.1) * T::of_usize(i % 7))
        .collect();
    for _ in 0..4 {
        let y = lu.solve(&x)?;
        let nrm = norm2(&y);
        if nrm == T::zero() || !nrm.is_finite() {
            return Err(IgaError::NoConvergence("inverse iteration".into()));
        }
        x = y.iter().map(|&v| v / nrm).collect();
    }
    Ok(x)
}
