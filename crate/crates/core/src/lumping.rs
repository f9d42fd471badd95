//! Row-sum lumping and mass distribution diagnostics.

use crate::error::{IgaError, Result};
use crate::linalg::{DiagonalMatrix, MassMatrix, Matrix};
use crate::scalar::Scalar;

/// `d_i = sum_j m_ij`. Fails on a non-positive row sum.
pub fn row_sum_lump<T: Scalar>(m: &Matrix<T>) -> Result<DiagonalMatrix<T>> {
    if !m.is_square() {
        return Err(IgaError::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let d = m.row_sums();
    if let Some((row, &value)) = d.iter().enumerate().find(|(_, &v)| !(v > T::zero())) {
        return Err(IgaError::NonPositiveLumpedMass {
            row,
            value: value.to_f64_lossy(),
        });
    }
    Ok(DiagonalMatrix::new(d))
}

/// Lumps a mass operator; an already diagonal one is returned unchanged.
pub fn lump<T: Scalar>(m: &MassMatrix<T>) -> Result<DiagonalMatrix<T>> {
    match m {
        MassMatrix::Full(full) => row_sum_lump(full),
        MassMatrix::Diagonal(d) => Ok(d.clone()),
    }
}

/// Row sums of `S M` on the unreduced system, kept on the `free` rows.
/// Lumping before the boundary reduction keeps the lumped rows next to a
/// Dirichlet end consistent with the interior ones.
pub fn lump_unreduced<T: Scalar>(
    m_full: &MassMatrix<T>,
    s_full: Option<&Matrix<T>>,
    free: &[usize],
) -> Result<DiagonalMatrix<T>> {
    let ones = vec![T::one(); m_full.dim()];
    let mut sums = m_full.matvec(&ones)?;
    if let Some(s) = s_full {
        sums = s.matvec(&sums)?;
    }
    let mut d = Vec::with_capacity(free.len());
    for &i in free {
        let value = *sums.get(i).ok_or(IgaError::DimensionMismatch {
            expected: sums.len(),
            found: i + 1,
        })?;
        if !(value > T::zero()) {
            return Err(IgaError::NonPositiveLumpedMass {
                row: d.len(),
                value: value.to_f64_lossy(),
            });
        }
        d.push(value);
    }
    Ok(DiagonalMatrix::new(d))
}

/// `sum_i m_ii / sum_ij m_ij`.
pub fn diagonal_mass_fraction<T: Scalar>(m: &Matrix<T>) -> Result<T> {
    if !m.is_square() {
        return Err(IgaError::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let total: T = m.as_slice().iter().copied().sum();
    if !(total > T::zero()) {
        return Err(IgaError::input("total mass must be positive"));
    }
    Ok(m.diagonal().into_iter().sum::<T>() / total)
}

/// True iff every off-diagonal `|m_ij| <= tol * max |m_ii|`.
pub fn is_diagonal<T: Scalar>(m: &Matrix<T>, tol: T) -> bool {
    if !m.is_square() {
        return false;
    }
    let dmax = m.diagonal().iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let bound = tol * dmax;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j && m[(i, j)].abs() > bound {
                return false;
            }
        }
    }
    true
}

/// Rows violating strict diagonal dominance `m_ii > sum_{j != i} |m_ij|`.
pub fn diagonal_dominance_violations<T: Scalar>(m: &Matrix<T>) -> Vec<usize> {
    (0..m.rows())
        .filter(|&i| {
            let off: T = (0..m.cols())
                .filter(|&j| j != i)
                .map(|j| m[(i, j)].abs())
                .sum();
            !(m[(i, i)] > off)
        })
        .collect()
}

pub fn is_diagonally_dominant<T: Scalar>(m: &Matrix<T>) -> bool {
    diagonal_dominance_violations(m).is_empty()
}

/// Largest off-diagonal and largest diagonal magnitude.
pub fn off_diagonal_ratio<T: Scalar>(m: &Matrix<T>) -> T {
    let mut off = T::zero();
    let mut diag = T::zero();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i == j {
                diag = diag.max(m[(i, j)].abs());
            } else {
                off = off.max(m[(i, j)].abs());
            }
        }
    }
    off / diag
}
