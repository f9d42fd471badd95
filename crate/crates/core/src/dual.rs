//! Transformation operators defining dual test functions `lambda = S N`:
//! the inverse Gram matrix and the approximate dual operator `S_q`, plus
//! their condensation for strongly enforced Dirichlet boundaries.

use crate::error::{IgaError, Result};
use crate::linalg::{invert, Lu, Matrix};
use crate::quadrature::gauss_rule;
use crate::scalar::{factorial, Scalar};
use crate::spline::{eval_bspline, eval_nurbs, KnotVector, SplineSpace};

/// Which construction produced a transformation operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    /// `S = G^-1`, exactly bi-orthogonal, global support.
    InverseGram,
    /// `S_q`, local support, reproduces polynomials up to degree `q`.
    Approximate { q: usize },
    /// User-supplied matrix.
    Custom,
}

/// The matrix `S` (or its condensed form) with bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformOperator<T> {
    kind: TransformKind,
    matrix: Matrix<T>,
    full_dim: usize,
    fixed: Vec<usize>,
    condensed: bool,
}

impl<T: Scalar> TransformOperator<T> {
    pub fn custom(matrix: Matrix<T>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(IgaError::DimensionMismatch {
                expected: matrix.rows(),
                found: matrix.cols(),
            });
        }
        let n = matrix.rows();
        Ok(Self {
            kind: TransformKind::Custom,
            matrix,
            full_dim: n,
            fixed: Vec::new(),
            condensed: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            kind: TransformKind::Custom,
            matrix: Matrix::identity(n),
            full_dim: n,
            fixed: Vec::new(),
            condensed: false,
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn reproduction_degree(&self) -> Option<usize> {
        match self.kind {
            TransformKind::Approximate { q } => Some(q),
            _ => None,
        }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of basis functions before condensation.
    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn is_condensed(&self) -> bool {
        self.condensed
    }

    pub fn fixed_indices(&self) -> &[usize] {
        &self.fixed
    }

    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.full_dim)
            .filter(|i| !self.fixed.contains(i))
            .collect()
    }
}

/// Default quadrature order per span: `p + 1` (exact) for polynomial
/// integrands with a constant jacobian, `2p + 4` for rational integrands.
pub fn default_quadrature<T: Scalar>(space: &SplineSpace<T>) -> usize {
    let p = space.degree();
    if space.has_unit_weights() && space.is_linear_geometry() {
        p + 1
    } else {
        (2 * p + 4).min(crate::quadrature::MAX_GAUSS_POINTS)
    }
}

/// `G_ij = int N_i N_j dx` over the physical domain.
pub fn gram_matrix<T: Scalar>(
    space: &SplineSpace<T>,
    quad_points_per_span: usize,
) -> Result<Matrix<T>> {
    let kv = space.knot_vector();
    let n = kv.num_basis();
    let rule = gauss_rule::<T>(quad_points_per_span)?;
    let mut g = Matrix::zeros(n, n);
    for (_, a, b) in kv.spans() {
        for (xi, w) in rule.mapped(a, b) {
            let jac = eval_nurbs(space, xi)?.jacobian;
            let e = eval_bspline(kv, xi)?;
            let f = e.first_index();
            for (r, &vr) in e.values.iter().enumerate() {
                for (c, &vc) in e.values.iter().enumerate() {
                    g[(f + r, f + c)] += vr * vc * w * jac;
                }
            }
        }
    }
    Ok(g)
}

/// Gram matrix for a knot vector mapped linearly onto `[0, length]`. Works
/// for every degree including `p = 0`.
pub fn gram_matrix_linear<T: Scalar>(
    kv: &KnotVector<T>,
    length: T,
    quad_points_per_span: usize,
) -> Result<Matrix<T>> {
    let n = kv.num_basis();
    let rule = gauss_rule::<T>(quad_points_per_span)?;
    let jac = length / (kv.last() - kv.first());
    let mut g = Matrix::zeros(n, n);
    for (_, a, b) in kv.spans() {
        for (xi, w) in rule.mapped(a, b) {
            let e = eval_bspline(kv, xi)?;
            let f = e.first_index();
            for (r, &vr) in e.values.iter().enumerate() {
                for (c, &vc) in e.values.iter().enumerate() {
                    g[(f + r, f + c)] += vr * vc * w * jac;
                }
            }
        }
    }
    Ok(g)
}

/// Inverse-Gram duals `S = G^-1`.
pub fn ig_transform<T: Scalar>(space: &SplineSpace<T>) -> Result<TransformOperator<T>> {
    let g = gram_matrix(space, default_quadrature(space))?;
    let s = invert(&g)?;
    Ok(TransformOperator {
        kind: TransformKind::InverseGram,
        matrix: s,
        full_dim: g.rows(),
        fixed: Vec::new(),
        condensed: false,
    })
}

/// `F_v(x) = 2^-v / v! * sum prod_{j=1..v} (x_{i_{2j-1}} - x_{i_{2j}})^2` over
/// ordered tuples of pairwise distinct indices, which equals the sum over
/// all sets of `v` disjoint pairs of the products of squared differences.
pub fn poly_f<T: Scalar>(v: usize, x: &[T]) -> Result<T> {
    if x.is_empty() {
        return Err(IgaError::input("F_v needs at least one argument"));
    }
    if v == 0 {
        return Ok(T::one());
    }
    if v <= 2 {
        poly_f_direct(v, x)
    } else {
        poly_f_matching(v, x)
    }
}

/// Direct summation over ordered distinct index tuples; `O(r^(2v))`.
pub fn poly_f_direct<T: Scalar>(v: usize, x: &[T]) -> Result<T> {
    if x.is_empty() {
        return Err(IgaError::input("F_v needs at least one argument"));
    }
    fn rec<T: Scalar>(x: &[T], used: &mut Vec<bool>, pairs_left: usize) -> T {
        if pairs_left == 0 {
            return T::one();
        }
        let mut total = T::zero();
        for a in 0..x.len() {
            if used[a] {
                continue;
            }
            used[a] = true;
            for b in 0..x.len() {
                if used[b] {
                    continue;
                }
                used[b] = true;
                let d = x[a] - x[b];
                total += d * d * rec(x, used, pairs_left - 1);
                used[b] = false;
            }
            used[a] = false;
        }
        total
    }
    let mut used = vec![false; x.len()];
    let s = rec(x, &mut used, v);
    let two_v = T::lit(2.0).powi(v as i32);
    Ok(s / (two_v * factorial::<T>(v)))
}

/// Memoized expansion over disjoint pairs (subset dynamic programming).
pub fn poly_f_matching<T: Scalar>(v: usize, x: &[T]) -> Result<T> {
    let r = x.len();
    if r == 0 {
        return Err(IgaError::input("F_v needs at least one argument"));
    }
    if r > 24 {
        return Err(IgaError::input("F_v supports at most 24 arguments"));
    }
    if 2 * v > r {
        return Ok(T::zero());
    }
    let full = (1usize << r) - 1;
    let mut memo: Vec<Vec<Option<T>>> = vec![vec![None; v + 1]; full + 1];
    fn go<T: Scalar>(x: &[T], mask: usize, k: usize, memo: &mut Vec<Vec<Option<T>>>) -> T {
        if k == 0 {
            return T::one();
        }
        if (mask.count_ones() as usize) < 2 * k {
            return T::zero();
        }
        if let Some(v) = memo[mask][k] {
            return v;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        // element i unused, or paired with some j
        let mut total = go(x, rest, k, memo);
        let mut mm = rest;
        while mm != 0 {
            let j = mm.trailing_zeros() as usize;
            mm &= mm - 1;
            let d = x[i] - x[j];
            total += d * d * go(x, rest & !(1 << j), k - 1, memo);
        }
        memo[mask][k] = Some(total);
        total
    }
    Ok(go(x, full, v, &mut memo))
}

/// Approximate dual operator `S_q` built from the knot vector. The result is
/// scaled by `(xi_end - xi_start) / length` so that the duals are dual with
/// respect to integration over the physical coordinate of a linear map.
pub fn ad_transform<T: Scalar>(space: &SplineSpace<T>, q: usize) -> Result<TransformOperator<T>> {
    let kv = space.knot_vector();
    let s = ad_matrix(kv, q)?;
    let scale = (kv.last() - kv.first()) / space.length();
    Ok(TransformOperator {
        kind: TransformKind::Approximate { q },
        matrix: s.scaled(scale),
        full_dim: kv.num_basis(),
        fixed: Vec::new(),
        condensed: false,
    })
}

/// `S_q = U_0 + sum_{v=1..q} (prod_{k=1..v} D_{p+k}) U_v (prod D)^T` on the
/// parametric domain.
pub fn ad_matrix<T: Scalar>(kv: &KnotVector<T>, q: usize) -> Result<Matrix<T>> {
    let p = kv.degree();
    if q > p {
        return Err(IgaError::input(format!(
            "reproduction degree q = {q} exceeds degree p = {p}"
        )));
    }
    let n = kv.num_basis();
    let k = kv.knots();
    // 1-based knot access
    let xk = |i: usize| k[i - 1];
    let width = |hi: usize, lo: usize| -> Result<T> {
        let w = xk(hi) - xk(lo);
        if w > T::zero() {
            Ok(w)
        } else {
            Err(IgaError::input(format!(
                "zero-width knot interval [xi_{lo}, xi_{hi}] in the dual construction"
            )))
        }
    };
    let mut s = Matrix::zeros(n, n);
    // v = 0
    for j in 1..=n {
        s[(j - 1, j - 1)] = T::of_usize(p + 1) / width(j + p + 1, j)?;
    }
    // columns of prod D, each stored as (first row, values)
    let mut cols: Vec<Vec<T>> = (0..n).map(|_| vec![T::one()]).collect();
    for v in 1..=q {
        let r = p + v;
        let d: Vec<T> = (1..=n + p + 1 - r)
            .map(|j| width(j + r, j).map(|w| T::of_usize(r) / w))
            .collect::<Result<_>>()?;
        let prev = cols;
        let m = n - v;
        cols = (0..m)
            .map(|c| {
                // rows c..=c+v
                let mut col = vec![T::zero(); v + 1];
                for (t, &val) in prev[c].iter().enumerate() {
                    col[t] += d[c] * val;
                }
                for (t, &val) in prev[c + 1].iter().enumerate() {
                    col[t + 1] -= d[c + 1] * val;
                }
                col
            })
            .collect();
        let coef = factorial::<T>(p + 1) * factorial::<T>(p - v)
            / (factorial::<T>(p + v + 1) * factorial::<T>(p + v));
        for j in 1..=m {
            let args: Vec<T> = (j + 1..=j + p + v).map(xk).collect();
            let beta = coef * poly_f(v, &args)?;
            let u = T::of_usize(p + v + 1) / width(j + p + v + 1, j)? * beta;
            let col = &cols[j - 1];
            let base = j - 1;
            for (a, &pa) in col.iter().enumerate() {
                for (b, &pb) in col.iter().enumerate() {
                    s[(base + a, base + b)] += pa * u * pb;
                }
            }
        }
    }
    let tol = s.max_abs() * T::lit(1e-14);
    s.prune(tol);
    Ok(s)
}

/// Dual function values `S N(xi)`. For a condensed operator only the
/// retained B-splines enter.
pub fn eval_duals<T: Scalar>(
    op: &TransformOperator<T>,
    space: &SplineSpace<T>,
    xi: T,
) -> Result<Vec<T>> {
    let n = space.num_basis();
    if op.full_dim() != n {
        return Err(IgaError::DimensionMismatch {
            expected: op.full_dim(),
            found: n,
        });
    }
    let full = eval_bspline(space.knot_vector(), xi)?.dense_values(n);
    let basis: Vec<T> = if op.is_condensed() {
        op.free_indices().iter().map(|&i| full[i]).collect()
    } else {
        full
    };
    op.matrix.matvec(&basis)
}

fn check_fixed<T: Scalar>(op: &TransformOperator<T>, fixed: &[usize]) -> Result<Vec<usize>> {
    if op.condensed {
        return Err(IgaError::input("operator is already condensed"));
    }
    let mut f = fixed.to_vec();
    f.sort_unstable();
    f.dedup();
    if let Some(&bad) = f.iter().find(|&&i| i >= op.full_dim) {
        return Err(IgaError::input(format!("fixed index {bad} out of range")));
    }
    Ok(f)
}

/// Schur complement `C - B^T A^-1 B` with the fixed indices ordered first.
pub fn condense_transform<T: Scalar>(
    op: &TransformOperator<T>,
    fixed: &[usize],
) -> Result<TransformOperator<T>> {
    let fixed = check_fixed(op, fixed)?;
    let free: Vec<usize> = (0..op.full_dim).filter(|i| !fixed.contains(i)).collect();
    let c = op.matrix.select(&free, &free);
    let matrix = if fixed.is_empty() {
        c
    } else {
        let a = op.matrix.select(&fixed, &fixed);
        let b = op.matrix.select(&fixed, &free);
        let ainv_b = Lu::factor(&a)?.solve_matrix(&b)?;
        c.sub(&b.transpose().matmul(&ainv_b)?)?
    };
    Ok(TransformOperator {
        kind: op.kind,
        matrix,
        full_dim: op.full_dim,
        fixed,
        condensed: true,
    })
}

/// Deletes fixed rows and columns without the Schur correction.
pub fn naive_reduce_transform<T: Scalar>(
    op: &TransformOperator<T>,
    fixed: &[usize],
) -> Result<TransformOperator<T>> {
    let fixed = check_fixed(op, fixed)?;
    let free: Vec<usize> = (0..op.full_dim).filter(|i| !fixed.contains(i)).collect();
    let matrix = op.matrix.select(&free, &free);
    Ok(TransformOperator {
        kind: op.kind,
        matrix,
        full_dim: op.full_dim,
        fixed,
        condensed: true,
    })
}

/// Moments `c_j^r = int x^r N_j dx`.
pub fn moment_coefficients<T: Scalar>(space: &SplineSpace<T>, r: usize) -> Result<Vec<T>> {
    let kv = space.knot_vector();
    let rule = gauss_rule::<T>(space.degree() + r / 2 + 2)?;
    let mut c = vec![T::zero(); kv.num_basis()];
    for (_, a, b) in kv.spans() {
        for (xi, w) in rule.mapped(a, b) {
            let jac = eval_nurbs(space, xi)?.jacobian;
            let x = space.map(xi)?;
            let e = eval_bspline(kv, xi)?;
            let f = e.first_index();
            for (k, &v) in e.values.iter().enumerate() {
                c[f + k] += x.powi(r as i32) * v * w * jac;
            }
        }
    }
    Ok(c)
}

/// `B_ij = int lambda_i N_j dx = (S G)_ij` for an uncondensed operator.
pub fn biorthogonality_matrix<T: Scalar>(
    op: &TransformOperator<T>,
    space: &SplineSpace<T>,
) -> Result<Matrix<T>> {
    if op.is_condensed() {
        return Err(IgaError::input(
            "bi-orthogonality is defined for the full operator",
        ));
    }
    let g = gram_matrix(space, default_quadrature(space))?;
    op.matrix.matmul(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{bandwidth, Cholesky};
    use crate::spline::{make_open_knot_vector, mesh_preset, uniform_mesh, MeshKind};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bar() -> SplineSpace<f64> {
        uniform_mesh(1, 1, 1.0).unwrap()
    }

    #[test]
    fn gram_of_linear_element() {
        let g = gram_matrix(&bar(), 2).unwrap();
        assert_relative_eq!(g[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(g[(0, 1)], 1.0 / 6.0, epsilon = 1e-15);
        let kv0 = KnotVector::new(vec![0.0, 1.0], 0).unwrap();
        let g0 = gram_matrix_linear(&kv0, 2.5, 1).unwrap();
        assert_relative_eq!(g0[(0, 0)], 2.5, epsilon = 1e-15);
    }

    #[test]
    fn gram_is_spd() {
        let s = mesh_preset::<f64>(MeshKind::C, 4, 2, 3.0).unwrap();
        let g = gram_matrix(&s, 5).unwrap();
        assert!(g.is_symmetric(1e-14));
        assert!(Cholesky::factor(&g).is_ok());
    }

    #[test]
    fn ig_transform_linear_element() {
        let op = ig_transform(&bar()).unwrap();
        let s = op.matrix();
        assert_relative_eq!(s[(0, 0)], 4.0, epsilon = 1e-13);
        assert_relative_eq!(s[(0, 1)], -2.0, epsilon = 1e-13);
        let l0 = eval_duals(&op, &bar(), 0.0).unwrap();
        assert_relative_eq!(l0[0], 4.0, epsilon = 1e-13);
        let l1 = eval_duals(&op, &bar(), 1.0).unwrap();
        assert_relative_eq!(l1[0], -2.0, epsilon = 1e-13);
        assert_relative_eq!(l1[1], 4.0, epsilon = 1e-13);
        let b = biorthogonality_matrix(&op, &bar()).unwrap();
        assert_relative_eq!(b[(0, 0)], 1.0, epsilon = 1e-13);
        assert!(b[(0, 1)].abs() < 1e-13);
    }

    #[test]
    fn poly_f_examples() {
        assert_eq!(poly_f(1, &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(poly_f(1, &[0.7, 0.7, 0.7]).unwrap(), 0.0);
        assert_relative_eq!(poly_f(1, &[0.0, 1.0, 2.0]).unwrap(), 6.0, epsilon = 1e-14);
        assert!(poly_f::<f64>(1, &[]).is_err());
        // two disjoint pairs of four points
        let x = [0.0, 1.0, 3.0, 4.0];
        let expected = (1.0f64 * 1.0) * (1.0 * 1.0)
            + (3.0f64 * 3.0) * (3.0 * 3.0)
            + (4.0f64 * 4.0) * (2.0 * 2.0);
        assert_relative_eq!(poly_f(2, &x).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn poly_f_matching_agrees_with_direct() {
        let x = [0.1f64, 0.35, 0.4, 0.72, 0.9, 1.3];
        for v in 1..=3 {
            for r in 1..=6 {
                let a = poly_f_direct(v, &x[..r]).unwrap();
                let b = poly_f_matching(v, &x[..r]).unwrap();
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "v={v} r={r}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn ad_q0_linear_element() {
        let op = ad_transform(&bar(), 0).unwrap();
        assert_eq!(op.matrix().as_slice(), &[2.0, 0.0, 0.0, 2.0]);
        assert!(ad_transform(&bar(), 2).is_err());
    }

    fn reproduction_error(space: &SplineSpace<f64>, op: &TransformOperator<f64>, r: usize) -> f64 {
        let c = moment_coefficients(space, r).unwrap();
        let coeff = op.matrix().transpose().matvec(&c).unwrap();
        let rule = gauss_rule::<f64>(space.degree() + 1).unwrap();
        let mut err: f64 = 0.0;
        for (_, a, b) in space.knot_vector().spans() {
            for (xi, _) in rule.mapped(a, b) {
                let n = eval_bspline(space.knot_vector(), xi)
                    .unwrap()
                    .dense_values(space.num_basis());
                let val: f64 = n.iter().zip(&coeff).map(|(x, y)| x * y).sum();
                err = err.max((val - space.map(xi).unwrap().powi(r as i32)).abs());
            }
        }
        err
    }

    #[test]
    fn ad_reproduces_polynomials() {
        for p in 1..=5 {
            let s = mesh_preset::<f64>(MeshKind::A, p, 2, 1.0).unwrap();
            for q in 0..=p {
                let op = ad_transform(&s, q).unwrap();
                for r in 0..=q {
                    let e = reproduction_error(&s, &op, r);
                    assert!(e < 1e-8, "p={p} q={q} r={r} err={e}");
                }
            }
        }
    }

    #[test]
    fn ad_reproduction_on_scaled_nonuniform_mesh() {
        let s = mesh_preset::<f64>(MeshKind::B, 3, 2, 7.0).unwrap();
        let op = ad_transform(&s, 3).unwrap();
        for r in 0..=3 {
            let e = reproduction_error(&s, &op, r);
            assert!(e < 1e-8 * 7f64.powi(r as i32), "r={r} err={e}");
        }
    }

    #[test]
    fn ad_symmetric_spd_banded() {
        for p in 1..=5 {
            let s = mesh_preset::<f64>(MeshKind::A, p, 4, 1.0).unwrap();
            for q in 0..=p {
                let m = ad_transform(&s, q).unwrap().matrix().clone();
                let mut asym: f64 = 0.0;
                for i in 0..m.rows() {
                    for j in 0..m.cols() {
                        asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
                    }
                }
                assert!(asym <= 1e-13 * m.max_abs());
                assert!(Cholesky::factor(&m).is_ok(), "p={p} q={q}");
                assert_eq!(bandwidth(&m, 0.0), q, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn ad_dual_support() {
        let p = 3;
        let q = 3;
        let s = mesh_preset::<f64>(MeshKind::A, p, 4, 1.0).unwrap();
        let op = ad_transform(&s, q).unwrap();
        let kv = s.knot_vector();
        // count spans on which each dual is nonzero
        let n = s.num_basis();
        let mut count = vec![0usize; n];
        for (_, a, b) in kv.spans() {
            let l = eval_duals(&op, &s, 0.5 * (a + b)).unwrap();
            for i in 0..n {
                if l[i].abs() > 1e-12 {
                    count[i] += 1;
                }
            }
        }
        assert!(count.iter().all(|&c| c <= p + 2 * q + 1));
    }

    #[test]
    fn condensation_examples() {
        let s = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 3.0]]).unwrap();
        let op = TransformOperator::custom(s).unwrap();
        let c = condense_transform(&op, &[0]).unwrap();
        assert_relative_eq!(c.matrix()[(0, 0)], 3.0 - 0.25 / 2.0, epsilon = 1e-15);
        let nv = naive_reduce_transform(&op, &[0]).unwrap();
        assert_eq!(nv.matrix()[(0, 0)], 3.0);
        let id = condense_transform(&TransformOperator::<f64>::identity(5), &[0, 4]).unwrap();
        assert_eq!(id.matrix(), &Matrix::identity(3));
        assert!(condense_transform(&c, &[0]).is_err());
    }

    #[test]
    fn condensed_duals_vanish_at_boundary() {
        let s = mesh_preset::<f64>(MeshKind::A, 3, 2, 1.0).unwrap();
        let n = s.num_basis();
        let op = ad_transform(&s, 3).unwrap();
        let c = condense_transform(&op, &[0, n - 1]).unwrap();
        for xi in [0.0, 1.0] {
            let l = eval_duals(&c, &s, xi).unwrap();
            assert!(l.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn ig_biorthogonality_on_presets() {
        for p in 1..=5 {
            let s = mesh_preset::<f64>(MeshKind::C, p, 2, 2.0).unwrap();
            let op = ig_transform(&s).unwrap();
            let b = biorthogonality_matrix(&op, &s).unwrap();
            for i in 0..b.rows() {
                for j in 0..b.cols() {
                    let d = if i == j { 1.0 } else { 0.0 };
                    assert!((b[(i, j)] - d).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn f32_ad_matrix() {
        let kv = make_open_knot_vector(&[0.0f32, 0.25, 0.5, 0.75, 1.0], 2).unwrap();
        let s = ad_matrix(&kv, 2).unwrap();
        assert!(s.is_symmetric(1e-5));
    }

    proptest! {
        #[test]
        fn poly_f_direct_matches_matching(xs in proptest::collection::vec(-2.0f64..2.0, 1..6), v in 1usize..3) {
            let a = poly_f_direct(v, &xs).unwrap();
            let b = poly_f_matching(v, &xs).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }

        #[test]
        fn poly_f_translation_invariant(xs in proptest::collection::vec(-2.0f64..2.0, 2..7), v in 1usize..4, shift in -5.0f64..5.0) {
            let ys: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let a = poly_f(v, &xs).unwrap();
            let b = poly_f(v, &ys).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn condensed_duals_vanish_at_fixed_ends(p in 1usize..=5, q_frac in 0.0f64..1.0, kind in 0usize..3) {
            let kind = [MeshKind::A, MeshKind::B, MeshKind::C][kind];
            let q = ((p as f64 + 1.0) * q_frac) as usize;
            let s = mesh_preset::<f64>(kind, p, 2, 1.0).unwrap();
            let n = s.num_basis();
            let c = condense_transform(&ad_transform(&s, q.min(p)).unwrap(), &[0, n - 1]).unwrap();
            for xi in [0.0, 1.0] {
                let l = eval_duals(&c, &s, xi).unwrap();
                prop_assert!(l.iter().all(|v| v.abs() < 1e-10 * c.matrix().max_abs()));
            }
        }
    }
}
