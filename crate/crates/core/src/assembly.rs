//! Mass, stiffness and load assembly for the 1D truss, Dirichlet reduction
//! and application of a transformation operator.

use crate::dual::{default_quadrature, TransformOperator};
use crate::error::{IgaError, Result};
use crate::linalg::{lu_solve, MassMatrix, Matrix};
use crate::quadrature::gauss_rule;
use crate::scalar::Scalar;
use crate::spline::{eval_nurbs, SplineSpace};

/// Support condition at one end of the truss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    Fixed,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Support configuration of the whole truss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    /// Exactly one end fixed.
    FixedFree,
    FixedFixed,
    FreeFree,
}

/// Distributed axial load `q(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributedLoad<T> {
    None,
    /// `q(x) = P0 / L * sin(pi x / L)`.
    SineHalfWave {
        p0: T,
    },
    /// Piecewise linear through samples `(x_k, q_k)`, zero outside.
    Samples {
        x: Vec<T>,
        q: Vec<T>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLoad<T> {
    pub end: End,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadSpec<T> {
    pub distributed: DistributedLoad<T>,
    pub point: Option<PointLoad<T>>,
}

impl<T> Default for LoadSpec<T> {
    fn default() -> Self {
        Self {
            distributed: DistributedLoad::None,
            point: None,
        }
    }
}

impl<T: Scalar> LoadSpec<T> {
    pub fn sine(p0: T) -> Self {
        Self {
            distributed: DistributedLoad::SineHalfWave { p0 },
            point: None,
        }
    }

    pub fn end_load(end: End, value: T) -> Self {
        Self {
            distributed: DistributedLoad::None,
            point: Some(PointLoad { end, value }),
        }
    }

    pub fn is_zero(&self) -> bool {
        let dist_zero = match &self.distributed {
            DistributedLoad::None => true,
            DistributedLoad::SineHalfWave { p0 } => *p0 == T::zero(),
            DistributedLoad::Samples { q, .. } => q.iter().all(|&v| v == T::zero()),
        };
        dist_zero && self.point.is_none_or(|p| p.value == T::zero())
    }

    /// `q(x)` on a truss of the given length.
    pub fn distributed_at(&self, x: T, length: T) -> T {
        match &self.distributed {
            DistributedLoad::None => T::zero(),
            DistributedLoad::SineHalfWave { p0 } => *p0 / length * (T::PI() * x / length).sin(),
            DistributedLoad::Samples { x: xs, q } => interpolate(xs, q, x),
        }
    }
}

/// Linear interpolation, zero outside the sample range.
pub fn interpolate<T: Scalar>(xs: &[T], ys: &[T], x: T) -> T {
    if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
        return T::zero();
    }
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x == x0 {
        return ys[k - 1];
    }
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Material, geometry and support data of the truss.
#[derive(Clone, Debug, PartialEq)]
pub struct TrussModel<T> {
    pub length: T,
    pub ea: T,
    /// Mass per unit length.
    pub mu: T,
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub load: LoadSpec<T>,
}

impl<T: Scalar> TrussModel<T> {
    pub fn new(
        length: T,
        ea: T,
        mu: T,
        left: BoundaryCondition,
        right: BoundaryCondition,
    ) -> Result<Self> {
        for (name, v) in [("length", length), ("EA", ea), ("mu", mu)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(IgaError::input(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            length,
            ea,
            mu,
            left,
            right,
            load: LoadSpec::default(),
        })
    }

    pub fn with_load(mut self, load: LoadSpec<T>) -> Self {
        self.load = load;
        self
    }

    pub fn support(&self) -> Support {
        match (self.left, self.right) {
            (BoundaryCondition::Fixed, BoundaryCondition::Fixed) => Support::FixedFixed,
            (BoundaryCondition::Free, BoundaryCondition::Free) => Support::FreeFree,
            _ => Support::FixedFree,
        }
    }

    /// Indices of fixed control points for `n` basis functions.
    pub fn fixed_indices(&self, n: usize) -> Vec<usize> {
        let mut f = Vec::new();
        if self.left == BoundaryCondition::Fixed {
            f.push(0);
        }
        if self.right == BoundaryCondition::Fixed && n > 1 {
            f.push(n - 1);
        }
        f
    }
}

/// Status flags of an assembled system.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SystemFlags {
    pub reduced: bool,
    pub dual_applied: bool,
    pub weighted: bool,
    pub lumped: bool,
}

/// `M u'' + K u = F` with DOF bookkeeping.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemMatrices<T> {
    pub mass: MassMatrix<T>,
    pub stiffness: Matrix<T>,
    pub load: Vec<T>,
    /// Retained indices in full numbering.
    pub free: Vec<usize>,
    pub fixed: Vec<usize>,
    pub full_dim: usize,
    pub flags: SystemFlags,
}

impl<T: Scalar> SystemMatrices<T> {
    pub fn n_free(&self) -> usize {
        self.load.len()
    }

    /// Re-inserts zeros at fixed DOFs.
    pub fn expand(&self, reduced: &[T]) -> Result<Vec<T>> {
        if reduced.len() != self.free.len() {
            return Err(IgaError::DimensionMismatch {
                expected: self.free.len(),
                found: reduced.len(),
            });
        }
        let mut full = vec![T::zero(); self.full_dim];
        for (&i, &v) in self.free.iter().zip(reduced) {
            full[i] = v;
        }
        Ok(full)
    }

    fn reduce(&self, fixed: Vec<usize>) -> Self {
        let free: Vec<usize> = (0..self.full_dim).filter(|i| !fixed.contains(i)).collect();
        let mass = match &self.mass {
            MassMatrix::Full(m) => MassMatrix::Full(m.select(&free, &free)),
            MassMatrix::Diagonal(d) => MassMatrix::Diagonal(crate::linalg::DiagonalMatrix::new(
                free.iter().map(|&i| d.values()[i]).collect(),
            )),
        };
        Self {
            mass,
            stiffness: self.stiffness.select(&free, &free),
            load: free.iter().map(|&i| self.load[i]).collect(),
            free,
            fixed,
            full_dim: self.full_dim,
            flags: SystemFlags {
                reduced: true,
                ..self.flags
            },
        }
    }
}

/// Assembles with the default quadrature (`p + 1` points per span for unit
/// weights and linear geometry, `2p + 4` otherwise).
pub fn assemble<T: Scalar>(
    model: &TrussModel<T>,
    space: &SplineSpace<T>,
    weighted: bool,
) -> Result<SystemMatrices<T>> {
    assemble_with_quadrature(model, space, weighted, default_quadrature(space))
}

/// Element loop over nonempty spans with `n_q` Gauss points per span.
/// The weighted variant multiplies all integrands by `W^2` and adds the
/// `2 R_I W_x / W` term to the stiffness test derivative.
pub fn assemble_with_quadrature<T: Scalar>(
    model: &TrussModel<T>,
    space: &SplineSpace<T>,
    weighted: bool,
    n_q: usize,
) -> Result<SystemMatrices<T>> {
    let n = space.num_basis();
    let rule = gauss_rule::<T>(n_q)?;
    let mut m = Matrix::zeros(n, n);
    let mut k = Matrix::zeros(n, n);
    let mut f = vec![T::zero(); n];
    let x0 = space.geometry()[0];
    let two = T::lit(2.0);
    let tiny = space.length() * T::epsilon();
    for (_, a, b) in space.knot_vector().spans() {
        for (xi, w) in rule.mapped(a, b) {
            let e = eval_nurbs(space, xi)?;
            if e.jacobian.abs() <= tiny {
                return Err(IgaError::Geometry(format!("zero jacobian at xi = {xi}")));
            }
            let dx = w * e.jacobian;
            let first = e.first_index();
            let r = &e.values;
            let bvec = e.physical_derivs();
            let x = space.map(xi)? - x0;
            let q = model.load.distributed_at(x, model.length);
            let (w2, wx_over_w) = if weighted {
                let wf = e.weight_fn;
                (wf * wf, e.weight_fn_deriv / e.jacobian / wf)
            } else {
                (T::one(), T::zero())
            };
            for i in 0..r.len() {
                let test_b = bvec[i] + two * r[i] * wx_over_w;
                for j in 0..r.len() {
                    m[(first + i, first + j)] += model.mu * r[i] * r[j] * w2 * dx;
                    k[(first + i, first + j)] += test_b * model.ea * bvec[j] * w2 * dx;
                }
                f[first + i] += r[i] * q * w2 * dx;
            }
        }
    }
    if let Some(pl) = model.load.point {
        let idx = match pl.end {
            End::Left => 0,
            End::Right => n - 1,
        };
        let scale = if weighted {
            let w = space.weights()[idx];
            w * w
        } else {
            T::one()
        };
        f[idx] += pl.value * scale;
    }
    Ok(SystemMatrices {
        mass: MassMatrix::Full(m),
        stiffness: k,
        load: f,
        free: (0..n).collect(),
        fixed: Vec::new(),
        full_dim: n,
        flags: SystemFlags {
            weighted,
            ..SystemFlags::default()
        },
    })
}

/// Deletes rows and columns of fixed boundary control points.
pub fn apply_dirichlet<T: Scalar>(
    sys: &SystemMatrices<T>,
    model: &TrussModel<T>,
) -> Result<SystemMatrices<T>> {
    if sys.flags.reduced {
        return Err(IgaError::input("system is already reduced"));
    }
    Ok(sys.reduce(model.fixed_indices(sys.full_dim)))
}

fn left_multiply<T: Scalar>(
    s: &Matrix<T>,
    sys: &SystemMatrices<T>,
) -> Result<(MassMatrix<T>, Matrix<T>, Vec<T>)> {
    let mass = match &sys.mass {
        MassMatrix::Full(m) => s.matmul(m)?,
        MassMatrix::Diagonal(d) => {
            let dv = d.values();
            Matrix::from_fn(s.rows(), s.cols(), |i, j| s[(i, j)] * dv[j])
        }
    };
    Ok((
        MassMatrix::Full(mass),
        s.matmul(&sys.stiffness)?,
        s.matvec(&sys.load)?,
    ))
}

/// `M, K, F <- S M, S K, S F` with an operator condensed on the same fixed
/// indices as the reduced system.
pub fn apply_dual<T: Scalar>(
    sys: &SystemMatrices<T>,
    op: &TransformOperator<T>,
) -> Result<SystemMatrices<T>> {
    if sys.flags.dual_applied {
        return Err(IgaError::input("transformation already applied"));
    }
    if op.dim() != sys.n_free() {
        return Err(IgaError::DimensionMismatch {
            expected: sys.n_free(),
            found: op.dim(),
        });
    }
    let op_fixed: &[usize] = if op.is_condensed() {
        op.fixed_indices()
    } else {
        &[]
    };
    if op_fixed != sys.fixed.as_slice() || op.full_dim() != sys.full_dim {
        return Err(IgaError::input(
            "operator and system are reduced on different indices",
        ));
    }
    let (mass, stiffness, load) = left_multiply(op.matrix(), sys)?;
    Ok(SystemMatrices {
        mass,
        stiffness,
        load,
        free: sys.free.clone(),
        fixed: sys.fixed.clone(),
        full_dim: sys.full_dim,
        flags: SystemFlags {
            dual_applied: true,
            ..sys.flags
        },
    })
}

/// Applies the full operator to the unreduced system and only then deletes
/// the fixed rows and columns, so fixed DOFs are neglected inside the
/// transformed system instead of condensing the operator.
pub fn apply_dual_unreduced<T: Scalar>(
    sys_full: &SystemMatrices<T>,
    op_full: &TransformOperator<T>,
    model: &TrussModel<T>,
) -> Result<SystemMatrices<T>> {
    if sys_full.flags.reduced || op_full.is_condensed() {
        return Err(IgaError::input("expected unreduced system and operator"));
    }
    if op_full.dim() != sys_full.full_dim {
        return Err(IgaError::DimensionMismatch {
            expected: sys_full.full_dim,
            found: op_full.dim(),
        });
    }
    let (mass, stiffness, load) = left_multiply(op_full.matrix(), sys_full)?;
    let transformed = SystemMatrices {
        mass,
        stiffness,
        load,
        free: sys_full.free.clone(),
        fixed: Vec::new(),
        full_dim: sys_full.full_dim,
        flags: SystemFlags {
            dual_applied: true,
            ..sys_full.flags
        },
    };
    Ok(transformed.reduce(model.fixed_indices(sys_full.full_dim)))
}

/// `u = K^-1 F` (K may be nonsymmetric).
pub fn static_solve<T: Scalar>(sys: &SystemMatrices<T>) -> Result<Vec<T>> {
    if sys.n_free() == 0 {
        return Ok(Vec::new());
    }
    lu_solve(&sys.stiffness, &sys.load)
}

/// Displacement, physical derivative and normal force at one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldValue<T> {
    pub u: T,
    pub du_dx: T,
    pub normal_force: T,
}

/// Evaluates `u = sum R_i u_i` from full-length coefficients.
pub fn field_eval<T: Scalar>(
    space: &SplineSpace<T>,
    coeffs: &[T],
    ea: T,
    xi: T,
) -> Result<FieldValue<T>> {
    if coeffs.len() != space.num_basis() {
        return Err(IgaError::DimensionMismatch {
            expected: space.num_basis(),
            found: coeffs.len(),
        });
    }
    let e = eval_nurbs(space, xi)?;
    let f = e.first_index();
    let b = e.physical_derivs();
    let mut u = T::zero();
    let mut du = T::zero();
    for k in 0..e.values.len() {
        u += e.values[k] * coeffs[f + k];
        du += b[k] * coeffs[f + k];
    }
    Ok(FieldValue {
        u,
        du_dx: du,
        normal_force: ea * du,
    })
}
