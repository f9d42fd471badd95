//! Scheme selection (test functions, lumping, boundary handling) and the
//! resulting discretized system.

use std::fmt;

use crate::assembly::{
    apply_dirichlet, apply_dual, apply_dual_unreduced, assemble, SystemMatrices, TrussModel,
};
use crate::dual::{ad_transform, condense_transform, ig_transform, TransformOperator};
use crate::error::{IgaError, Result};
use crate::linalg::{MassMatrix, Matrix};
use crate::lumping::lump_unreduced;
use crate::scalar::Scalar;
use crate::spline::SplineSpace;

/// Test function family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestFunctions {
    /// Bubnov-Galerkin (test = shape functions).
    Nurbs,
    /// Inverse-Gram duals.
    InverseGram,
    /// Approximate duals reproducing degree `q`.
    Approximate { q: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Lumping {
    #[default]
    None,
    RowSum,
}

/// How Dirichlet constraints interact with the dual transformation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BcMode {
    /// Schur-condensed operator applied to the reduced system.
    #[default]
    Schur,
    /// Full operator applied to the full system, fixed DOFs deleted afterwards.
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scheme {
    pub test: TestFunctions,
    pub lumping: Lumping,
    pub bc_mode: BcMode,
}

impl Scheme {
    pub fn new(test: TestFunctions, lumping: Lumping) -> Self {
        Self {
            test,
            lumping,
            bc_mode: BcMode::Schur,
        }
    }

    pub fn consistent() -> Self {
        Self::new(TestFunctions::Nurbs, Lumping::None)
    }

    pub fn nurbs_rowsum() -> Self {
        Self::new(TestFunctions::Nurbs, Lumping::RowSum)
    }

    pub fn ig() -> Self {
        Self::new(TestFunctions::InverseGram, Lumping::None)
    }

    pub fn ad(q: usize) -> Self {
        Self::new(TestFunctions::Approximate { q }, Lumping::None)
    }

    pub fn ad_rowsum(q: usize) -> Self {
        Self::new(TestFunctions::Approximate { q }, Lumping::RowSum)
    }

    pub fn with_bc_mode(mut self, bc_mode: BcMode) -> Self {
        self.bc_mode = bc_mode;
        self
    }

    pub fn is_dual(&self) -> bool {
        self.test != TestFunctions::Nurbs
    }

    pub fn q(&self) -> Option<usize> {
        match self.test {
            TestFunctions::Approximate { q } => Some(q),
            _ => None,
        }
    }

    /// Checks the scheme against a spline degree.
    pub fn validate(&self, p: usize) -> Result<()> {
        if let TestFunctions::Approximate { q } = self.test {
            if q == 0 || q > p {
                return Err(IgaError::InvalidCombination(format!(
                    "q = {q} must satisfy 1 <= q <= p = {p}"
                )));
            }
        }
        Ok(())
    }

    /// True when the discrete eigenproblem is the symmetric Bubnov-Galerkin
    /// pair with the scheme's mass (consistent or lumped primal mass, or an
    /// unlumped dual scheme with a condensed operator).
    pub fn has_symmetric_equivalent(&self) -> bool {
        match (self.test, self.lumping) {
            (TestFunctions::Nurbs, _) => true,
            (_, Lumping::None) => self.bc_mode == BcMode::Schur,
            (_, Lumping::RowSum) => false,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.test {
            TestFunctions::Nurbs => write!(f, "nurbs")?,
            TestFunctions::InverseGram => write!(f, "ig")?,
            TestFunctions::Approximate { q } => write!(f, "ad(q={q})")?,
        }
        if self.lumping == Lumping::RowSum {
            write!(f, "+rowsum")?;
        }
        if self.bc_mode == BcMode::Naive && self.is_dual() {
            write!(f, "+naive")?;
        }
        Ok(())
    }
}

/// A model discretized under a scheme.
#[derive(Clone, Debug)]
pub struct Discretization<T> {
    pub space: SplineSpace<T>,
    pub model: TrussModel<T>,
    pub scheme: Scheme,
    /// Unreduced system as assembled for the scheme (weighted for duals on
    /// non-unit weights).
    pub full: SystemMatrices<T>,
    /// Reduced symmetric Bubnov-Galerkin system (never weighted).
    pub galerkin: SystemMatrices<T>,
    /// Reduced system actually integrated or solved.
    pub system: SystemMatrices<T>,
    /// Operator applied to `full` rows; condensed for Schur, full for naive.
    pub transform: Option<TransformOperator<T>>,
}

fn full_operator<T: Scalar>(
    space: &SplineSpace<T>,
    test: TestFunctions,
) -> Result<Option<TransformOperator<T>>> {
    Ok(match test {
        TestFunctions::Nurbs => None,
        TestFunctions::InverseGram => Some(ig_transform(space)?),
        TestFunctions::Approximate { q } => Some(ad_transform(space, q)?),
    })
}

/// Assembles, reduces, applies the dual operator and lumps according to
/// the scheme.
pub fn discretize<T: Scalar>(
    model: &TrussModel<T>,
    space: &SplineSpace<T>,
    scheme: Scheme,
) -> Result<Discretization<T>> {
    scheme.validate(space.degree())?;
    let plain_full = assemble(model, space, false)?;
    let galerkin = apply_dirichlet(&plain_full, model)?;
    let weighted = scheme.is_dual() && !space.has_unit_weights();
    let full = if weighted {
        assemble(model, space, true)?
    } else {
        plain_full
    };
    let op_full = full_operator(space, scheme.test)?;
    let (mut system, transform) = match op_full.clone() {
        None => (galerkin.clone(), None),
        Some(op) => match scheme.bc_mode {
            BcMode::Schur => {
                let reduced = if weighted {
                    apply_dirichlet(&full, model)?
                } else {
                    galerkin.clone()
                };
                let cond = condense_transform(&op, &reduced.fixed)?;
                (apply_dual(&reduced, &cond)?, Some(cond))
            }
            BcMode::Naive => (apply_dual_unreduced(&full, &op, model)?, Some(op)),
        },
    };
    if scheme.lumping == Lumping::RowSum {
        let s_full = op_full.as_ref().map(TransformOperator::matrix);
        system.mass = MassMatrix::Diagonal(lump_unreduced(&full.mass, s_full, &system.free)?);
        system.flags.lumped = true;
    }
    Ok(Discretization {
        space: space.clone(),
        model: model.clone(),
        scheme,
        full,
        galerkin,
        system,
        transform,
    })
}

impl<T: Scalar> Discretization<T> {
    pub fn n_free(&self) -> usize {
        self.system.n_free()
    }

    /// Mass paired with the Galerkin stiffness in the symmetric eigenproblem.
    pub fn symmetric_mass(&self) -> Result<MassMatrix<T>> {
        Ok(match self.scheme.lumping {
            Lumping::None => self.galerkin.mass.clone(),
            Lumping::RowSum => MassMatrix::Diagonal(lump_unreduced(
                &self.plain_full_mass()?,
                None,
                &self.galerkin.free,
            )?),
        })
    }

    fn plain_full_mass(&self) -> Result<MassMatrix<T>> {
        if self.full.flags.weighted {
            Ok(assemble(&self.model, &self.space, false)?.mass)
        } else {
            Ok(self.full.mass.clone())
        }
    }

    /// Row operator restricted to the free rows, identity for Bubnov-Galerkin.
    /// Columns address the full DOF numbering.
    pub fn row_operator(&self) -> Matrix<T> {
        let n = self.full.full_dim;
        let free = &self.system.free;
        match &self.transform {
            None => Matrix::from_fn(free.len(), n, |i, j| {
                if free[i] == j {
                    T::one()
                } else {
                    T::zero()
                }
            }),
            Some(op) if op.is_condensed() => {
                let s = op.matrix();
                Matrix::from_fn(free.len(), n, |i, j| {
                    match free.iter().position(|&f| f == j) {
                        Some(c) => s[(i, c)],
                        None => T::zero(),
                    }
                })
            }
            Some(op) => op.matrix().select(free, &(0..n).collect::<Vec<_>>()),
        }
    }

    /// Static solution expanded to all control points.
    pub fn static_solution(&self) -> Result<Vec<T>> {
        let u = crate::assembly::static_solve(&self.system)?;
        self.system.expand(&u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{BoundaryCondition, LoadSpec};
    use crate::linalg::Matrix;
    use crate::spline::{mesh_preset, weighted_preset, MeshKind};
    use BoundaryCondition::{Fixed, Free};

    fn model(right: BoundaryCondition) -> TrussModel<f64> {
        TrussModel::new(1.0, 1.0, 1.0, Fixed, right)
            .unwrap()
            .with_load(LoadSpec::sine(1.0))
    }

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn labels() {
        assert_eq!(Scheme::consistent().to_string(), "nurbs");
        assert_eq!(Scheme::ad_rowsum(3).to_string(), "ad(q=3)+rowsum");
        assert_eq!(
            Scheme::ig().with_bc_mode(BcMode::Naive).to_string(),
            "ig+naive"
        );
    }

    #[test]
    fn q_out_of_range_rejected() {
        let s = mesh_preset::<f64>(MeshKind::A, 2, 1, 1.0).unwrap();
        assert!(matches!(
            discretize(&model(Fixed), &s, Scheme::ad(3)),
            Err(IgaError::InvalidCombination(_))
        ));
        assert!(discretize(&model(Fixed), &s, Scheme::ad(0)).is_err());
    }

    #[test]
    fn static_solutions_agree_across_schemes() {
        let s = mesh_preset::<f64>(MeshKind::A, 3, 2, 1.0).unwrap();
        let m = model(Fixed);
        let base = discretize(&m, &s, Scheme::consistent())
            .unwrap()
            .static_solution()
            .unwrap();
        for sc in [
            Scheme::ig(),
            Scheme::ad(1),
            Scheme::ad(3),
            Scheme::ad_rowsum(2),
        ] {
            let u = discretize(&m, &s, sc).unwrap().static_solution().unwrap();
            assert!(rel_diff(&u, &base) < 1e-10, "{sc}");
        }
    }

    #[test]
    fn naive_mode_changes_dual_solution() {
        let s = mesh_preset::<f64>(MeshKind::A, 2, 2, 1.0).unwrap();
        let m = model(Fixed);
        let base = discretize(&m, &s, Scheme::consistent())
            .unwrap()
            .static_solution()
            .unwrap();
        let naive = discretize(&m, &s, Scheme::ad(2).with_bc_mode(BcMode::Naive))
            .unwrap()
            .static_solution()
            .unwrap();
        assert!(rel_diff(&naive, &base) > 1e-6);
        let nurbs_naive = discretize(&m, &s, Scheme::consistent().with_bc_mode(BcMode::Naive))
            .unwrap()
            .static_solution()
            .unwrap();
        assert!(rel_diff(&nurbs_naive, &base) < 1e-14);
    }

    #[test]
    fn lumped_mass_is_diagonal_and_conserves_total() {
        let s = mesh_preset::<f64>(MeshKind::B, 3, 2, 1.0).unwrap();
        let d = discretize(&model(Free), &s, Scheme::ad_rowsum(2)).unwrap();
        assert!(d.system.mass.is_diagonal());
        assert!(d.system.flags.lumped && d.system.flags.dual_applied);
        // S G 1 = 1, so every lumped dual row carries exactly mu
        let mu = d.model.mu;
        let MassMatrix::Diagonal(diag) = &d.system.mass else {
            unreachable!()
        };
        assert!(diag.values().iter().all(|&v| (v - mu).abs() < 1e-12 * mu));
        // primal lumping happens before the reduction and conserves the total
        let n = discretize(&model(Fixed), &s, Scheme::nurbs_rowsum()).unwrap();
        let full = n.full.mass.to_dense().row_sums();
        let dropped: f64 = n.system.fixed.iter().map(|&i| full[i]).sum();
        assert!((n.system.mass.total() + dropped - mu * n.model.length).abs() < 1e-12);
    }

    #[test]
    fn weighted_duals_agree() {
        let s = weighted_preset::<f64>(3, 2, 1.0).unwrap();
        let m = model(Fixed);
        let d = discretize(&m, &s, Scheme::ad(2)).unwrap();
        assert!(d.full.flags.weighted);
        assert!(!d.galerkin.flags.weighted);
        let base = discretize(&m, &s, Scheme::ig())
            .unwrap()
            .static_solution()
            .unwrap();
        let u = d.static_solution().unwrap();
        assert!(rel_diff(&u, &base) < 1e-10, "{}", rel_diff(&u, &base));
    }

    #[test]
    fn row_operator_reproduces_system_rows() {
        let s = mesh_preset::<f64>(MeshKind::C, 2, 2, 1.0).unwrap();
        for sc in [
            Scheme::consistent(),
            Scheme::ad(2),
            Scheme::ig().with_bc_mode(BcMode::Naive),
        ] {
            let d = discretize(&model(Fixed), &s, sc).unwrap();
            let t = d.row_operator();
            let kfree: Matrix<f64> = t
                .matmul(&d.full.stiffness)
                .unwrap()
                .select(&(0..d.n_free()).collect::<Vec<_>>(), &d.system.free);
            assert!(
                kfree.sub(&d.system.stiffness).unwrap().max_abs()
                    < 1e-10 * d.system.stiffness.max_abs()
            );
        }
    }
}
