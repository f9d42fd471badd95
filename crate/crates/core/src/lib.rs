//! One-dimensional isogeometric analysis with dual test functions.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the scalar to `f64`.

// Negated comparisons deliberately treat NaN as failing the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod dual;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod lumping;
pub mod quadrature;
pub mod scalar;
pub mod scheme;
pub mod spline;

pub use error::{IgaError, Result};
pub use scalar::Scalar;

pub type Matrix64 = linalg::Matrix<f64>;
pub type KnotVector64 = spline::KnotVector<f64>;
pub type SplineSpace64 = spline::SplineSpace<f64>;
pub type TrussModel64 = assembly::TrussModel<f64>;
pub type SystemMatrices64 = assembly::SystemMatrices<f64>;
pub type TransformOperator64 = dual::TransformOperator<f64>;
pub type Discretization64 = scheme::Discretization<f64>;
pub type Signal64 = dynamics::Signal<f64>;
pub type TimeHistory64 = dynamics::TimeHistory<f64>;
pub type Spectrum64 = analysis::Spectrum<f64>;
