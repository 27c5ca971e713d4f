//! Coordinate charts on the model manifolds and a pointwise exterior calculus.
//!
//! Forms are represented by batch evaluators over their canonical (strictly
//! increasing) multi-indices. Every operation here (`d`, wedge, pullback,
//! interior product) builds a new evaluator that closes over its inputs, so
//! forms are cheap to compose and immutable once built.

mod calculus;
mod chart;
mod field;
mod form;
mod map;
mod path;
pub mod quadrature;
mod sampling;

pub use calculus::{
    exterior_derivative, integrate_form, integrate_along_path, interior_product, pullback_form,
    wedge, integrate_along_segment, Patch, ParamRange,
};
pub use chart::{Chart, ChartKind, CoordinateBound, Point, Pole};
pub use field::{Reality, ScalarField, VectorField};
pub use form::{all_multi_indices, DifferentialForm, MultiIndex};
pub use map::SmoothMap;
pub use path::{PathInChart, RegionSpan};
pub use sampling::sample_points;

use thiserror::Error;

/// Default relative finite-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("point {coords:?} lies outside chart `{chart}`")]
    Domain { chart: String, coords: Vec<f64> },
    #[error("chart mismatch: expected `{expected}`, found `{found}`")]
    ChartMismatch { expected: String, found: String },
    #[error("exterior derivative of a top-degree form (degree {degree} on a {dim}-dimensional chart)")]
    TopDegree { degree: usize, dim: usize },
    #[error("degree overflow: {left} + {right} exceeds dimension {dim}")]
    DegreeOverflow { left: usize, right: usize, dim: usize },
    #[error("interior product of a 0-form")]
    ZeroDegree,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid multi-index {0:?}")]
    InvalidIndex(Vec<usize>),
    #[error("jacobian evaluation failed: {0}")]
    Jacobian(String),
    #[error("numerical evaluation failed: {0}")]
    Evaluation(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
