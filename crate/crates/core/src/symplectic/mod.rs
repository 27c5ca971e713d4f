//! Symplectic normal forms: linear frames, primitives of exact 2-forms, the
//! Moser flow, local Darboux charts and averaging over circle actions.
//!
//! Moser convention: `i_{X_t} w_t = -alpha` with `w_t = w0 + t (w1 - w0)` and
//! `d alpha = w1 - w0`, so the time-one flow satisfies `Phi^* w1 = w0`.

mod averaging;
mod darboux;
mod forms;
mod frame;
mod moser;
mod primitive;

pub use averaging::{average_over_circle, average_over_cyclic, average_scalar_over_circle, CircleAction};
pub use darboux::{darboux_chart, DarbouxChart};
pub use forms::{polar_patch, surface_total_integral, MoserPath, Primitive, SymplecticForm};
pub use frame::{standard_form_matrix, symplectic_frame};
pub use moser::{moser_flow, moser_residual, moser_vector_field, FlowMap};
pub use primitive::{poincare_primitive, sphere_fiber_primitive, sphere_fiber_primitive_with};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SymplecticError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("matrix is not antisymmetric (defect {defect:e})")]
    NotAntisymmetric { defect: f64 },
    #[error("singular matrix: |det| = {det:e}")]
    Singular { det: f64 },
    #[error("degenerate 2-form at {at:?} (t = {t}): |det| = {det:e}")]
    Degenerate { at: Vec<f64>, t: f64, det: f64 },
    #[error("expected a real 2-form, got degree {degree}")]
    NotSymplecticCandidate { degree: usize },
    #[error("chart `{0}` is not star-shaped")]
    NotStarShaped(String),
    #[error("input form is not closed: sup |d f| = {residual:e}")]
    NotClosed { residual: f64 },
    #[error("cohomology obstruction: total integral {integral:e} is not zero")]
    Cohomology { integral: f64 },
    #[error("cohomology classes differ: total integrals {left} and {right}")]
    CohomologyMismatch { left: f64, right: f64 },
    #[error("trajectory from {sample:?} left the chart at t = {time}")]
    Escape { sample: Vec<f64>, time: f64 },
    #[error("Moser flow leaves the ball of radius {radius}; try radius {suggested}")]
    ShrinkRadius { radius: f64, suggested: f64 },
    #[error("averaging needs at least 8 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("primitive residual {residual:e} exceeds tolerance {tolerance:e}")]
    PrimitiveResidual { residual: f64, tolerance: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, SymplecticError>;
