//! Real polarizations of the model surfaces and their Bohr-Sommerfeld levels.

mod experiments;
mod fibration;
mod spectrum;

pub use experiments::{
    independence_experiment, random_trig_polynomial, riemann_roch_surface, torus_counterexample, IndependenceReport,
    TorusReport, TorusRow,
};
pub use fibration::{leaf_holonomy, FibrationKind, LagrangianFibration};
pub use spectrum::{bs_spectrum, BSSpectrum, LEVEL_HOLONOMY_TOL};

use thiserror::Error;

use crate::bundle::BundleError;
use crate::geometry::GeometryError;
use crate::symplectic::SymplecticError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuantizationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("base value {b} is within 1e-6 of the singular level {level}")]
    SingularLevel { b: f64, level: f64 },
    #[error("base value {b} lies outside [{lo}, {hi}]")]
    OutOfBase { b: f64, lo: f64, hi: f64 },
    #[error("holonomy phase not resolved on [{lo}, {hi}]; reduce grid_step")]
    Refinement { lo: f64, hi: f64 },
    #[error("level {level} has leaf holonomy residual {residual:e}")]
    Residual { level: f64, residual: f64 },
    #[error("class integral {integral} is not in 2pi Z")]
    NonIntegralClass { integral: f64 },
    #[error("genus {genus} does not match chart `{chart}`")]
    GenusMismatch { genus: i64, chart: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, QuantizationError>;
