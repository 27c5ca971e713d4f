//! Prequantum line bundles over the model charts, described by local real
//! potentials.
//!
//! Convention: a potential `alpha` stands for the connection form
//! `A = -i alpha`, the prequantum condition reads `d alpha = w`, and parallel
//! transport around a loop multiplies the fibre by `exp(i oint alpha)`.
//! Where two regions overlap, `alpha_to - alpha_from = w d chi` for an integer
//! winding `w` and an angle function `chi`; section components satisfy
//! `c_to = e^{i w chi} c_from`.

mod connection;
mod gauge;
mod holonomy;

pub use connection::{PrequantumConnection, Region, Seam, Transition};
pub use gauge::{
    apply_gauge, apply_gauge_field, circle_map, connection_difference, default_probe_loops, periods, recover_gauge,
    CircleMap, ConnectionDifference, GaugeFunction, PathFamily,
};
pub use holonomy::{holonomy, holonomy_with};

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::symplectic::SymplecticError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BundleError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("path `{0}` is not closed")]
    OpenPath(String),
    #[error("invalid region schedule: {0}")]
    InvalidSchedule(String),
    #[error("no single region contains path `{0}`; give it a region schedule")]
    NoCoveringRegion(String),
    #[error("not the same curvature: sup difference {residual:e}")]
    CurvatureMismatch { residual: f64 },
    #[error("incompatible connections: {0}")]
    Incompatible(String),
    #[error("connection difference is not closed: sup |d xi| = {residual:e}")]
    NotClosed { residual: f64 },
    #[error("H^1 obstruction: period {period} on loop `{loop_label}`")]
    Obstruction { loop_label: String, period: Complex64 },
    #[error("path families disagree by {disagreement:e}")]
    PathDependence { disagreement: f64 },
    #[error("period {period} on loop `{loop_label}` is not in 2pi Z (nearest multiple {nearest} x 2pi)")]
    NonIntegralPeriod { loop_label: String, period: f64, nearest: i64 },
    #[error("hermitian connection requires an imaginary gauge function (real part up to {violation:e})")]
    HermitianViolation { violation: f64 },
    #[error("region structure cannot be carried through the map: {0}")]
    NotReconstructible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, BundleError>;
