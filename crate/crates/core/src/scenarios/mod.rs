//! Named scenarios, their configuration and report output.

mod config;
mod pipelines;
mod report;

pub use config::{Params, ScenarioConfig, Tolerances};
pub use report::{
    emit_report, Check, Comparison, Conventions, Observation, Report, SpectrumRow, SpectrumTable, CSV_HEADER,
};

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::bundle::BundleError;
use crate::geometry::GeometryError;
use crate::quantization::QuantizationError;
use crate::symplectic::SymplecticError;

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "PREQUANT_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "prequant-out";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Io(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::UnknownScenario(_) | ScenarioError::Config(_) => EXIT_CONFIG,
            ScenarioError::Numerical(_) | ScenarioError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ScenarioError {
            fn from(e: $t) -> Self {
                ScenarioError::Numerical(e.to_string())
            }
        }
    )*};
}
numerical_from!(GeometryError, SymplecticError, BundleError, QuantizationError);

type Pipeline = fn(&ScenarioConfig, &mut Report) -> Result<(), ScenarioError>;

/// `(name, summary, pipeline)` in registration order.
const REGISTRY: [(&str, &str, Pipeline); 8] = [
    ("darboux-local", "local Darboux chart and gauge recovery on a disk", pipelines::darboux_local),
    ("moser-sphere", "global Moser flow between sphere area forms", pipelines::moser_sphere),
    ("weinstein-rotation", "rotation-equivariant Moser flow and averaged gauge", pipelines::weinstein_rotation),
    ("gauge-necessity", "non-constant gauge between flat connections", pipelines::gauge_necessity),
    ("torus-periods", "periods, obstruction and circle map on the torus", pipelines::torus_periods),
    ("bs-sphere", "Bohr-Sommerfeld levels of the sphere height fibration", pipelines::bs_sphere),
    ("bs-independence", "spectrum under exact perturbations of the connection", pipelines::bs_independence),
    ("riemann-roch", "surface index against level counts", pipelines::riemann_roch),
];

pub fn scenario_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _, _)| *n).collect()
}

/// `(name, summary)` pairs.
pub fn scenario_list() -> Vec<(&'static str, &'static str)> {
    REGISTRY.iter().map(|(n, s, _)| (*n, *s)).collect()
}

/// `$PREQUANT_OUT` if set, else `prequant-out`.
pub fn default_output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Runs the pipeline without writing anything.
pub fn evaluate_scenario(cfg: &ScenarioConfig) -> Result<Report, ScenarioError> {
    let (_, _, pipeline) = REGISTRY
        .iter()
        .find(|(n, _, _)| *n == cfg.scenario)
        .ok_or_else(|| ScenarioError::UnknownScenario(cfg.scenario.clone()))?;
    let start = Instant::now();
    let mut report = Report::new(cfg.scenario.clone(), cfg.seed);
    report.parameters = cfg.params.entries().into_iter().map(|(k, v)| [k.to_string(), v]).collect();
    pipeline(cfg, &mut report)?;
    report.duration_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs the pipeline and writes its files to the configured directory, or
/// to `<output root>/<scenario>`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Report, ScenarioError> {
    let report = evaluate_scenario(cfg)?;
    let dir = cfg.out_dir.clone().unwrap_or_else(|| default_output_root().join(&cfg.scenario));
    emit_report(&report, &dir)?;
    Ok(report)
}

/// Exit code for a finished run.
pub fn exit_code(result: &Result<Report, ScenarioError>) -> i32 {
    match result {
        Ok(r) if r.pass => EXIT_PASS,
        Ok(_) => EXIT_CHECK_FAILURE,
        Err(e) => e.exit_code(),
    }
}

/// Report text with the duration line removed, for byte comparisons.
pub fn strip_duration(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("duration_seconds")).map(|l| format!("{l}\n")).collect()
}
