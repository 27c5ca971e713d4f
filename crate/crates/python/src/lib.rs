//! Python bindings: connections, holonomy, gauge recovery, Bohr–Sommerfeld
//! spectra, Riemann–Roch counts and the scenario runner.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use prequant::bundle::{self, PrequantumConnection};
use prequant::geometry::{exterior_derivative, sample_points, Chart, DifferentialForm, PathInChart, Point, FD_STEP};
use prequant::quantization::{self, LagrangianFibration};
use prequant::scenarios::{self, ScenarioConfig, ScenarioError};
use prequant::symplectic::SymplecticForm;

fn numerical<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn pair(z: Complex64) -> (f64, f64) {
    (z.re, z.im)
}

#[pyclass(name = "Connection", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyConnection {
    pub inner: PrequantumConnection,
}

#[pymethods]
impl PyConnection {
    /// Degree-`k` monopole on the sphere in (theta, z) coordinates.
    #[staticmethod]
    pub fn sphere_monopole(k: i64) -> Self {
        PyConnection { inner: PrequantumConnection::sphere_monopole(k) }
    }

    /// Degree-`n` connection on the torus with constant offset `c` along theta1.
    #[staticmethod]
    #[pyo3(signature = (n, c = 0.0))]
    pub fn torus(n: i64, c: f64) -> Self {
        PyConnection { inner: PrequantumConnection::torus(n, c) }
    }

    /// Adds `d psi` to every potential, `psi` a seeded random trigonometric polynomial.
    pub fn shifted_by_random_exact(&self, seed: u64) -> PyResult<Self> {
        let psi = quantization::random_trig_polynomial(seed);
        let d = exterior_derivative(&DifferentialForm::scalar(self.inner.chart().clone(), psi), FD_STEP)
            .map_err(numerical)?;
        Ok(PyConnection { inner: self.inner.shift_by(&d).map_err(numerical)? })
    }

    /// Adds the constant 1-form `c dtheta1`; torus only.
    pub fn shifted_by_constant(&self, c: f64) -> PyResult<Self> {
        let f = DifferentialForm::basis(self.inner.chart().clone(), &[0], c).map_err(numerical)?;
        Ok(PyConnection { inner: self.inner.shift_by(&f).map_err(numerical)? })
    }

    #[getter]
    fn chart(&self) -> String {
        self.inner.chart().name().to_string()
    }

    pub fn degree(&self) -> PyResult<Option<i64>> {
        self.inner.degree().map_err(numerical)
    }

    /// Holonomy around the latitude circle at height `z` (sphere).
    pub fn holonomy_latitude(&self, z: f64) -> PyResult<(f64, f64)> {
        let path = PathInChart::latitude(self.inner.chart().clone(), z);
        bundle::holonomy(&self.inner, &path).map(pair).map_err(numerical)
    }

    /// Holonomy around the coordinate circle along `axis` at `level` (torus).
    pub fn holonomy_circle(&self, axis: usize, level: f64) -> PyResult<(f64, f64)> {
        if axis > 1 {
            return Err(PyValueError::new_err("axis must be 0 or 1"));
        }
        let path = PathInChart::torus_circle(self.inner.chart().clone(), axis, level);
        bundle::holonomy(&self.inner, &path).map(pair).map_err(numerical)
    }

    fn __repr__(&self) -> String {
        format!("Connection({})", self.inner.label())
    }
}

#[pyclass(name = "GaugeFunction", frozen)]
pub struct PyGaugeFunction {
    pub inner: bundle::GaugeFunction,
}

#[pymethods]
impl PyGaugeFunction {
    pub fn value(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        self.inner.value(&x).map(pair).map_err(numerical)
    }

    #[getter]
    fn basepoint(&self) -> Vec<f64> {
        self.inner.basepoint().to_vec()
    }

    #[getter]
    fn is_hermitian(&self) -> bool {
        self.inner.is_hermitian()
    }

    #[getter]
    fn path_disagreement(&self) -> f64 {
        self.inner.path_disagreement()
    }
}

/// Gauge function `phi` with `d phi = -i (alpha_a - alpha_b)` normalised at `basepoint`.
/// Raises when the difference has a nonzero period.
#[pyfunction]
#[pyo3(signature = (a, b, basepoint, samples = 64))]
pub fn recover_gauge(a: &PyConnection, b: &PyConnection, basepoint: Vec<f64>, samples: usize) -> PyResult<PyGaugeFunction> {
    let chart = a.inner.chart().clone();
    let pts = sample_points(&chart, samples, 0x51, 0.01);
    let xi = bundle::connection_difference(&a.inner, &b.inner, &pts).map_err(numerical)?;
    let base = Point::new(&chart, &basepoint).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let inner = bundle::recover_gauge(&xi, &base, &bundle::default_probe_loops(&chart)).map_err(numerical)?;
    Ok(PyGaugeFunction { inner })
}

/// Periods of `-i (alpha_a - alpha_b)` over the default probe loops, as (re, im) pairs.
#[pyfunction]
pub fn connection_periods(a: &PyConnection, b: &PyConnection) -> PyResult<Vec<(f64, f64)>> {
    let chart = a.inner.chart().clone();
    let pts = sample_points(&chart, 64, 0x51, 0.01);
    let xi = bundle::connection_difference(&a.inner, &b.inner, &pts).map_err(numerical)?;
    let p = bundle::periods(&xi, &bundle::default_probe_loops(&chart)).map_err(numerical)?;
    Ok(p.into_iter().map(pair).collect())
}

#[pyclass(name = "Spectrum", frozen, get_all)]
pub struct PySpectrum {
    pub regular_levels: Vec<f64>,
    pub holonomies: Vec<(f64, f64)>,
    pub residuals: Vec<f64>,
    pub singular_levels: Vec<f64>,
    pub continuum: bool,
}

#[pymethods]
impl PySpectrum {
    pub fn total_count(&self) -> usize {
        self.regular_levels.len() + self.singular_levels.len()
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(regular={:?}, singular={:?}, continuum={})", self.regular_levels, self.singular_levels, self.continuum)
    }
}

/// Bohr–Sommerfeld levels of the height fibration (sphere) or the linear
/// fibration (torus), chosen from the connection's chart.
#[pyfunction]
#[pyo3(signature = (conn, grid_step = 0.05, root_tol = 1e-10))]
pub fn bs_spectrum(conn: &PyConnection, grid_step: f64, root_tol: f64) -> PyResult<PySpectrum> {
    let chart = conn.inner.chart().clone();
    let fib = match chart.name() {
        "sphere" => LagrangianFibration::sphere_height(chart),
        "torus" => LagrangianFibration::torus_linear(chart),
        other => return Err(PyValueError::new_err(format!("no model fibration on `{other}`"))),
    }
    .map_err(numerical)?;
    let s = quantization::bs_spectrum(&conn.inner, &fib, grid_step, root_tol).map_err(numerical)?;
    Ok(PySpectrum {
        regular_levels: s.regular_levels,
        holonomies: s.holonomies.into_iter().map(pair).collect(),
        residuals: s.residuals,
        singular_levels: s.singular_levels,
        continuum: s.continuum,
    })
}

/// Riemann–Roch count `int omega + 1 - g` for `k dz^dtheta` on the sphere
/// (genus 0) or `(k / 2pi) dtheta1^dtheta2` on the torus (genus 1).
#[pyfunction]
pub fn riemann_roch(k: i64, genus: i64) -> PyResult<i64> {
    let (chart, index, scale) = match genus {
        0 => (Chart::sphere(), [1, 0], k as f64),
        1 => (Chart::torus(), [0, 1], k as f64 / (2.0 * std::f64::consts::PI)),
        _ => return Err(PyValueError::new_err("genus must be 0 or 1")),
    };
    let omega = DifferentialForm::basis(chart, &index, scale).map_err(numerical)?;
    let w = SymplecticForm::new(omega).map_err(numerical)?;
    quantization::riemann_roch_surface(&w, genus).map_err(numerical)
}

#[pyfunction]
pub fn scenario_names() -> Vec<&'static str> {
    scenarios::scenario_names()
}

/// Runs a scenario and returns `(exit_code, report_toml)`. Overrides use the
/// `section.key` names of the config format. Without `out_dir` nothing is written.
#[pyfunction]
#[pyo3(signature = (name, overrides = Vec::new(), seed = None, out_dir = None))]
pub fn run_scenario(
    name: &str,
    overrides: Vec<(String, String)>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> PyResult<(i32, String)> {
    let mut cfg = ScenarioConfig::new(name);
    let config_err = |e: ScenarioError| PyValueError::new_err(e.to_string());
    for (k, v) in &overrides {
        cfg.set(k, v).map_err(config_err)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let write = out_dir.is_some();
    cfg.out_dir = out_dir;
    let result = if write { scenarios::run_scenario(&cfg) } else { scenarios::evaluate_scenario(&cfg) };
    let code = scenarios::exit_code(&result);
    match result {
        Ok(report) => Ok((code, report.to_toml().map_err(numerical)?)),
        Err(e @ (ScenarioError::UnknownScenario(_) | ScenarioError::Config(_))) => Err(config_err(e)),
        Err(e) => Err(numerical(e)),
    }
}

#[pymodule]
fn prequant_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConnection>()?;
    m.add_class::<PyGaugeFunction>()?;
    m.add_class::<PySpectrum>()?;
    m.add_function(wrap_pyfunction!(recover_gauge, m)?)?;
    m.add_function(wrap_pyfunction!(connection_periods, m)?)?;
    m.add_function(wrap_pyfunction!(bs_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(riemann_roch, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
