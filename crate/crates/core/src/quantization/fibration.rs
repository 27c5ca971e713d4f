use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{QuantizationError, Result};
use crate::bundle::{holonomy, PrequantumConnection};
use crate::geometry::{Chart, ChartKind, PathInChart};

const SINGULAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FibrationKind {
    /// Leaves `z = b` of the height function, `b` in `(-1, 1)`.
    SphereHeight,
    /// Leaves `theta2 = b` of the torus, `b` in `[0, 2pi)`.
    TorusLinear,
}

/// Foliation of a model surface by closed Lagrangian leaves, one generator
/// loop per leaf.
#[derive(Debug, Clone)]
pub struct LagrangianFibration {
    chart: Arc<Chart>,
    kind: FibrationKind,
    lo: f64,
    hi: f64,
    singular: Vec<f64>,
}

impl LagrangianFibration {
    pub fn sphere_height(chart: Arc<Chart>) -> Result<Self> {
        if chart.kind() != ChartKind::SphereCyl {
            return Err(QuantizationError::Unsupported(format!("height fibration on `{}`", chart.name())));
        }
        Ok(LagrangianFibration { chart, kind: FibrationKind::SphereHeight, lo: -1.0, hi: 1.0, singular: vec![-1.0, 1.0] })
    }

    pub fn torus_linear(chart: Arc<Chart>) -> Result<Self> {
        if chart.kind() != ChartKind::Torus {
            return Err(QuantizationError::Unsupported(format!("linear fibration on `{}`", chart.name())));
        }
        Ok(LagrangianFibration { chart, kind: FibrationKind::TorusLinear, lo: 0.0, hi: 2.0 * PI, singular: vec![] })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn kind(&self) -> FibrationKind {
        self.kind
    }

    pub fn base(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn is_periodic(&self) -> bool {
        self.kind == FibrationKind::TorusLinear
    }

    pub fn singular_levels(&self) -> &[f64] {
        &self.singular
    }

    /// Base interval on which leaves stay clear of the pole band.
    pub fn regular_range(&self) -> (f64, f64) {
        match self.chart.pole_band() {
            Some(band) => {
                let d = band * (1.0 + 1e-9);
                (self.lo + d, self.hi - d)
            }
            None => (self.lo, self.hi),
        }
    }

    pub fn check_regular(&self, b: f64) -> Result<()> {
        if let Some(&level) = self.singular.iter().find(|s| (b - **s).abs() <= SINGULAR_TOL) {
            return Err(QuantizationError::SingularLevel { b, level });
        }
        if !self.is_periodic() && !(self.lo..=self.hi).contains(&b) {
            return Err(QuantizationError::OutOfBase { b, lo: self.lo, hi: self.hi });
        }
        Ok(())
    }

    /// Closed generator of the leaf over `b`.
    pub fn leaf_loop(&self, b: f64) -> Result<PathInChart> {
        self.check_regular(b)?;
        let path = match self.kind {
            FibrationKind::SphereHeight => PathInChart::latitude(self.chart.clone(), b),
            FibrationKind::TorusLinear => PathInChart::torus_circle(self.chart.clone(), 0, b),
        };
        path.check_in_chart(16)?;
        Ok(path)
    }
}

/// Holonomy of the leaf generator over a regular base value.
pub fn leaf_holonomy(conn: &PrequantumConnection, fib: &LagrangianFibration, b: f64) -> Result<Complex64> {
    conn.chart().ensure_same(fib.chart())?;
    Ok(holonomy(conn, &fib.leaf_loop(b)?)?)
}
