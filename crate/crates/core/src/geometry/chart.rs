use std::f64::consts::PI;
use std::sync::Arc;

use super::{GeometryError, Result};

/// Slack used when testing closed interval bounds.
const BOUND_SLACK: f64 = 1e-12;

/// Default pole exclusion band on the cylindrical sphere chart.
pub const DEFAULT_POLE_BAND: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordinateBound {
    Interval { lo: f64, hi: f64 },
    Periodic { period: f64 },
}

impl CoordinateBound {
    fn width(&self) -> f64 {
        match *self {
            CoordinateBound::Interval { lo, hi } => hi - lo,
            CoordinateBound::Periodic { period } => period,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartKind {
    /// Ball of the given radius about the origin, coordinates `(x1.., y1..)`.
    Disk { radius: f64 },
    /// Sphere in cylindrical coordinates `(theta, z)`.
    SphereCyl,
    /// Flat torus `(theta1, theta2)`.
    Torus,
    /// Unit circle `(theta)`, used as a target for circle-valued maps.
    Circle,
    /// Plain coordinate box, used for parameter domains.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    North,
    South,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    name: String,
    kind: ChartKind,
    bounds: Vec<CoordinateBound>,
    exclusion_band: Option<Vec<Option<f64>>>,
}

impl Chart {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn new(
        name: impl Into<String>,
        kind: ChartKind,
        bounds: Vec<CoordinateBound>,
        exclusion_band: Option<Vec<Option<f64>>>,
    ) -> Result<Self> {
        let name = name.into();
        let dim = bounds.len();
        if !matches!(dim, 1 | 2 | 4) {
            return Err(GeometryError::InvalidChart(format!(
                "`{name}` has dimension {dim}; supported dimensions are 1, 2 and 4"
            )));
        }
        for (i, b) in bounds.iter().enumerate() {
            match *b {
                CoordinateBound::Periodic { period } if !(period > 0.0) => {
                    return Err(GeometryError::InvalidChart(format!(
                        "coordinate {i} of `{name}` has non-positive period {period}"
                    )));
                }
                CoordinateBound::Interval { lo, hi } if !(hi > lo) => {
                    return Err(GeometryError::InvalidChart(format!(
                        "coordinate {i} of `{name}` has empty interval [{lo}, {hi}]"
                    )));
                }
                _ => {}
            }
        }
        if let Some(band) = &exclusion_band {
            if band.len() != dim {
                return Err(GeometryError::InvalidChart(format!(
                    "exclusion band of `{name}` has {} entries for {dim} coordinates",
                    band.len()
                )));
            }
            for (i, (delta, b)) in band.iter().zip(&bounds).enumerate() {
                if let Some(delta) = *delta {
                    let half = 0.5 * b.width();
                    if !(delta > 0.0 && delta < half) {
                        return Err(GeometryError::InvalidChart(format!(
                            "exclusion band {delta} on coordinate {i} of `{name}` must lie in (0, {half})"
                        )));
                    }
                }
            }
        }
        if let ChartKind::Disk { radius } = kind {
            if !(radius > 0.0) || !dim.is_multiple_of(2) {
                return Err(GeometryError::InvalidChart(format!(
                    "disk `{name}` needs positive radius and even dimension"
                )));
            }
        }
        Ok(Chart {
            name,
            kind,
            bounds,
            exclusion_band,
        })
    }

    /// Ball of radius `radius` in `R^dim` (dim 2 or 4).
    pub fn disk(dim: usize, radius: f64) -> Result<Arc<Chart>> {
        let name = if dim == 2 { "disk".to_string() } else { format!("disk{dim}") };
        Self::disk_named(name, dim, radius)
    }

    pub fn disk_named(name: impl Into<String>, dim: usize, radius: f64) -> Result<Arc<Chart>> {
        let bounds = vec![CoordinateBound::Interval { lo: -radius, hi: radius }; dim];
        Chart::new(name, ChartKind::Disk { radius }, bounds, None).map(Arc::new)
    }

    /// Cylindrical sphere chart with pole exclusion band `delta`.
    pub fn sphere_cyl(delta: f64) -> Result<Arc<Chart>> {
        Chart::new(
            "sphere",
            ChartKind::SphereCyl,
            vec![
                CoordinateBound::Periodic { period: 2.0 * PI },
                CoordinateBound::Interval { lo: -1.0, hi: 1.0 },
            ],
            Some(vec![None, Some(delta)]),
        )
        .map(Arc::new)
    }

    pub fn sphere() -> Arc<Chart> {
        Self::sphere_cyl(DEFAULT_POLE_BAND).expect("default pole band is valid")
    }

    pub fn torus() -> Arc<Chart> {
        Arc::new(
            Chart::new(
                "torus",
                ChartKind::Torus,
                vec![CoordinateBound::Periodic { period: 2.0 * PI }; 2],
                None,
            )
            .expect("torus chart is valid"),
        )
    }

    pub fn circle() -> Arc<Chart> {
        Arc::new(
            Chart::new(
                "circle",
                ChartKind::Circle,
                vec![CoordinateBound::Periodic { period: 2.0 * PI }],
                None,
            )
            .expect("circle chart is valid"),
        )
    }

    pub fn coordinate_box(name: impl Into<String>, bounds: Vec<CoordinateBound>) -> Result<Arc<Chart>> {
        Chart::new(name, ChartKind::Box, bounds, None).map(Arc::new)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[CoordinateBound] {
        &self.bounds
    }

    pub fn band(&self, coord: usize) -> Option<f64> {
        self.exclusion_band.as_ref().and_then(|b| b[coord])
    }

    /// Pole band on the sphere chart, `None` elsewhere.
    pub fn pole_band(&self) -> Option<f64> {
        match self.kind {
            ChartKind::SphereCyl => self.band(1),
            _ => None,
        }
    }

    pub fn period(&self, coord: usize) -> Option<f64> {
        match self.bounds[coord] {
            CoordinateBound::Periodic { period } => Some(period),
            CoordinateBound::Interval { .. } => None,
        }
    }

    pub fn is_periodic(&self, coord: usize) -> bool {
        self.period(coord).is_some()
    }

    /// Reduces periodic coordinates into `[0, period)`.
    pub fn reduce(&self, coords: &[f64]) -> Vec<f64> {
        coords
            .iter()
            .zip(&self.bounds)
            .map(|(&x, b)| match *b {
                CoordinateBound::Periodic { period } => {
                    let r = x.rem_euclid(period);
                    if r >= period {
                        0.0
                    } else {
                        r
                    }
                }
                CoordinateBound::Interval { .. } => x,
            })
            .collect()
    }

    /// Bounds test ignoring the exclusion band.
    pub fn in_bounds(&self, coords: &[f64]) -> bool {
        if coords.len() != self.dim() || coords.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let intervals_ok = coords.iter().zip(&self.bounds).all(|(&x, b)| match *b {
            CoordinateBound::Interval { lo, hi } => x >= lo - BOUND_SLACK && x <= hi + BOUND_SLACK,
            CoordinateBound::Periodic { .. } => true,
        });
        if !intervals_ok {
            return false;
        }
        match self.kind {
            ChartKind::Disk { radius } => {
                coords.iter().map(|x| x * x).sum::<f64>() <= radius * radius * (1.0 + BOUND_SLACK)
            }
            _ => true,
        }
    }

    /// True when the point is in bounds and outside every exclusion band.
    pub fn contains(&self, coords: &[f64]) -> bool {
        if !self.in_bounds(coords) {
            return false;
        }
        match &self.exclusion_band {
            None => true,
            Some(band) => coords.iter().zip(&self.bounds).zip(band).all(|((&x, b), d)| {
                match (*b, *d) {
                    (CoordinateBound::Interval { lo, hi }, Some(delta)) => {
                        x >= lo + delta && x <= hi - delta
                    }
                    _ => true,
                }
            }),
        }
    }

    pub fn check(&self, coords: &[f64]) -> Result<()> {
        if self.contains(coords) {
            Ok(())
        } else {
            Err(self.domain_error(coords))
        }
    }

    pub fn check_bounds(&self, coords: &[f64]) -> Result<()> {
        if self.in_bounds(coords) {
            Ok(())
        } else {
            Err(self.domain_error(coords))
        }
    }

    pub(crate) fn domain_error(&self, coords: &[f64]) -> GeometryError {
        GeometryError::Domain {
            chart: self.name.clone(),
            coords: coords.to_vec(),
        }
    }

    pub fn ensure_same(&self, other: &Chart) -> Result<()> {
        if self.name == other.name && self.dim() == other.dim() {
            Ok(())
        } else {
            Err(GeometryError::ChartMismatch {
                expected: self.name.clone(),
                found: other.name.clone(),
            })
        }
    }

    /// Sign relating the coordinate orientation to the symplectic orientation.
    ///
    /// On the sphere the coordinates are ordered `(theta, z)` while the area
    /// form `dz ^ dtheta` is declared positive.
    pub fn orientation_sign(&self) -> f64 {
        match self.kind {
            ChartKind::SphereCyl => -1.0,
            _ => 1.0,
        }
    }

    /// Centre of a star-shaped chart.
    pub fn star_center(&self) -> Option<Vec<f64>> {
        match self.kind {
            ChartKind::Disk { .. } => Some(vec![0.0; self.dim()]),
            _ => None,
        }
    }

    pub fn genus(&self) -> Option<i64> {
        match self.kind {
            ChartKind::SphereCyl => Some(0),
            ChartKind::Torus => Some(1),
            _ => None,
        }
    }

    pub fn is_compact_surface(&self) -> bool {
        self.genus().is_some()
    }
}

/// A point tagged with its chart; periodic coordinates are stored reduced.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    chart: String,
    coords: Vec<f64>,
}

impl Point {
    pub fn new(chart: &Chart, coords: &[f64]) -> Result<Self> {
        if coords.len() != chart.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: chart.dim(),
                found: coords.len(),
            });
        }
        let coords = chart.reduce(coords);
        chart.check(&coords)?;
        Ok(Point {
            chart: chart.name().to_string(),
            coords,
        })
    }

    pub fn chart(&self) -> &str {
        &self.chart
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_charts_validate() {
        assert_eq!(Chart::sphere().dim(), 2);
        assert_eq!(Chart::torus().dim(), 2);
        assert_eq!(Chart::disk(4, 1.0).unwrap().dim(), 4);
        assert!(Chart::disk(3, 1.0).is_err());
        assert!(Chart::sphere_cyl(0.0).is_err());
        assert!(Chart::sphere_cyl(1.0).is_err());
        assert!(Chart::coordinate_box("b", vec![CoordinateBound::Periodic { period: -1.0 }]).is_err());
    }

    #[test]
    fn pole_band_excludes_points() {
        let s = Chart::sphere();
        assert!(s.contains(&[0.3, 0.999]));
        assert!(!s.contains(&[0.3, 0.9995]));
        assert!(s.in_bounds(&[0.3, 0.9995]));
        assert!(!s.in_bounds(&[0.3, 1.1]));
        assert!(matches!(s.check(&[0.0, -0.99999]), Err(GeometryError::Domain { .. })));
    }

    #[test]
    fn reduction_modulo_periods() {
        let t = Chart::torus();
        let r = t.reduce(&[-0.5, 7.0]);
        assert!((r[0] - (2.0 * PI - 0.5)).abs() < 1e-15);
        assert!((r[1] - (7.0 - 2.0 * PI)).abs() < 1e-15);
        let p = Point::new(&t, &[-0.5, 7.0]).unwrap();
        assert!(p.coords()[0] >= 0.0 && p.coords()[0] < 2.0 * PI);
    }

    #[test]
    fn disk_is_a_ball() {
        let d = Chart::disk(2, 1.0).unwrap();
        assert!(d.contains(&[0.7, 0.7]));
        assert!(!d.contains(&[0.8, 0.8]));
        assert_eq!(d.star_center(), Some(vec![0.0, 0.0]));
    }
}
