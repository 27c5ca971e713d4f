use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::chart::Chart;
use super::{GeometryError, Result};

type CurveFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// Which potential region applies on a parameter subinterval.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpan {
    pub start: f64,
    pub end: f64,
    pub region: String,
}

/// Parametrised curve `[0, 1] -> chart`. Coordinates along the curve are not
/// reduced, so a loop around a periodic direction ends one period away from
/// where it started.
#[derive(Clone)]
pub struct PathInChart {
    chart: Arc<Chart>,
    position: Arc<CurveFn>,
    velocity: Option<Arc<CurveFn>>,
    closed: bool,
    breaks: Vec<f64>,
    schedule: Vec<RegionSpan>,
    label: String,
}

impl fmt::Debug for PathInChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathInChart")
            .field("label", &self.label)
            .field("chart", &self.chart.name())
            .field("closed", &self.closed)
            .field("schedule", &self.schedule)
            .finish()
    }
}

impl PathInChart {
    pub fn new<F>(chart: Arc<Chart>, closed: bool, position: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        PathInChart {
            chart,
            position: Arc::new(position),
            velocity: None,
            closed,
            breaks: Vec::new(),
            schedule: Vec::new(),
            label: "path".into(),
        }
    }

    pub fn with_velocity<F>(mut self, velocity: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        self.velocity = Some(Arc::new(velocity));
        self
    }

    /// Parameters in `(0, 1)` where the velocity may jump.
    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|&b| b > 0.0 && b < 1.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        self.breaks = breaks;
        self
    }

    pub fn with_schedule(mut self, schedule: Vec<RegionSpan>) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Latitude circle `z = const` on the sphere, theta increasing.
    pub fn latitude(chart: Arc<Chart>, z: f64) -> Self {
        PathInChart::new(chart, true, move |t| vec![2.0 * PI * t, z])
            .with_velocity(|_| vec![2.0 * PI, 0.0])
            .with_label(format!("latitude z={z}"))
    }

    /// Generator circle of the torus along `axis` at the other coordinate `level`.
    pub fn torus_circle(chart: Arc<Chart>, axis: usize, level: f64) -> Self {
        let other = 1 - axis;
        PathInChart::new(chart, true, move |t| {
            let mut p = vec![0.0; 2];
            p[axis] = 2.0 * PI * t;
            p[other] = level;
            p
        })
        .with_velocity(move |_| {
            let mut v = vec![0.0; 2];
            v[axis] = 2.0 * PI;
            v
        })
        .with_label(format!("theta{}-circle at {level}", axis + 1))
    }

    pub fn segment(chart: Arc<Chart>, a: Vec<f64>, b: Vec<f64>) -> Self {
        let d: Vec<f64> = b.iter().zip(&a).map(|(u, v)| u - v).collect();
        let d2 = d.clone();
        PathInChart::new(chart, false, move |t| a.iter().zip(&d).map(|(p, q)| p + t * q).collect())
            .with_velocity(move |_| d2.clone())
            .with_label("segment")
    }

    /// Piecewise-linear path through `vertices`; when `closed`, the last
    /// vertex is joined back to the first.
    pub fn polyline(chart: Arc<Chart>, vertices: Vec<Vec<f64>>, closed: bool) -> Self {
        let mut pts = vertices;
        if closed {
            pts.push(pts[0].clone());
        }
        let n = pts.len() - 1;
        let pts = Arc::new(pts);
        let breaks = (1..n).map(|i| i as f64 / n as f64).collect();
        let (p1, p2) = (pts.clone(), pts);
        let leg = move |t: f64| -> (usize, f64) {
            let s = (t * n as f64).clamp(0.0, n as f64);
            let i = (s.floor() as usize).min(n - 1);
            (i, s - i as f64)
        };
        PathInChart::new(chart, closed, move |t| {
            let (i, u) = leg(t);
            p1[i].iter().zip(&p1[i + 1]).map(|(a, b)| a + u * (b - a)).collect()
        })
        .with_velocity(move |t| {
            let (i, _) = leg(t);
            p2[i].iter().zip(&p2[i + 1]).map(|(a, b)| n as f64 * (b - a)).collect()
        })
        .with_breaks(breaks)
        .with_label("polyline")
    }

    /// Counter-clockwise boundary of the coordinate rectangle `[lo, hi]`.
    pub fn rectangle_boundary(chart: Arc<Chart>, lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self::polyline(
            chart,
            vec![vec![lo[0], lo[1]], vec![hi[0], lo[1]], vec![hi[0], hi[1]], vec![lo[0], hi[1]]],
            true,
        )
        .with_label("rectangle boundary")
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn schedule(&self) -> &[RegionSpan] {
        &self.schedule
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        (self.position)(t)
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        match &self.velocity {
            Some(v) => v(t),
            None => {
                let h = 1e-6;
                let (a, b) = ((t - h).max(0.0), (t + h).min(1.0));
                let (pa, pb) = (self.point(a), self.point(b));
                pa.iter().zip(&pb).map(|(u, v)| (v - u) / (b - a)).collect()
            }
        }
    }

    /// Distance between end and start, modulo periods.
    pub fn closure_gap(&self) -> f64 {
        let (a, b) = (self.point(0.0), self.point(1.0));
        a.iter()
            .zip(&b)
            .enumerate()
            .map(|(i, (u, v))| {
                let mut d = v - u;
                if let Some(p) = self.chart.period(i) {
                    d -= p * (d / p).round();
                }
                d.abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn validate_closed(&self) -> Result<()> {
        if !self.closed {
            return Err(GeometryError::Evaluation(format!("path `{}` is not closed", self.label)));
        }
        let gap = self.closure_gap();
        if gap > 1e-9 {
            return Err(GeometryError::Evaluation(format!(
                "path `{}` is flagged closed but ends {gap:e} away from its start",
                self.label
            )));
        }
        Ok(())
    }

    /// Parameter pieces on which the integrand is smooth: splits at velocity
    /// breaks and region switches.
    pub fn pieces(&self) -> Vec<(f64, f64, Option<String>)> {
        let mut cuts: Vec<f64> = vec![0.0, 1.0];
        cuts.extend(self.breaks.iter().copied());
        for s in &self.schedule {
            cuts.push(s.start);
            cuts.push(s.end);
        }
        cuts.retain(|c| (0.0..=1.0).contains(c));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        cuts.windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let region = self
                    .schedule
                    .iter()
                    .find(|s| s.start <= mid && mid <= s.end)
                    .map(|s| s.region.clone());
                (w[0], w[1], region)
            })
            .collect()
    }

    /// True when the trapezoid rule applies: a closed loop with no breaks
    /// and at most one region.
    pub fn is_smooth_loop(&self) -> bool {
        self.closed && self.breaks.is_empty() && self.schedule.len() <= 1
    }

    /// Uniform sample of points along the path (endpoints included).
    pub fn sample(&self, n: usize) -> Vec<Vec<f64>> {
        (0..=n).map(|i| self.point(i as f64 / n as f64)).collect()
    }

    /// Checks every sampled point lies inside the chart (pole band included).
    pub fn check_in_chart(&self, n: usize) -> Result<()> {
        for p in self.sample(n) {
            self.chart.check(&self.chart.reduce(&p))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latitude_is_closed_modulo_period() {
        let p = PathInChart::latitude(Chart::sphere(), 0.3);
        assert!(p.validate_closed().is_ok());
        assert!(p.is_smooth_loop());
    }

    #[test]
    fn polyline_velocity_is_piecewise_constant() {
        let b = Chart::disk(2, 2.0).unwrap();
        let p = PathInChart::rectangle_boundary(b, [0.0, 0.0], [1.0, 0.5]);
        assert_eq!(p.breaks().len(), 3);
        assert_eq!(p.velocity(0.1), vec![4.0, 0.0]);
        assert_eq!(p.velocity(0.3), vec![0.0, 2.0]);
        assert!(p.validate_closed().is_ok());
        assert_eq!(p.pieces().len(), 4);
    }

    #[test]
    fn open_path_is_rejected_as_loop() {
        let s = Chart::sphere();
        let p = PathInChart::segment(s, vec![0.0, 0.0], vec![1.0, 0.5]);
        assert!(p.validate_closed().is_err());
    }
}
