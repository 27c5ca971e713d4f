use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::chart::Chart;
use super::field::fd_step;
use super::{GeometryError, Result, FD_STEP};

type MapFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// Smooth map between charts, in coordinates. The Jacobian is
/// `target_dim x source_dim`.
#[derive(Clone)]
pub struct SmoothMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    eval: Arc<MapFn>,
    jac: Option<Arc<JacFn>>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("source", &self.source.name())
            .field("target", &self.target.name())
            .field("analytic_jacobian", &self.jac.is_some())
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(source: Arc<Chart>, target: Arc<Chart>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::fallible(source, target, move |x| Ok(f(x)))
    }

    pub fn fallible<F>(source: Arc<Chart>, target: Arc<Chart>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        SmoothMap {
            source,
            target,
            eval: Arc::new(f),
            jac: None,
        }
    }

    pub fn with_jacobian<J>(self, j: J) -> Self
    where
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.with_jacobian_fallible(move |x| Ok(j(x)))
    }

    pub fn with_jacobian_fallible<J>(mut self, j: J) -> Self
    where
        J: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.jac = Some(Arc::new(j));
        self
    }

    pub fn identity(chart: Arc<Chart>) -> Self {
        let n = chart.dim();
        SmoothMap::new(chart.clone(), chart, |x| x.to_vec()).with_jacobian(move |_| DMatrix::identity(n, n))
    }

    /// `x -> x + offset` on one chart.
    pub fn translation(chart: Arc<Chart>, offset: Vec<f64>) -> Self {
        let n = chart.dim();
        SmoothMap::new(chart.clone(), chart, move |x| x.iter().zip(&offset).map(|(a, b)| a + b).collect())
            .with_jacobian(move |_| DMatrix::identity(n, n))
    }

    /// Affine map `u -> base + matrix * u`.
    pub fn affine(source: Arc<Chart>, target: Arc<Chart>, base: Vec<f64>, matrix: DMatrix<f64>) -> Self {
        let m = matrix.clone();
        SmoothMap::new(source, target, move |u| {
            let mut y = base.clone();
            for i in 0..y.len() {
                for (j, uj) in u.iter().enumerate() {
                    y[i] += m[(i, j)] * uj;
                }
            }
            y
        })
        .with_jacobian(move |_| matrix.clone())
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac.is_some()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = (self.eval)(x)?;
        if y.len() != self.target.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.target.dim(),
                found: y.len(),
            });
        }
        Ok(y)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match &self.jac {
            Some(j) => j(x),
            None => self.fd_jacobian(x, FD_STEP),
        }
    }

    /// Central-difference Jacobian; differences of periodic target
    /// coordinates are wrapped to the principal range.
    pub fn fd_jacobian(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let (m, n) = (self.target.dim(), x.len());
        let mut out = DMatrix::zeros(m, n);
        let mut xp = x.to_vec();
        for j in 0..n {
            let step = fd_step(h, x[j]);
            xp[j] = x[j] + step;
            let fp = (self.eval)(&xp)?;
            xp[j] = x[j] - step;
            let fm = (self.eval)(&xp)?;
            xp[j] = x[j];
            for i in 0..m {
                let mut diff = fp[i] - fm[i];
                if let Some(p) = self.target.period(i) {
                    diff -= p * (diff / p).round();
                }
                out[(i, j)] = diff / (2.0 * step);
            }
        }
        Ok(out)
    }

    /// Largest discrepancy between the analytic and finite-difference
    /// Jacobians over the samples; zero when no analytic Jacobian is set.
    pub fn jacobian_discrepancy(&self, samples: &[Vec<f64>], h: f64) -> Result<f64> {
        let Some(j) = &self.jac else { return Ok(0.0) };
        let mut worst = 0.0f64;
        for x in samples {
            let a = j(x)?;
            let b = self.fd_jacobian(x, h).map_err(|e| GeometryError::Jacobian(e.to_string()))?;
            worst = worst.max((a - b).abs().max());
        }
        Ok(worst)
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &SmoothMap) -> Result<SmoothMap> {
        self.target.ensure_same(&next.source)?;
        let (a, b) = (self.clone(), next.clone());
        let (a2, b2) = (self.clone(), next.clone());
        Ok(SmoothMap::fallible(self.source.clone(), next.target.clone(), move |x| b.apply(&a.apply(x)?))
            .with_jacobian_fallible(move |x| {
                let y = a2.apply(x)?;
                Ok(b2.jacobian(&y)? * a2.jacobian(x)?)
            }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CoordinateBound;

    #[test]
    fn fd_jacobian_wraps_periodic_targets() {
        let circle = Chart::circle();
        let t = Chart::torus();
        // theta1 reduced into [0, 2pi): jumps at the seam.
        let m = SmoothMap::new(t, circle, |x| vec![x[0].rem_euclid(2.0 * std::f64::consts::PI)]);
        let j = m.fd_jacobian(&[1e-7, 0.3], 1e-5).unwrap();
        assert!((j[(0, 0)] - 1.0).abs() < 1e-8);
        assert!(j[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn composition_multiplies_jacobians() {
        let b = Chart::coordinate_box(
            "box",
            vec![CoordinateBound::Interval { lo: -2.0, hi: 2.0 }, CoordinateBound::Interval { lo: -2.0, hi: 2.0 }],
        )
        .unwrap();
        let sq = SmoothMap::new(b.clone(), b.clone(), |x| vec![x[0] * x[0], x[0] * x[1]]);
        let sh = SmoothMap::new(b.clone(), b.clone(), |x| vec![x[1].sin(), x[0] + x[1]]);
        let c = sq.then(&sh).unwrap();
        let x = [0.4, -0.3];
        let a = c.jacobian(&x).unwrap();
        let f = c.fd_jacobian(&x, 1e-5).unwrap();
        assert!((a - f).abs().max() < 1e-9);
    }
}
