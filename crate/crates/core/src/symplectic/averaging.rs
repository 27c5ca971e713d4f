use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Result, SymplecticError};
use crate::geometry::{
    all_multi_indices, pullback_form, sample_points, Chart, DifferentialForm, GeometryError,
    ScalarField, SmoothMap,
};

type ActionFn = dyn Fn(f64) -> SmoothMap + Send + Sync;

/// Circle action `g -> a_g` on a chart, `g` in `[0, 2pi)`.
#[derive(Clone)]
pub struct CircleAction {
    chart: Arc<Chart>,
    act: Arc<ActionFn>,
    label: String,
}

impl fmt::Debug for CircleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleAction").field("label", &self.label).field("chart", &self.chart.name()).finish()
    }
}

impl CircleAction {
    pub fn new<F>(chart: Arc<Chart>, label: impl Into<String>, act: F) -> Self
    where
        F: Fn(f64) -> SmoothMap + Send + Sync + 'static,
    {
        CircleAction { chart, act: Arc::new(act), label: label.into() }
    }

    /// Translation `x_coord -> x_coord + g` along a periodic coordinate.
    pub fn rotation(chart: Arc<Chart>, coord: usize) -> Result<Self> {
        if coord >= chart.dim() || !chart.is_periodic(coord) {
            return Err(SymplecticError::Unsupported(format!(
                "rotation along non-periodic coordinate {coord} of `{}`",
                chart.name()
            )));
        }
        let c = chart.clone();
        Ok(Self::new(chart, format!("rotation of coordinate {coord}"), move |g| {
            let mut offset = vec![0.0; c.dim()];
            offset[coord] = g;
            SmoothMap::translation(c.clone(), offset)
        }))
    }

    /// Simultaneous rotation by `g` in each plane `(x_i, x_{n+i})` of a disk.
    pub fn planar_rotation(chart: Arc<Chart>) -> Self {
        let c = chart.clone();
        Self::new(chart, "planar rotation", move |g| {
            let dim = c.dim();
            let n = dim / 2;
            let (s, co) = g.sin_cos();
            let mut m = DMatrix::zeros(dim, dim);
            for i in 0..n {
                m[(i, i)] = co;
                m[(i, n + i)] = -s;
                m[(n + i, i)] = s;
                m[(n + i, n + i)] = co;
            }
            SmoothMap::affine(c.clone(), c.clone(), vec![0.0; dim], m)
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn map(&self, g: f64) -> SmoothMap {
        (self.act)(g)
    }

    /// `sup |a_g^* f - f|` over samples and the given group elements.
    pub fn invariance_defect(&self, f: &DifferentialForm, samples: &[Vec<f64>], angles: &[f64]) -> Result<f64> {
        let mut worst = 0.0f64;
        for &g in angles {
            let pulled = pullback_form(&self.map(g), f)?;
            worst = worst.max(pulled.max_difference(f, samples)?);
        }
        Ok(worst)
    }
}

fn check_preserves_chart(action: &CircleAction, angles: &[f64]) -> Result<()> {
    let chart = action.chart();
    let probes = sample_points(chart, 16, 0xac7, 0.0);
    for &g in angles {
        let m = action.map(g);
        for x in &probes {
            let y = m.apply(x)?;
            if !chart.in_bounds(&chart.reduce(&y)) {
                return Err(GeometryError::Domain { chart: chart.name().to_string(), coords: y }.into());
            }
        }
    }
    Ok(())
}

fn average_at(action: &CircleAction, f: &DifferentialForm, angles: Vec<f64>) -> Result<DifferentialForm> {
    action.chart().ensure_same(f.chart())?;
    check_preserves_chart(action, &angles)?;
    let pulled: Vec<DifferentialForm> =
        angles.iter().map(|&g| pullback_form(&action.map(g), f)).collect::<std::result::Result<_, _>>()?;
    let components = all_multi_indices(f.chart().dim(), f.degree());
    let n = components.len();
    let w = 1.0 / angles.len() as f64;
    Ok(DifferentialForm::from_batch(f.chart().clone(), f.degree(), components, f.reality(), move |x| {
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for p in &pulled {
            for (a, v) in acc.iter_mut().zip(p.eval_raw(x)?) {
                *a += v;
            }
        }
        Ok(acc.into_iter().map(|v| v * w).collect())
    })?)
}

/// Haar average `int_{S^1} a_g^* f dg / 2pi`, by the trapezoid rule.
pub fn average_over_circle(action: &CircleAction, f: &DifferentialForm, nodes: usize) -> Result<DifferentialForm> {
    if nodes < 8 {
        return Err(SymplecticError::TooFewNodes(nodes));
    }
    average_at(action, f, (0..nodes).map(|j| 2.0 * PI * j as f64 / nodes as f64).collect())
}

/// Average over the cyclic subgroup of order `m`, generated by `2pi/m`.
pub fn average_over_cyclic(action: &CircleAction, f: &DifferentialForm, m: usize) -> Result<DifferentialForm> {
    if m == 0 {
        return Err(SymplecticError::Unsupported("cyclic group of order 0".into()));
    }
    average_at(action, f, (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect())
}

pub fn average_scalar_over_circle(action: &CircleAction, f: &ScalarField, nodes: usize) -> Result<ScalarField> {
    let form = DifferentialForm::scalar(action.chart().clone(), f.clone());
    let avg = average_over_circle(action, &form, nodes)?;
    Ok(avg.coefficient(&[]).expect("0-form has a single coefficient"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_rotation() -> CircleAction {
        CircleAction::rotation(Chart::sphere(), 0).unwrap()
    }

    #[test]
    fn fourier_mode_averages_to_zero() {
        let phi = ScalarField::real(|x| x[0].sin() * (1.0 - x[1] * x[1]));
        let avg = average_scalar_over_circle(&sphere_rotation(), &phi, 16).unwrap();
        assert!(avg.value(&[0.4, 0.3]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn analytic_circle_mean() {
        let phi = ScalarField::real(|x| (2.0 + x[0].cos()) * (1.0 - x[1] * x[1]));
        let avg = average_scalar_over_circle(&sphere_rotation(), &phi, 16).unwrap();
        for &(t, z) in &[(0.1, 0.2), (3.0, -0.8)] {
            // oracle: (1/2pi) int (2 + cos) = 2
            assert!((avg.value(&[t, z]).unwrap().re - 2.0 * (1.0 - z * z)).abs() < 1e-14);
        }
    }

    #[test]
    fn invariant_input_is_unchanged_and_idempotent() {
        let phi = ScalarField::real(|x| x[1].powi(3));
        let act = sphere_rotation();
        let avg = average_scalar_over_circle(&act, &phi, 8).unwrap();
        let twice = average_scalar_over_circle(&act, &avg, 8).unwrap();
        let x = [1.0, 0.6];
        assert!((avg.value(&x).unwrap() - phi.value(&x).unwrap()).norm() < 1e-12);
        assert!((twice.value(&x).unwrap() - avg.value(&x).unwrap()).norm() < 1e-12);
        assert!(matches!(average_scalar_over_circle(&act, &phi, 4), Err(SymplecticError::TooFewNodes(4))));
    }

    #[test]
    fn planar_rotation_averages_forms() {
        let d = Chart::disk(2, 1.0).unwrap();
        let act = CircleAction::planar_rotation(d.clone());
        let dx = DifferentialForm::basis(d.clone(), &[0], 1.0).unwrap();
        let avg = average_over_circle(&act, &dx, 16).unwrap();
        assert!(avg.sup_norm(&sample_points(&d, 10, 1, 0.0)).unwrap() < 1e-15);
        let area = DifferentialForm::basis(d.clone(), &[0, 1], 1.0).unwrap();
        let samples = sample_points(&d, 10, 2, 0.0);
        assert!(act.invariance_defect(&area, &samples, &[0.3, 2.0]).unwrap() < 1e-15);
    }
}
