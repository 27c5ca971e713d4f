use std::sync::Arc;

use nalgebra::DMatrix;

use super::forms::{MoserPath, SymplecticForm};
use super::frame::symplectic_frame;
use super::moser::FlowMap;
use super::primitive::poincare_primitive;
use super::{Result, SymplecticError};
use crate::geometry::{pullback_form, sample_points, Chart, GeometryError, SmoothMap};

/// Local Darboux coordinates `Phi = L o Psi` on a ball of radius `r`, where
/// `L(u) = p + T u` normalises `w` at `p` and `Psi` is the Moser flow from the
/// standard form to `L^* w`. `Psi` fixes the origin.
#[derive(Debug, Clone)]
pub struct DarbouxChart {
    map: SmoothMap,
    frame: DMatrix<f64>,
    radius: f64,
    flow: FlowMap,
}

impl DarbouxChart {
    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn flow(&self) -> &FlowMap {
        &self.flow
    }

    /// `sup |Phi^* w - w_std|` over the samples of the ball.
    pub fn pullback_residual(&self, omega: &SymplecticForm, samples: &[Vec<f64>]) -> Result<f64> {
        let pulled = pullback_form(&self.map, omega.form())?;
        let std = SymplecticForm::standard(self.map.source().clone())?;
        Ok(pulled.max_difference(std.form(), samples)?)
    }
}

fn shrink(r: f64) -> SymplecticError {
    SymplecticError::ShrinkRadius { radius: r, suggested: r / 2.0 }
}

/// Darboux chart for `omega` around `p` on the ball of radius `r`.
pub fn darboux_chart(omega: &SymplecticForm, p: &[f64], r: f64, steps: usize) -> Result<DarbouxChart> {
    let chart = omega.chart().clone();
    chart.check(p)?;
    let dim = chart.dim();
    let frame = symplectic_frame(&omega.matrix_at(p)?)?;
    let ball = Chart::disk_named("darboux-ball", dim, r)?;
    let work = Chart::disk_named("darboux-work", dim, 1.5 * r)?;
    let linear = SmoothMap::affine(work.clone(), chart.clone(), p.to_vec(), frame.clone());
    let pulled = pullback_form(&linear, omega.form())?;
    for u in sample_points(&work, 64, 0xda7b, 0.0) {
        match pulled.eval_raw(&u) {
            Err(GeometryError::Domain { .. }) => return Err(shrink(r)),
            Err(e) => return Err(e.into()),
            Ok(_) => {}
        }
    }
    let std = SymplecticForm::standard(work.clone())?;
    let alpha = poincare_primitive(&pulled.sub(std.form())?)?;
    let path = MoserPath::new(std, SymplecticForm::unchecked(pulled)?)?;
    let flow = FlowMap::new(path, alpha, steps)?;
    // trajectories from the boundary sphere must stay in the working ball
    for v in sample_points(&ball, 64, 0xb0a7, 0.0) {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        let u: Vec<f64> = v.iter().map(|x| r * x / norm).collect();
        match flow.forward(&u) {
            Err(SymplecticError::Escape { .. }) => return Err(shrink(r)),
            Err(SymplecticError::Geometry(GeometryError::Domain { .. })) => return Err(shrink(r)),
            Err(e) => return Err(e),
            Ok(_) => {}
        }
    }
    let map = flow.as_smooth_map_from(Arc::clone(&ball)).then(&linear)?;
    Ok(DarbouxChart { map, frame, radius: r, flow })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DifferentialForm, ScalarField};

    fn area(c: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> SymplecticForm {
        let d = Chart::disk(2, 1.0).unwrap();
        SymplecticForm::new(DifferentialForm::from_terms(d, 2, vec![(vec![0, 1], ScalarField::real(c))]).unwrap()).unwrap()
    }

    #[test]
    fn constant_form_gives_linear_scaling() {
        let w = area(|_| 4.0);
        let ch = darboux_chart(&w, &[0.0, 0.0], 0.3, 50).unwrap();
        let y = ch.map().apply(&[0.2, -0.1]).unwrap();
        assert!((y[0] - 0.1).abs() < 1e-14 && (y[1] + 0.05).abs() < 1e-14);
    }

    #[test]
    fn linear_density_is_normalised() {
        let w = area(|x| 1.0 + x[0]);
        let ch = darboux_chart(&w, &[0.0, 0.0], 0.3, 100).unwrap();
        let samples = sample_points(ch.map().source(), 30, 4, 0.0);
        assert!(ch.pullback_residual(&w, &samples).unwrap() < 1e-3);
        assert!(ch.map().apply(&[0.0, 0.0]).unwrap().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn oversized_ball_asks_to_shrink() {
        let w = area(|x| 1.0 + 0.5 * x[0]);
        match darboux_chart(&w, &[0.5, 0.0], 0.6, 50) {
            Err(SymplecticError::ShrinkRadius { suggested, .. }) => assert_eq!(suggested, 0.3),
            other => panic!("expected shrink request, got {other:?}"),
        }
    }
}
