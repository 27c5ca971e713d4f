use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Result, SymplecticError};
use crate::geometry::{
    exterior_derivative, integrate_form, sample_points, Chart, ChartKind, CoordinateBound, DifferentialForm,
    GeometryError, ParamRange, Patch, Reality, SmoothMap,
};

/// Antisymmetric coefficient matrix `W_ij = f(d_i, d_j)` of a 2-form.
pub(crate) fn form_matrix(f: &DifferentialForm, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = f.chart().dim();
    let mut w = DMatrix::zeros(n, n);
    for (idx, v) in f.components().iter().zip(f.eval_raw(x)?) {
        w[(idx[0], idx[1])] = v.re;
        w[(idx[1], idx[0])] = -v.re;
    }
    Ok(w)
}

/// Polar parametrisation `(rho, t) -> (rho cos t, rho sin t)` of a 2D disk.
pub fn polar_patch(disk: &Arc<Chart>) -> Result<Patch> {
    let radius = match disk.kind() {
        ChartKind::Disk { radius } if disk.dim() == 2 => radius,
        _ => return Err(SymplecticError::Unsupported(format!("polar patch on `{}`", disk.name()))),
    };
    let params = Chart::coordinate_box(
        "polar",
        vec![
            CoordinateBound::Interval { lo: 0.0, hi: radius },
            CoordinateBound::Periodic { period: 2.0 * std::f64::consts::PI },
        ],
    )?;
    let map = SmoothMap::new(params, disk.clone(), |p| vec![p[0] * p[1].cos(), p[0] * p[1].sin()]).with_jacobian(|p| {
        let (s, c) = p[1].sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -p[0] * s, s, p[0] * c])
    });
    Ok(Patch::mapped(
        map,
        vec![
            ParamRange::Interval { lo: 0.0, hi: radius },
            ParamRange::Periodic { start: 0.0, period: 2.0 * std::f64::consts::PI },
        ],
    )?)
}

/// Total integral of a 2-form over a model surface in its symplectic
/// orientation (`dz ^ dtheta` positive on the sphere).
pub fn surface_total_integral(f: &DifferentialForm, gl_order: usize, trapezoid_nodes: usize) -> Result<Complex64> {
    let chart = f.chart();
    let patch = match chart.kind() {
        ChartKind::SphereCyl | ChartKind::Torus => Patch::whole_chart(chart),
        ChartKind::Disk { .. } if chart.dim() == 2 => polar_patch(chart)?,
        _ => {
            return Err(SymplecticError::Unsupported(format!(
                "total integral over `{}`",
                chart.name()
            )))
        }
    };
    Ok(chart.orientation_sign() * integrate_form(f, &patch, gl_order, trapezoid_nodes)?)
}

/// A real closed nondegenerate 2-form.
#[derive(Debug, Clone)]
pub struct SymplecticForm {
    form: DifferentialForm,
}

impl SymplecticForm {
    /// Wraps a real 2-form after checking nondegeneracy (`|det| >= 1e-10`)
    /// at 200 sample points.
    pub fn new(form: DifferentialForm) -> Result<Self> {
        let s = Self::unchecked(form)?;
        let samples = sample_points(s.chart(), 200, 0x5eed, 0.0);
        s.check_nondegenerate(&samples, 1e-10)?;
        Ok(s)
    }

    /// Degree and reality checks only.
    pub fn unchecked(form: DifferentialForm) -> Result<Self> {
        if form.degree() != 2 || form.reality() != Reality::Real {
            return Err(SymplecticError::NotSymplecticCandidate { degree: form.degree() });
        }
        Ok(SymplecticForm { form })
    }

    /// `sum_i dx_i ^ dx_{n+i}` on a chart of dimension `2n`.
    pub fn standard(chart: Arc<Chart>) -> Result<Self> {
        let n = chart.dim() / 2;
        let mut acc = DifferentialForm::zero(chart.clone(), 2)?;
        for i in 0..n {
            acc = acc.add(&DifferentialForm::basis(chart.clone(), &[i, n + i], 1.0)?)?;
        }
        Self::unchecked(acc)
    }

    pub fn form(&self) -> &DifferentialForm {
        &self.form
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.form.chart()
    }

    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.form.chart().check(x)?;
        form_matrix(&self.form, x)
    }

    pub fn check_nondegenerate(&self, samples: &[Vec<f64>], tol: f64) -> Result<()> {
        for x in samples {
            let det = form_matrix(&self.form, x)?.determinant();
            if det.abs() < tol {
                return Err(SymplecticError::Degenerate { at: x.clone(), t: 0.0, det });
            }
        }
        Ok(())
    }

    pub fn total_integral(&self, gl_order: usize, trapezoid_nodes: usize) -> Result<f64> {
        Ok(surface_total_integral(&self.form, gl_order, trapezoid_nodes)?.re)
    }
}

/// Linear path `w_t = w0 + t (w1 - w0)`.
#[derive(Debug, Clone)]
pub struct MoserPath {
    omega0: SymplecticForm,
    omega1: SymplecticForm,
    difference: DifferentialForm,
}

impl MoserPath {
    pub fn new(omega0: SymplecticForm, omega1: SymplecticForm) -> Result<Self> {
        omega0.chart().ensure_same(omega1.chart())?;
        let difference = omega1.form.sub(&omega0.form)?;
        Ok(MoserPath { omega0, omega1, difference })
    }

    pub fn omega0(&self) -> &SymplecticForm {
        &self.omega0
    }

    pub fn omega1(&self) -> &SymplecticForm {
        &self.omega1
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.omega0.chart()
    }

    /// `w1 - w0`.
    pub fn difference(&self) -> &DifferentialForm {
        &self.difference
    }

    pub fn omega_t(&self, t: f64) -> Result<DifferentialForm> {
        Ok(self.omega0.form.combine(&self.difference, Complex64::new(t, 0.0))?)
    }

    /// Coefficient matrix of `w_t` at `x`.
    pub fn matrix_at(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        let w0 = form_matrix(&self.omega0.form, x)?;
        let w1 = form_matrix(&self.omega1.form, x)?;
        Ok(&w0 + (&w1 - &w0) * t)
    }

    /// Nondegeneracy on a 21-point time grid at the samples; on surfaces also
    /// equal total integrals. Returns the worst cohomology defect seen.
    pub fn validate(&self, samples: &[Vec<f64>], nondegeneracy: f64, cohomology: f64) -> Result<f64> {
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            for x in samples {
                let det = self.matrix_at(t, x)?.determinant();
                if det.abs() < nondegeneracy {
                    return Err(SymplecticError::Degenerate { at: x.clone(), t, det });
                }
            }
        }
        if self.chart().dim() == 2 {
            let a = self.omega0.total_integral(32, 256)?;
            let b = self.omega1.total_integral(32, 256)?;
            if (a - b).abs() > cohomology {
                return Err(SymplecticError::CohomologyMismatch { left: a, right: b });
            }
            return Ok((a - b).abs());
        }
        Ok(0.0)
    }
}

/// A 1-form `alpha` together with the sampled residual of `d alpha = target`.
#[derive(Debug, Clone)]
pub struct Primitive {
    alpha: DifferentialForm,
    residual: f64,
}

impl Primitive {
    /// Measures `sup |d alpha - target|` over `samples` and rejects residuals
    /// above `tol`.
    pub fn new(alpha: DifferentialForm, target: &DifferentialForm, samples: &[Vec<f64>], h: f64, tol: f64) -> Result<Self> {
        let residual = primitive_residual(&alpha, target, samples, h)?;
        if residual > tol {
            return Err(SymplecticError::PrimitiveResidual { residual, tolerance: tol });
        }
        Ok(Primitive { alpha, residual })
    }

    pub fn alpha(&self) -> &DifferentialForm {
        &self.alpha
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }
}

pub(crate) fn primitive_residual(
    alpha: &DifferentialForm,
    target: &DifferentialForm,
    samples: &[Vec<f64>],
    h: f64,
) -> Result<f64> {
    let d = exterior_derivative(alpha, h)?;
    d.max_difference(target, samples).map_err(|e: GeometryError| e.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScalarField;

    #[test]
    fn sphere_area_is_four_pi_in_symplectic_orientation() {
        let s = Chart::sphere();
        let w = SymplecticForm::new(DifferentialForm::basis(s, &[1, 0], 1.0).unwrap()).unwrap();
        assert!((w.total_integral(32, 256).unwrap() - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn disk_area_uses_polar_patch() {
        let d = Chart::disk(2, 0.5).unwrap();
        let w = SymplecticForm::standard(d).unwrap();
        assert!((w.total_integral(32, 256).unwrap() - std::f64::consts::PI * 0.25).abs() < 1e-12);
    }

    #[test]
    fn degenerate_form_is_rejected() {
        let d = Chart::disk(2, 1.0).unwrap();
        let f = DifferentialForm::from_terms(d, 2, vec![(vec![0, 1], ScalarField::real(|x| 1e-6 * x[0]))]).unwrap();
        assert!(matches!(SymplecticForm::new(f), Err(SymplecticError::Degenerate { .. })));
    }
}
