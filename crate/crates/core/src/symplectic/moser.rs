use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::forms::{MoserPath, Primitive};
use super::{Result, SymplecticError};
use crate::geometry::{Chart, DifferentialForm, GeometryError, SmoothMap, FD_STEP};

/// Dense coefficient vector of a 1-form (real parts).
fn one_form_vector(alpha: &DifferentialForm, x: &[f64]) -> Result<DVector<f64>> {
    let mut a = DVector::zeros(alpha.chart().dim());
    for (idx, v) in alpha.components().iter().zip(alpha.eval_raw(x)?) {
        a[idx[0]] = v.re;
    }
    Ok(a)
}

fn solve_field(path: &MoserPath, alpha: &DifferentialForm, t: f64, x: &[f64]) -> Result<DVector<f64>> {
    let w = path.matrix_at(t, x)?;
    let det = w.determinant();
    if det.abs() < 1e-10 {
        return Err(SymplecticError::Degenerate { at: x.to_vec(), t, det });
    }
    let a = one_form_vector(alpha, x)?;
    // (i_X w)_j = sum_i X^i W_ij = -a_j  <=>  W X = a  (W antisymmetric)
    w.lu().solve(&a).ok_or(SymplecticError::Degenerate { at: x.to_vec(), t, det })
}

/// Solves `i_X w_t = -alpha` at `x`.
pub fn moser_vector_field(path: &MoserPath, alpha: &DifferentialForm, t: f64, x: &[f64]) -> Result<Vec<f64>> {
    path.chart().ensure_same(alpha.chart())?;
    path.chart().check(x)?;
    Ok(solve_field(path, alpha, t, x)?.iter().copied().collect())
}

/// `max_j |(i_X w_t + alpha)_j|` at `x`.
pub fn moser_residual(path: &MoserPath, alpha: &DifferentialForm, t: f64, x: &[f64], v: &[f64]) -> Result<f64> {
    let w = path.matrix_at(t, x)?;
    let a = one_form_vector(alpha, x)?;
    let xv = DVector::from_column_slice(v);
    Ok((w.transpose() * xv + a).abs().max())
}

struct FlowInner {
    path: MoserPath,
    alpha: DifferentialForm,
    steps: usize,
    fd_step: f64,
}

/// Time-one map of the Moser field, integrated by classical RK4 with a fixed
/// number of steps. The Jacobian is propagated with the variational equation
/// `dJ/dt = DX J`, where `DX` is taken by central differences.
#[derive(Clone)]
pub struct FlowMap {
    inner: Arc<FlowInner>,
}

impl fmt::Debug for FlowMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowMap")
            .field("chart", &self.chart().name())
            .field("steps", &self.inner.steps)
            .finish()
    }
}

/// Builds the time-one Moser flow for `path` with primitive `alpha`.
pub fn moser_flow(path: &MoserPath, alpha: &Primitive, steps: usize) -> Result<FlowMap> {
    FlowMap::new(path.clone(), alpha.alpha().clone(), steps)
}

impl FlowMap {
    pub fn new(path: MoserPath, alpha: DifferentialForm, steps: usize) -> Result<Self> {
        path.chart().ensure_same(alpha.chart())?;
        if alpha.degree() != 1 {
            return Err(GeometryError::DimensionMismatch { expected: 1, found: alpha.degree() }.into());
        }
        if steps == 0 {
            return Err(SymplecticError::Unsupported("flow with zero steps".into()));
        }
        Ok(FlowMap {
            inner: Arc::new(FlowInner { path, alpha, steps, fd_step: FD_STEP }),
        })
    }

    pub fn steps(&self) -> usize {
        self.inner.steps
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.inner.path.chart()
    }

    pub fn path(&self) -> &MoserPath {
        &self.inner.path
    }

    pub fn alpha(&self) -> &DifferentialForm {
        &self.inner.alpha
    }

    fn field(&self, t: f64, p: &DVector<f64>, start: &[f64]) -> Result<DVector<f64>> {
        let chart = self.chart();
        let coords: Vec<f64> = p.iter().copied().collect();
        if !chart.contains(&chart.reduce(&coords)) {
            return Err(SymplecticError::Escape { sample: start.to_vec(), time: t });
        }
        solve_field(&self.inner.path, &self.inner.alpha, t, &coords)
    }

    fn field_jacobian(&self, t: f64, p: &DVector<f64>, start: &[f64]) -> Result<DMatrix<f64>> {
        let n = p.len();
        let mut out = DMatrix::zeros(n, n);
        let mut q = p.clone();
        for j in 0..n {
            let h = self.inner.fd_step * p[j].abs().max(1.0);
            q[j] = p[j] + h;
            let fp = self.field(t, &q, start)?;
            q[j] = p[j] - h;
            let fm = self.field(t, &q, start)?;
            q[j] = p[j];
            out.set_column(j, &((fp - fm) / (2.0 * h)));
        }
        Ok(out)
    }

    fn integrate(&self, x: &[f64], t0: f64, t1: f64, with_jacobian: bool) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = x.len();
        if n != self.chart().dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.chart().dim(), found: n }.into());
        }
        let dt = (t1 - t0) / self.inner.steps as f64;
        let mut p = DVector::from_column_slice(x);
        let mut jac = DMatrix::identity(n, n);
        for s in 0..self.inner.steps {
            let t = t0 + dt * s as f64;
            let k1 = self.field(t, &p, x)?;
            let p2 = &p + &k1 * (dt / 2.0);
            let k2 = self.field(t + dt / 2.0, &p2, x)?;
            let p3 = &p + &k2 * (dt / 2.0);
            let k3 = self.field(t + dt / 2.0, &p3, x)?;
            let p4 = &p + &k3 * dt;
            let k4 = self.field(t + dt, &p4, x)?;
            if with_jacobian {
                let l1 = self.field_jacobian(t, &p, x)? * &jac;
                let l2 = self.field_jacobian(t + dt / 2.0, &p2, x)? * (&jac + &l1 * (dt / 2.0));
                let l3 = self.field_jacobian(t + dt / 2.0, &p3, x)? * (&jac + &l2 * (dt / 2.0));
                let l4 = self.field_jacobian(t + dt, &p4, x)? * (&jac + &l3 * dt);
                jac += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (dt / 6.0);
            }
            p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        let end: Vec<f64> = p.iter().copied().collect();
        let chart = self.chart();
        if !chart.contains(&chart.reduce(&end)) {
            return Err(SymplecticError::Escape { sample: x.to_vec(), time: t1 });
        }
        Ok((end, jac))
    }

    /// `Phi(x)`; periodic coordinates are not reduced.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.integrate(x, 0.0, 1.0, false)?.0)
    }

    /// `Phi^{-1}(y)` by reverse-time integration.
    pub fn backward(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.integrate(y, 1.0, 0.0, false)?.0)
    }

    pub fn forward_with_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        self.integrate(x, 0.0, 1.0, true)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.integrate(x, 0.0, 1.0, true)?.1)
    }

    /// Central differences of the forward map itself.
    pub fn jacobian_fd(&self, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let n = x.len();
        let mut out = DMatrix::zeros(n, n);
        let mut q = x.to_vec();
        for j in 0..n {
            let step = h * x[j].abs().max(1.0);
            q[j] = x[j] + step;
            let fp = self.forward(&q)?;
            q[j] = x[j] - step;
            let fm = self.forward(&q)?;
            q[j] = x[j];
            for i in 0..n {
                out[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
            }
        }
        Ok(out)
    }

    pub fn as_smooth_map(&self) -> SmoothMap {
        self.as_smooth_map_from(self.chart().clone())
    }

    /// The flow viewed as a map from `source` (same coordinates, typically a
    /// smaller ball) into the flow chart.
    pub fn as_smooth_map_from(&self, source: Arc<Chart>) -> SmoothMap {
        let (a, b) = (self.clone(), self.clone());
        let err = |e: SymplecticError| match e {
            SymplecticError::Geometry(g) => g,
            other => GeometryError::Evaluation(other.to_string()),
        };
        SmoothMap::fallible(source, self.chart().clone(), move |x| a.forward(x).map_err(err))
            .with_jacobian_fallible(move |x| b.jacobian(x).map_err(err))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pullback_form, sample_points, ScalarField};
    use crate::symplectic::{sphere_fiber_primitive, SymplecticForm};

    fn sphere_pair(eps: f64) -> MoserPath {
        let s = Chart::sphere();
        let w0 = SymplecticForm::new(DifferentialForm::basis(s.clone(), &[1, 0], 1.0).unwrap()).unwrap();
        let w1 = DifferentialForm::from_terms(
            s,
            2,
            vec![(vec![1, 0], ScalarField::real(move |x| 1.0 + eps * (3.0 * x[1] * x[1] - 1.0) / 2.0))],
        )
        .unwrap();
        MoserPath::new(w0, SymplecticForm::new(w1).unwrap()).unwrap()
    }

    #[test]
    fn sign_convention_example() {
        let s = Chart::sphere();
        let w = SymplecticForm::new(DifferentialForm::basis(s.clone(), &[0, 1], 1.0).unwrap()).unwrap();
        let path = MoserPath::new(w.clone(), w).unwrap();
        let (a, b) = (0.7, -0.3);
        let alpha = DifferentialForm::basis(s.clone(), &[0], a).unwrap().add(&DifferentialForm::basis(s, &[1], b).unwrap()).unwrap();
        let x = moser_vector_field(&path, &alpha, 0.5, &[1.0, 0.2]).unwrap();
        // i_X (dtheta ^ dz) = X^theta dz - X^z dtheta = -(a dtheta + b dz)
        assert!((x[0] + b).abs() < 1e-15 && (x[1] - a).abs() < 1e-15);
        assert!(moser_residual(&path, &alpha, 0.5, &[1.0, 0.2], &x).unwrap() < 1e-15);
    }

    #[test]
    fn zero_primitive_gives_identity() {
        let path = sphere_pair(0.0);
        let alpha = DifferentialForm::zero(path.chart().clone(), 1).unwrap();
        let flow = FlowMap::new(path, alpha, 20).unwrap();
        let x = [2.0, 0.4];
        assert_eq!(flow.forward(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn sphere_flow_pulls_back_and_inverts() {
        let path = sphere_pair(0.2);
        let alpha = sphere_fiber_primitive(path.difference()).unwrap();
        let flow = FlowMap::new(path.clone(), alpha, 100).unwrap();
        let map = flow.as_smooth_map();
        let pulled = pullback_form(&map, path.omega1().form()).unwrap();
        let samples = sample_points(path.chart(), 20, 3, 0.05);
        assert!(pulled.max_difference(path.omega0().form(), &samples).unwrap() < 1e-8);
        for x in &samples {
            let back = flow.backward(&flow.forward(x).unwrap()).unwrap();
            assert!((back[1] - x[1]).abs() < 1e-10 && (back[0] - x[0]).abs() < 1e-10);
            let jv = flow.jacobian(x).unwrap();
            let jf = flow.jacobian_fd(x, 1e-5).unwrap();
            assert!((jv - jf).abs().max() < 1e-7);
        }
    }
}
