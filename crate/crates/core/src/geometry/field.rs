use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::Result;

type EvalFn = dyn Fn(&[f64]) -> Result<Complex64> + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Result<Vec<Complex64>> + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;

/// Which part of a complex value is allowed to be non-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reality {
    Real,
    Imaginary,
    Complex,
}

impl Reality {
    pub fn product(self, other: Reality) -> Reality {
        use Reality::*;
        match (self, other) {
            (Real, Real) | (Imaginary, Imaginary) => Real,
            (Real, Imaginary) | (Imaginary, Real) => Imaginary,
            _ => Complex,
        }
    }

    pub fn sum(self, other: Reality) -> Reality {
        if self == other {
            self
        } else {
            Reality::Complex
        }
    }

    pub fn times_i(self) -> Reality {
        match self {
            Reality::Real => Reality::Imaginary,
            Reality::Imaginary => Reality::Real,
            Reality::Complex => Reality::Complex,
        }
    }

    /// Magnitude of the disallowed part of `v`.
    pub fn violation(self, v: Complex64) -> f64 {
        match self {
            Reality::Real => v.im.abs(),
            Reality::Imaginary => v.re.abs(),
            Reality::Complex => 0.0,
        }
    }

    pub(crate) fn of_scalar(c: Complex64) -> Reality {
        if c.im == 0.0 {
            Reality::Real
        } else if c.re == 0.0 {
            Reality::Imaginary
        } else {
            Reality::Complex
        }
    }
}

/// Per-coordinate central-difference step, relative to the coordinate size.
#[inline]
pub(crate) fn fd_step(h: f64, x: f64) -> f64 {
    h * x.abs().max(1.0)
}

/// Central differences of a vector-valued function: `out[j][c] = d f_c / d x_j`.
pub(crate) fn fd_partials<F>(f: F, x: &[f64], h: f64) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>>,
{
    let mut xp = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let step = fd_step(h, x[j]);
        xp[j] = x[j] + step;
        let fp = f(&xp)?;
        xp[j] = x[j] - step;
        let fm = f(&xp)?;
        xp[j] = x[j];
        let inv = 1.0 / (2.0 * step);
        out.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) * inv).collect());
    }
    Ok(out)
}

/// Scalar field on a chart, valued in the complex numbers.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
    reality: Reality,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("reality", &self.reality)
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn real<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::fallible(move |x| Ok(Complex64::new(f(x), 0.0)), Reality::Real)
    }

    /// Purely imaginary field `i f(x)`.
    pub fn imaginary<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::fallible(move |x| Ok(Complex64::new(0.0, f(x))), Reality::Imaginary)
    }

    pub fn complex<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self::fallible(move |x| Ok(f(x)), Reality::Complex)
    }

    pub fn fallible<F>(f: F, reality: Reality) -> Self
    where
        F: Fn(&[f64]) -> Result<Complex64> + Send + Sync + 'static,
    {
        ScalarField {
            eval: Arc::new(f),
            grad: None,
            reality,
        }
    }

    pub fn constant(c: Complex64) -> Self {
        let reality = Reality::of_scalar(c);
        ScalarField {
            eval: Arc::new(move |_| Ok(c)),
            grad: Some(Arc::new(|x: &[f64]| Ok(vec![Complex64::new(0.0, 0.0); x.len()]))),
            reality,
        }
    }

    pub fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    /// Attaches an analytic gradient of the *real profile*: for an imaginary
    /// field `i f` pass the gradient of `f`.
    pub fn with_real_gradient<G>(self, g: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let unit = match self.reality {
            Reality::Imaginary => Complex64::new(0.0, 1.0),
            _ => Complex64::new(1.0, 0.0),
        };
        self.with_gradient_fallible(move |x| Ok(g(x).into_iter().map(|v| unit * v).collect()))
    }

    pub fn with_gradient<G>(self, g: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<Complex64> + Send + Sync + 'static,
    {
        self.with_gradient_fallible(move |x| Ok(g(x)))
    }

    pub fn with_gradient_fallible<G>(mut self, g: G) -> Self
    where
        G: Fn(&[f64]) -> Result<Vec<Complex64>> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn reality(&self) -> Reality {
        self.reality
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn value(&self, x: &[f64]) -> Result<Complex64> {
        (self.eval)(x)
    }

    /// Analytic gradient when available, central differences otherwise.
    pub fn gradient(&self, x: &[f64], h: f64) -> Result<Vec<Complex64>> {
        match &self.grad {
            Some(g) => g(x),
            None => self.fd_gradient(x, h),
        }
    }

    pub fn analytic_gradient(&self, x: &[f64]) -> Option<Result<Vec<Complex64>>> {
        self.grad.as_ref().map(|g| g(x))
    }

    pub fn fd_gradient(&self, x: &[f64], h: f64) -> Result<Vec<Complex64>> {
        let parts = fd_partials(|y| Ok(vec![(self.eval)(y)?]), x, h)?;
        Ok(parts.into_iter().map(|p| p[0]).collect())
    }

    /// Largest disallowed part over the samples.
    pub fn reality_violation(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for x in samples {
            worst = worst.max(self.reality.violation(self.value(x)?));
        }
        Ok(worst)
    }

    /// Largest discrepancy between the analytic gradient and central
    /// differences; zero when no analytic gradient is attached.
    pub fn gradient_discrepancy(&self, samples: &[Vec<f64>], h: f64) -> Result<f64> {
        let Some(g) = &self.grad else { return Ok(0.0) };
        let mut worst = 0.0f64;
        for x in samples {
            let a = g(x)?;
            let n = self.fd_gradient(x, h)?;
            for (u, v) in a.iter().zip(&n) {
                worst = worst.max((u - v).norm());
            }
        }
        Ok(worst)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let eval = self.eval.clone();
        let grad = self.grad.clone();
        ScalarField {
            eval: Arc::new(move |x| Ok(c * eval(x)?)),
            grad: grad.map(|g| -> Arc<GradFn> {
                Arc::new(move |x| Ok(g(x)?.into_iter().map(|v| c * v).collect()))
            }),
            reality: self.reality.product(Reality::of_scalar(c)),
        }
    }

    pub fn times_i(&self) -> Self {
        let mut out = self.scale(Complex64::new(0.0, 1.0));
        out.reality = self.reality.times_i();
        out
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &ScalarField, sign: f64) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let grad: Option<Arc<GradFn>> = match (&self.grad, &other.grad) {
            (Some(ga), Some(gb)) => {
                let (ga, gb) = (ga.clone(), gb.clone());
                Some(Arc::new(move |x| {
                    Ok(ga(x)?.into_iter().zip(gb(x)?).map(|(u, v)| u + sign * v).collect())
                }))
            }
            _ => None,
        };
        ScalarField {
            eval: Arc::new(move |x| Ok(a(x)? + sign * b(x)?)),
            grad,
            reality: self.reality.sum(other.reality),
        }
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let grad: Option<Arc<GradFn>> = match (&self.grad, &other.grad) {
            (Some(ga), Some(gb)) => {
                let (ga, gb, a2, b2) = (ga.clone(), gb.clone(), a.clone(), b.clone());
                Some(Arc::new(move |x| {
                    let (va, vb) = (a2(x)?, b2(x)?);
                    Ok(ga(x)?.into_iter().zip(gb(x)?).map(|(u, v)| u * vb + va * v).collect())
                }))
            }
            _ => None,
        };
        ScalarField {
            eval: Arc::new(move |x| Ok(a(x)? * b(x)?)),
            grad,
            reality: self.reality.product(other.reality),
        }
    }

    pub(crate) fn eval_fn(&self) -> Arc<EvalFn> {
        self.eval.clone()
    }

    pub(crate) fn grad_fn(&self) -> Option<Arc<GradFn>> {
        self.grad.clone()
    }
}

/// Real tangent vector field given in chart coordinates.
#[derive(Clone)]
pub struct VectorField {
    eval: Arc<VectorFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VectorField")
    }
}

impl VectorField {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::fallible(move |x| Ok(f(x)))
    }

    pub fn fallible<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        VectorField { eval: Arc::new(f) }
    }

    pub fn constant(v: Vec<f64>) -> Self {
        Self::new(move |_| v.clone())
    }

    pub fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        (self.eval)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_gradient_matches_differences() {
        let f = ScalarField::real(|x| x[0].sin() * (1.0 - x[1] * x[1]))
            .with_real_gradient(|x| vec![x[0].cos() * (1.0 - x[1] * x[1]), -2.0 * x[1] * x[0].sin()]);
        let samples = vec![vec![0.3, 0.2], vec![2.0, -0.7], vec![5.0, 0.9]];
        assert!(f.gradient_discrepancy(&samples, 1e-5).unwrap() < 1e-8);
    }

    #[test]
    fn reality_flags_are_tracked() {
        let f = ScalarField::real(|x| x[0]);
        let g = f.times_i();
        assert_eq!(g.reality(), Reality::Imaginary);
        assert_eq!(g.mul(&g).reality(), Reality::Real);
        assert_eq!(f.add(&g).reality(), Reality::Complex);
        let v = g.value(&[2.0]).unwrap();
        assert_eq!(v.re, 0.0);
        assert_eq!(v.im, 2.0);
        assert_eq!(g.reality_violation(&[vec![1.0], vec![-3.0]]).unwrap(), 0.0);
    }

    #[test]
    fn product_rule_gradient() {
        let a = ScalarField::real(|x| x[0] * x[0]).with_real_gradient(|x| vec![2.0 * x[0]]);
        let b = ScalarField::real(|x| x[0].exp()).with_real_gradient(|x| vec![x[0].exp()]);
        let p = a.mul(&b);
        let g = p.gradient(&[0.5], 1e-5).unwrap()[0].re;
        let exact = (2.0 * 0.5 + 0.25) * 0.5f64.exp();
        assert!((g - exact).abs() < 1e-14);
    }
}
