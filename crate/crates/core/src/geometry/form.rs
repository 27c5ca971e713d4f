use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::chart::{Chart, ChartKind, Pole};
use super::field::{Reality, ScalarField};
use super::{GeometryError, Result};

/// Strictly increasing list of coordinate indices.
pub type MultiIndex = Vec<usize>;

pub(crate) type BatchFn = dyn Fn(&[f64]) -> Result<Vec<Complex64>> + Send + Sync;
/// Gradient of every component: `out[component][coordinate]`.
pub(crate) type BatchGradFn = dyn Fn(&[f64]) -> Result<Vec<Vec<Complex64>>> + Send + Sync;

/// Sorts a multi-index, returning the permutation sign, or `None` when an
/// index repeats (the wedge product vanishes).
pub(crate) fn canonicalize(idx: &[usize]) -> Option<(MultiIndex, f64)> {
    let mut v = idx.to_vec();
    let mut sign = 1.0;
    for i in 0..v.len() {
        for j in 0..v.len() - 1 - i {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// All increasing multi-indices of length `k` over `0..dim`, lexicographic.
pub fn all_multi_indices(dim: usize, k: usize) -> Vec<MultiIndex> {
    fn rec(start: usize, dim: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..dim {
            cur.push(i);
            rec(i + 1, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim, k, &mut Vec::new(), &mut out);
    out
}

/// Degree-k form on a chart. Only increasing multi-indices are stored; the
/// evaluator returns one value per stored component.
#[derive(Clone)]
pub struct DifferentialForm {
    chart: Arc<Chart>,
    degree: usize,
    components: Arc<Vec<MultiIndex>>,
    eval: Arc<BatchFn>,
    grad: Option<Arc<BatchGradFn>>,
    reality: Reality,
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferentialForm")
            .field("chart", &self.chart.name())
            .field("degree", &self.degree)
            .field("components", &self.components)
            .field("reality", &self.reality)
            .finish()
    }
}

impl DifferentialForm {
    pub fn zero(chart: Arc<Chart>, degree: usize) -> Result<Self> {
        Self::check_degree(&chart, degree)?;
        Ok(DifferentialForm {
            chart,
            degree,
            components: Arc::new(Vec::new()),
            eval: Arc::new(|_| Ok(Vec::new())),
            grad: Some(Arc::new(|_| Ok(Vec::new()))),
            reality: Reality::Real,
        })
    }

    fn check_degree(chart: &Chart, degree: usize) -> Result<()> {
        if degree > chart.dim() {
            Err(GeometryError::DegreeOverflow {
                left: degree,
                right: 0,
                dim: chart.dim(),
            })
        } else {
            Ok(())
        }
    }

    /// Builds a form from `(multi-index, coefficient)` terms in any order;
    /// indices are sorted with the permutation sign and repeated terms summed.
    pub fn from_terms(chart: Arc<Chart>, degree: usize, terms: Vec<(Vec<usize>, ScalarField)>) -> Result<Self> {
        Self::check_degree(&chart, degree)?;
        let mut grouped: BTreeMap<MultiIndex, Vec<(f64, ScalarField)>> = BTreeMap::new();
        for (idx, field) in terms {
            if idx.len() != degree || idx.iter().any(|&i| i >= chart.dim()) {
                return Err(GeometryError::InvalidIndex(idx));
            }
            if let Some((canon, sign)) = canonicalize(&idx) {
                grouped.entry(canon).or_default().push((sign, field));
            }
        }
        let mut reality: Option<Reality> = None;
        let mut all_grad = true;
        for fields in grouped.values() {
            for (_, f) in fields {
                reality = Some(reality.map_or(f.reality(), |r| r.sum(f.reality())));
                all_grad &= f.has_analytic_gradient();
            }
        }
        let components: Vec<MultiIndex> = grouped.keys().cloned().collect();
        let evals: Vec<Vec<(f64, _)>> = grouped
            .values()
            .map(|fs| fs.iter().map(|(s, f)| (*s, f.eval_fn())).collect())
            .collect();
        let eval: Arc<BatchFn> = Arc::new(move |x| {
            evals
                .iter()
                .map(|fs| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (s, f) in fs {
                        acc += *s * f(x)?;
                    }
                    Ok(acc)
                })
                .collect()
        });
        let grad: Option<Arc<BatchGradFn>> = if all_grad {
            let grads: Vec<Vec<(f64, _)>> = grouped
                .values()
                .map(|fs| fs.iter().map(|(s, f)| (*s, f.grad_fn().expect("checked"))).collect())
                .collect();
            let dim = chart.dim();
            Some(Arc::new(move |x| {
                grads
                    .iter()
                    .map(|fs| {
                        let mut acc = vec![Complex64::new(0.0, 0.0); dim];
                        for (s, g) in fs {
                            for (a, v) in acc.iter_mut().zip(g(x)?) {
                                *a += *s * v;
                            }
                        }
                        Ok(acc)
                    })
                    .collect()
            }))
        } else {
            None
        };
        Ok(DifferentialForm {
            chart,
            degree,
            components: Arc::new(components),
            eval,
            grad,
            reality: reality.unwrap_or(Reality::Real),
        })
    }

    pub fn scalar(chart: Arc<Chart>, f: ScalarField) -> Self {
        Self::from_terms(chart, 0, vec![(vec![], f)]).expect("0-form is always valid")
    }

    /// Constant-coefficient basis form `dx^{i1} ^ ... ^ dx^{ik}` times `c`.
    pub fn basis(chart: Arc<Chart>, idx: &[usize], c: f64) -> Result<Self> {
        let degree = idx.len();
        let f = ScalarField::constant(Complex64::new(c, 0.0));
        Self::from_terms(chart, degree, vec![(idx.to_vec(), f)])
    }

    /// Low-level constructor from a batch evaluator. `components` must be
    /// strictly increasing, unique and sorted.
    pub fn from_batch<F>(
        chart: Arc<Chart>,
        degree: usize,
        components: Vec<MultiIndex>,
        reality: Reality,
        eval: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<Complex64>> + Send + Sync + 'static,
    {
        Self::check_degree(&chart, degree)?;
        for c in &components {
            if c.len() != degree || c.iter().any(|&i| i >= chart.dim()) || c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GeometryError::InvalidIndex(c.clone()));
            }
        }
        if components.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GeometryError::InvalidIndex(components.concat()));
        }
        Ok(DifferentialForm {
            chart,
            degree,
            components: Arc::new(components),
            eval: Arc::new(eval),
            grad: None,
            reality,
        })
    }

    pub(crate) fn with_batch_gradient(mut self, grad: Option<Arc<BatchGradFn>>) -> Self {
        self.grad = grad;
        self
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[MultiIndex] {
        &self.components
    }

    pub fn reality(&self) -> Reality {
        self.reality
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub(crate) fn batch(&self) -> Arc<BatchFn> {
        self.eval.clone()
    }

    pub(crate) fn batch_grad(&self) -> Option<Arc<BatchGradFn>> {
        self.grad.clone()
    }

    /// Component values at a point of the chart (domain checked).
    pub fn eval(&self, x: &[f64]) -> Result<Vec<(MultiIndex, Complex64)>> {
        self.chart.check(x)?;
        let vals = (self.eval)(x)?;
        Ok(self.components.iter().cloned().zip(vals).collect())
    }

    /// Component values without the domain check.
    pub fn eval_raw(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        (self.eval)(x)
    }

    pub fn component(&self, idx: &[usize], x: &[f64]) -> Result<Complex64> {
        self.chart.check(x)?;
        self.component_raw(idx, x)
    }

    fn component_raw(&self, idx: &[usize], x: &[f64]) -> Result<Complex64> {
        let Some((canon, sign)) = canonicalize(idx) else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        match self.components.iter().position(|c| *c == canon) {
            Some(p) => Ok(sign * (self.eval)(x)?[p]),
            None => Ok(Complex64::new(0.0, 0.0)),
        }
    }

    /// Values on every increasing multi-index of this degree (lexicographic),
    /// zeros for absent components.
    pub fn dense(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        self.chart.check(x)?;
        self.dense_raw(x)
    }

    pub fn dense_raw(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        let all = all_multi_indices(self.chart.dim(), self.degree);
        let vals = (self.eval)(x)?;
        let mut out = vec![Complex64::new(0.0, 0.0); all.len()];
        for (c, v) in self.components.iter().zip(vals) {
            let p = all.iter().position(|a| a == c).expect("component is canonical");
            out[p] = v;
        }
        Ok(out)
    }

    /// Scalar-field view of one coefficient.
    pub fn coefficient(&self, idx: &[usize]) -> Option<ScalarField> {
        let (canon, sign) = canonicalize(idx)?;
        let p = self.components.iter().position(|c| *c == canon)?;
        let eval = self.eval.clone();
        let field = ScalarField::fallible(move |x| Ok(sign * eval(x)?[p]), self.reality);
        Some(match &self.grad {
            Some(g) => {
                let g = g.clone();
                field.with_gradient_fallible(move |x| {
                    Ok(g(x)?[p].iter().map(|v| sign * v).collect())
                })
            }
            None => field,
        })
    }

    fn ensure_compatible(&self, other: &DifferentialForm) -> Result<()> {
        self.chart.ensure_same(&other.chart)?;
        if self.degree != other.degree {
            return Err(GeometryError::DimensionMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &DifferentialForm) -> Result<Self> {
        self.combine(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &DifferentialForm) -> Result<Self> {
        self.combine(other, Complex64::new(-1.0, 0.0))
    }

    /// `self + c * other`.
    pub fn combine(&self, other: &DifferentialForm, c: Complex64) -> Result<Self> {
        self.ensure_compatible(other)?;
        let mut components: Vec<MultiIndex> = self.components.iter().chain(other.components.iter()).cloned().collect();
        components.sort();
        components.dedup();
        let pos_a: Vec<usize> = self.components.iter().map(|c| components.binary_search(c).unwrap()).collect();
        let pos_b: Vec<usize> = other.components.iter().map(|c| components.binary_search(c).unwrap()).collect();
        let n = components.len();
        let (ea, eb) = (self.eval.clone(), other.eval.clone());
        let (pa, pb) = (pos_a.clone(), pos_b.clone());
        let eval = move |x: &[f64]| -> Result<Vec<Complex64>> {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (p, v) in pa.iter().zip(ea(x)?) {
                out[*p] += v;
            }
            for (p, v) in pb.iter().zip(eb(x)?) {
                out[*p] += c * v;
            }
            Ok(out)
        };
        let grad: Option<Arc<BatchGradFn>> = match (&self.grad, &other.grad) {
            (Some(ga), Some(gb)) => {
                let (ga, gb) = (ga.clone(), gb.clone());
                let dim = self.chart.dim();
                Some(Arc::new(move |x| {
                    let mut out = vec![vec![Complex64::new(0.0, 0.0); dim]; n];
                    for (p, g) in pos_a.iter().zip(ga(x)?) {
                        for (o, v) in out[*p].iter_mut().zip(g) {
                            *o += v;
                        }
                    }
                    for (p, g) in pos_b.iter().zip(gb(x)?) {
                        for (o, v) in out[*p].iter_mut().zip(g) {
                            *o += c * v;
                        }
                    }
                    Ok(out)
                }))
            }
            _ => None,
        };
        let reality = if other.components.is_empty() {
            self.reality
        } else if self.components.is_empty() {
            other.reality.product(Reality::of_scalar(c))
        } else {
            self.reality.sum(other.reality.product(Reality::of_scalar(c)))
        };
        Ok(Self::from_batch(self.chart.clone(), self.degree, components, reality, eval)?.with_batch_gradient(grad))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let e = self.eval.clone();
        let grad = self.grad.clone().map(|g| -> Arc<BatchGradFn> {
            Arc::new(move |x| Ok(g(x)?.into_iter().map(|row| row.into_iter().map(|v| c * v).collect()).collect()))
        });
        DifferentialForm {
            chart: self.chart.clone(),
            degree: self.degree,
            components: self.components.clone(),
            eval: Arc::new(move |x| Ok(e(x)?.into_iter().map(|v| c * v).collect())),
            grad,
            reality: self.reality.product(Reality::of_scalar(c)),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `i * self`, with the reality flag rotated accordingly.
    pub fn times_i(&self) -> Self {
        let mut out = self.scale(Complex64::new(0.0, 1.0));
        out.reality = self.reality.times_i();
        out
    }

    /// Relabels the reality flag after a caller has established it, e.g. the
    /// real part of a form known to be real up to roundoff.
    pub fn real_part(&self) -> Self {
        let e = self.eval.clone();
        DifferentialForm {
            chart: self.chart.clone(),
            degree: self.degree,
            components: self.components.clone(),
            eval: Arc::new(move |x| Ok(e(x)?.into_iter().map(|v| Complex64::new(v.re, 0.0)).collect())),
            grad: None,
            reality: Reality::Real,
        }
    }

    pub fn imag_part(&self) -> Self {
        let e = self.eval.clone();
        DifferentialForm {
            chart: self.chart.clone(),
            degree: self.degree,
            components: self.components.clone(),
            eval: Arc::new(move |x| Ok(e(x)?.into_iter().map(|v| Complex64::new(v.im, 0.0)).collect())),
            grad: None,
            reality: Reality::Real,
        }
    }

    /// Same coefficients viewed on another chart with identical coordinates.
    pub fn on_chart(&self, chart: Arc<Chart>) -> Result<Self> {
        if chart.dim() != self.chart.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.chart.dim(),
                found: chart.dim(),
            });
        }
        let mut out = self.clone();
        out.chart = chart;
        Ok(out)
    }

    /// Supremum over samples and components of `|self - other|`.
    pub fn max_difference(&self, other: &DifferentialForm, samples: &[Vec<f64>]) -> Result<f64> {
        self.ensure_compatible(other)?;
        let mut worst = 0.0f64;
        for x in samples {
            let a = self.dense(x)?;
            let b = other.dense(x)?;
            for (u, v) in a.iter().zip(&b) {
                worst = worst.max((u - v).norm());
            }
        }
        Ok(worst)
    }

    pub fn sup_norm(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for x in samples {
            for v in self.eval(x)? {
                worst = worst.max(v.1.norm());
            }
        }
        Ok(worst)
    }

    pub fn reality_violation(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for x in samples {
            for (_, v) in self.eval(x)? {
                worst = worst.max(self.reality.violation(v));
            }
        }
        Ok(worst)
    }

    /// Sampled decay ratio `|coeff of dtheta| / (1 - |z|)` just outside the
    /// pole band of a 1-form on the sphere chart. Smoothness at the pole asks
    /// for this to stay bounded.
    pub fn pole_decay_ratio(&self, pole: Pole) -> Result<f64> {
        if self.chart.kind() != ChartKind::SphereCyl || self.degree != 1 {
            return Err(GeometryError::InvalidChart(format!(
                "pole decay applies to 1-forms on the sphere chart, got degree {} on `{}`",
                self.degree,
                self.chart.name()
            )));
        }
        let delta = self.chart.pole_band().unwrap_or(0.0);
        let sign = match pole {
            Pole::North => 1.0,
            Pole::South => -1.0,
        };
        let mut worst = 0.0f64;
        for j in 0..10 {
            let gap = delta + 0.005 * (j as f64 + 1.0);
            let z = sign * (1.0 - gap);
            for i in 0..16 {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / 16.0;
                let c = self.component(&[0], &[theta, z])?;
                worst = worst.max(c.norm() / gap);
            }
        }
        Ok(worst)
    }
}
