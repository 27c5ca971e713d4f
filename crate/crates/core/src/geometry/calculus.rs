use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::chart::{Chart, CoordinateBound};
use super::field::{fd_partials, VectorField};
use super::form::{all_multi_indices, canonicalize, BatchGradFn, DifferentialForm, MultiIndex};
use super::map::SmoothMap;
use super::path::PathInChart;
use super::quadrature::{gauss_legendre, trapezoid_periodic};
use super::{GeometryError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Partial derivatives of every stored component: `out[component][coord]`.
fn component_gradients(f: &DifferentialForm, x: &[f64], h: f64) -> Result<Vec<Vec<Complex64>>> {
    if let Some(g) = f.batch_grad() {
        return g(x);
    }
    let by_coord = fd_partials(|y| f.eval_raw(y), x, h)?;
    let ncomp = f.components().len();
    Ok((0..ncomp).map(|c| by_coord.iter().map(|row| row[c]).collect()).collect())
}

/// `d f`, using analytic component gradients when present and central
/// differences with relative step `h` otherwise.
pub fn exterior_derivative(f: &DifferentialForm, h: f64) -> Result<DifferentialForm> {
    let dim = f.chart().dim();
    if f.degree() >= dim {
        return Err(GeometryError::TopDegree { degree: f.degree(), dim });
    }
    // d(f_I dx^I) = sum_j d_j f_I dx^j ^ dx^I
    let mut terms: BTreeMap<MultiIndex, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (c, idx) in f.components().iter().enumerate() {
        for j in 0..dim {
            let mut full = vec![j];
            full.extend_from_slice(idx);
            if let Some((k, sign)) = canonicalize(&full) {
                terms.entry(k).or_default().push((c, j, sign));
            }
        }
    }
    let components: Vec<MultiIndex> = terms.keys().cloned().collect();
    let plan: Vec<Vec<(usize, usize, f64)>> = terms.into_values().collect();
    let src = f.clone();
    DifferentialForm::from_batch(f.chart().clone(), f.degree() + 1, components, f.reality(), move |x| {
        let g = component_gradients(&src, x, h)?;
        Ok(plan
            .iter()
            .map(|contribs| contribs.iter().fold(ZERO, |acc, &(c, j, s)| acc + s * g[c][j]))
            .collect())
    })
}

/// Graded-antisymmetric product. Contributions to each output component are
/// summed in an order that does not depend on argument order, so
/// `a ^ b = (-1)^{pq} b ^ a` holds bit for bit.
pub fn wedge(a: &DifferentialForm, b: &DifferentialForm) -> Result<DifferentialForm> {
    a.chart().ensure_same(b.chart())?;
    let dim = a.chart().dim();
    if a.degree() + b.degree() > dim {
        return Err(GeometryError::DegreeOverflow {
            left: a.degree(),
            right: b.degree(),
            dim,
        });
    }
    // key: output index -> unordered pair (lo, hi) -> [(ia, ib, sign)]
    type Pairs = BTreeMap<(MultiIndex, MultiIndex), Vec<(usize, usize, f64)>>;
    let mut terms: BTreeMap<MultiIndex, Pairs> = BTreeMap::new();
    for (ia, i) in a.components().iter().enumerate() {
        for (ib, j) in b.components().iter().enumerate() {
            let mut full = i.clone();
            full.extend_from_slice(j);
            if let Some((k, sign)) = canonicalize(&full) {
                let key = if i <= j { (i.clone(), j.clone()) } else { (j.clone(), i.clone()) };
                terms.entry(k).or_default().entry(key).or_default().push((ia, ib, sign));
            }
        }
    }
    let components: Vec<MultiIndex> = terms.keys().cloned().collect();
    let plan: Vec<Vec<Vec<(usize, usize, f64)>>> =
        terms.into_values().map(|pairs| pairs.into_values().collect()).collect();
    let (ea, eb) = (a.batch(), b.batch());
    let reality = a.reality().product(b.reality());
    let grad: Option<Arc<BatchGradFn>> = match (a.batch_grad(), b.batch_grad()) {
        (Some(ga), Some(gb)) => {
            let (ea, eb, plan) = (ea.clone(), eb.clone(), plan.clone());
            Some(Arc::new(move |x| {
                let (va, vb, da, db) = (ea(x)?, eb(x)?, ga(x)?, gb(x)?);
                Ok(plan
                    .iter()
                    .map(|groups| {
                        let mut acc = vec![ZERO; dim];
                        for &(ia, ib, s) in groups.iter().flatten() {
                            for (k, o) in acc.iter_mut().enumerate() {
                                *o += s * (da[ia][k] * vb[ib] + va[ia] * db[ib][k]);
                            }
                        }
                        acc
                    })
                    .collect())
            }))
        }
        _ => None,
    };
    Ok(DifferentialForm::from_batch(a.chart().clone(), a.degree() + b.degree(), components, reality, move |x| {
        let (va, vb) = (ea(x)?, eb(x)?);
        Ok(plan
            .iter()
            .map(|groups| {
                groups.iter().fold(ZERO, |acc, group| {
                    // at most two entries; complex addition is commutative
                    let s: Complex64 = group.iter().map(|&(ia, ib, s)| s * (va[ia] * vb[ib])).sum();
                    acc + s
                })
            })
            .collect())
    })?
    .with_batch_gradient(grad))
}

/// Determinant of the minor of `j` with the given rows and columns.
fn minor_det(j: &nalgebra::DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    match k {
        0 => 1.0,
        1 => j[(rows[0], cols[0])],
        2 => j[(rows[0], cols[0])] * j[(rows[1], cols[1])] - j[(rows[0], cols[1])] * j[(rows[1], cols[0])],
        _ => nalgebra::DMatrix::from_fn(k, k, |r, c| j[(rows[r], cols[c])]).determinant(),
    }
}

/// `m^* f`: coefficients composed with `m`, contracted with minors of its
/// Jacobian. The result lives on the source chart of `m`.
pub fn pullback_form(m: &SmoothMap, f: &DifferentialForm) -> Result<DifferentialForm> {
    m.target().ensure_same(f.chart())?;
    let k = f.degree();
    let components = all_multi_indices(m.source().dim(), k);
    let src_idx: Vec<MultiIndex> = f.components().to_vec();
    let cols = components.clone();
    let (map, form) = (m.clone(), f.clone());
    let target = m.target().clone();
    DifferentialForm::from_batch(m.source().clone(), k, components, f.reality(), move |x| {
        let y = map.apply(x)?;
        target.check_bounds(&target.reduce(&y))?;
        let vals = form.eval_raw(&y)?;
        if k == 0 {
            return Ok(vec![vals.first().copied().unwrap_or(ZERO)]);
        }
        let jac = map.jacobian(x).map_err(|e| GeometryError::Jacobian(e.to_string()))?;
        Ok(cols
            .iter()
            .map(|kk| {
                src_idx
                    .iter()
                    .zip(&vals)
                    .fold(ZERO, |acc, (ii, v)| acc + v * minor_det(&jac, ii, kk))
            })
            .collect())
    })
}

/// `i_v f`, contracting `v` into the first slot.
pub fn interior_product(v: &VectorField, f: &DifferentialForm) -> Result<DifferentialForm> {
    if f.degree() == 0 {
        return Err(GeometryError::ZeroDegree);
    }
    let mut terms: BTreeMap<MultiIndex, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for (c, idx) in f.components().iter().enumerate() {
        for p in 0..idx.len() {
            let mut rest = idx.clone();
            let i = rest.remove(p);
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            terms.entry(rest).or_default().push((c, i, sign));
        }
    }
    let components: Vec<MultiIndex> = terms.keys().cloned().collect();
    let plan: Vec<Vec<(usize, usize, f64)>> = terms.into_values().collect();
    let (vf, ef) = (v.clone(), f.batch());
    let dim = f.chart().dim();
    DifferentialForm::from_batch(f.chart().clone(), f.degree() - 1, components, f.reality(), move |x| {
        let vx = vf.value(x)?;
        if vx.len() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, found: vx.len() });
        }
        let vals = ef(x)?;
        Ok(plan
            .iter()
            .map(|contribs| contribs.iter().fold(ZERO, |acc, &(c, i, s)| acc + s * vx[i] * vals[c]))
            .collect())
    })
}

/// One parameter direction of an integration patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamRange {
    /// Gauss–Legendre on `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// Trapezoid rule on `[start, start + period)`.
    Periodic { start: f64, period: f64 },
}

/// Parametrised region of integration: a parameter box, optionally mapped
/// into the chart of the integrand. Without a map the parameters are the
/// chart coordinates themselves.
#[derive(Debug, Clone)]
pub struct Patch {
    ranges: Vec<ParamRange>,
    map: Option<SmoothMap>,
}

impl Patch {
    pub fn coordinate(ranges: Vec<ParamRange>) -> Self {
        Patch { ranges, map: None }
    }

    /// The whole chart in its own coordinates (bounds only, no exclusion band).
    pub fn whole_chart(chart: &Chart) -> Self {
        let ranges = chart
            .bounds()
            .iter()
            .map(|b| match *b {
                CoordinateBound::Interval { lo, hi } => ParamRange::Interval { lo, hi },
                CoordinateBound::Periodic { period } => ParamRange::Periodic { start: 0.0, period },
            })
            .collect();
        Patch::coordinate(ranges)
    }

    /// Parameter box mapped by `map`, whose source chart carries the
    /// parameters.
    pub fn mapped(map: SmoothMap, ranges: Vec<ParamRange>) -> Result<Self> {
        if map.source().dim() != ranges.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: map.source().dim(),
                found: ranges.len(),
            });
        }
        Ok(Patch { ranges, map: Some(map) })
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn ranges(&self) -> &[ParamRange] {
        &self.ranges
    }
}

/// Integral of a top-degree (relative to the patch) form, in the coordinate
/// orientation of the parameters.
pub fn integrate_form(f: &DifferentialForm, patch: &Patch, gl_order: usize, trapezoid_nodes: usize) -> Result<Complex64> {
    if f.degree() != patch.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: patch.dim(),
            found: f.degree(),
        });
    }
    let chart = f.chart().clone();
    let (density_form, map) = match &patch.map {
        Some(m) => (pullback_form(m, f)?, Some(m.clone())),
        None => {
            if patch.dim() != chart.dim() {
                return Err(GeometryError::DimensionMismatch {
                    expected: chart.dim(),
                    found: patch.dim(),
                });
            }
            (f.clone(), None)
        }
    };
    let top: Vec<usize> = (0..patch.dim()).collect();
    let rules: Vec<Vec<(f64, f64)>> = patch
        .ranges
        .iter()
        .map(|r| match *r {
            ParamRange::Interval { lo, hi } => gauss_legendre(gl_order, lo, hi),
            ParamRange::Periodic { start, period } => trapezoid_periodic(trapezoid_nodes, start, period),
        })
        .collect();
    if rules.is_empty() {
        // 0-form at a point: not a meaningful domain here
        return Err(GeometryError::DimensionMismatch { expected: 1, found: 0 });
    }
    let (first, rest) = rules.split_first().expect("non-empty");
    first
        .par_iter()
        .map(|&(x0, w0)| -> Result<Complex64> {
            let mut acc = ZERO;
            let mut idx = vec![0usize; rest.len()];
            loop {
                let mut p = vec![x0];
                let mut w = w0;
                for (r, &i) in rest.iter().zip(&idx) {
                    p.push(r[i].0);
                    w *= r[i].1;
                }
                let image = match &map {
                    Some(m) => m.apply(&p)?,
                    None => p.clone(),
                };
                chart.check_bounds(&chart.reduce(&image))?;
                let c = density_form
                    .eval_raw(&p)?
                    .into_iter()
                    .zip(density_form.components())
                    .find(|(_, k)| **k == top)
                    .map_or(ZERO, |(v, _)| v);
                acc += w * c;
                // odometer over the remaining dimensions
                let mut d = 0;
                loop {
                    if d == idx.len() {
                        return Ok(acc);
                    }
                    idx[d] += 1;
                    if idx[d] < rest[d].len() {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
            }
        })
        .try_reduce(|| ZERO, |a, b| Ok(a + b))
}

/// `int_gamma f` for a 1-form over the sub-interval `[a, b]` of the path
/// parameter, by Gauss–Legendre.
pub fn integrate_along_segment(
    f: &DifferentialForm,
    path: &PathInChart,
    a: f64,
    b: f64,
    gl_order: usize,
) -> Result<Complex64> {
    let mut acc = ZERO;
    for (t, w) in gauss_legendre(gl_order, a, b) {
        acc += w * pulled_density(f, path, t)?;
    }
    Ok(acc)
}

fn pulled_density(f: &DifferentialForm, path: &PathInChart, t: f64) -> Result<Complex64> {
    let x = path.point(t);
    let v = path.velocity(t);
    let chart = f.chart();
    chart.check(&chart.reduce(&x))?;
    let vals = f.eval_raw(&x)?;
    Ok(f.components().iter().zip(vals).fold(ZERO, |acc, (idx, c)| acc + c * v[idx[0]]))
}

/// `int_gamma f` for a 1-form. Smooth closed loops use the trapezoid rule;
/// everything else is split at breaks and region switches and integrated by
/// Gauss–Legendre per piece.
pub fn integrate_along_path(
    f: &DifferentialForm,
    path: &PathInChart,
    gl_order: usize,
    trapezoid_nodes: usize,
) -> Result<Complex64> {
    if f.degree() != 1 {
        return Err(GeometryError::DimensionMismatch { expected: 1, found: f.degree() });
    }
    path.chart().ensure_same(f.chart())?;
    if path.is_smooth_loop() {
        let mut acc = ZERO;
        for (t, w) in trapezoid_periodic(trapezoid_nodes, 0.0, 1.0) {
            acc += w * pulled_density(f, path, t)?;
        }
        return Ok(acc);
    }
    let mut acc = ZERO;
    for (a, b, _) in path.pieces() {
        acc += integrate_along_segment(f, path, a, b, gl_order)?;
    }
    Ok(acc)
}
