use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::connection::PrequantumConnection;
use super::{BundleError, Result};
use crate::geometry::quadrature::gauss_legendre;
use crate::geometry::{
    all_multi_indices, exterior_derivative, integrate_along_path, sample_points, Chart, ChartKind, DifferentialForm,
    PathInChart, Point, Reality, ScalarField, SmoothMap, FD_STEP,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const CLOSEDNESS_TOL: f64 = 1e-6;
const PERIOD_TOL: f64 = 1e-6;
const FAMILY_TOL: f64 = 1e-5;
const HERMITIAN_TOL: f64 = 1e-10;
const LEG_ORDER: usize = 32;

/// Closed 1-form `xi` relating two connections with the same curvature:
/// `A_a - A_b = xi` for connection forms `A = -i alpha`. Imaginary for two
/// hermitian connections.
#[derive(Debug, Clone)]
pub struct ConnectionDifference {
    xi: DifferentialForm,
    residual: f64,
}

impl ConnectionDifference {
    /// Wraps a 1-form after measuring `sup |d xi|` over `samples`.
    pub fn from_form(xi: DifferentialForm, samples: &[Vec<f64>]) -> Result<Self> {
        if xi.degree() != 1 {
            return Err(BundleError::Unsupported(format!("connection difference of degree {}", xi.degree())));
        }
        let residual = if xi.chart().dim() > 1 {
            exterior_derivative(&xi, FD_STEP)?.sup_norm(samples)?
        } else {
            0.0
        };
        if residual > CLOSEDNESS_TOL {
            return Err(BundleError::NotClosed { residual });
        }
        Ok(ConnectionDifference { xi, residual })
    }

    pub fn xi(&self) -> &DifferentialForm {
        &self.xi
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.xi.chart()
    }

    /// `sup |d xi|` over the construction samples.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn is_hermitian(&self) -> bool {
        self.xi.reality() == Reality::Imaginary
    }

    /// The real 1-form `beta` with `xi = beta` (real input) or `xi = -i beta`
    /// (imaginary input).
    pub fn real_representative(&self) -> Result<DifferentialForm> {
        match self.xi.reality() {
            Reality::Real => Ok(self.xi.clone()),
            Reality::Imaginary => Ok(self.xi.times_i()),
            Reality::Complex => Err(BundleError::Unsupported("real representative of a complex 1-form".into())),
        }
    }
}

/// `xi = A_a - A_b = -i (alpha_a - alpha_b)`, assembled region by region.
pub fn connection_difference(
    a: &PrequantumConnection,
    b: &PrequantumConnection,
    samples: &[Vec<f64>],
) -> Result<ConnectionDifference> {
    a.chart().ensure_same(b.chart())?;
    let base_gap = a.base().max_difference(b.base(), samples)?;
    if base_gap > CLOSEDNESS_TOL {
        return Err(BundleError::CurvatureMismatch { residual: base_gap });
    }
    let names_a: Vec<&str> = a.regions().iter().map(|r| r.name()).collect();
    let names_b: Vec<&str> = b.regions().iter().map(|r| r.name()).collect();
    if names_a != names_b {
        return Err(BundleError::Incompatible(format!("regions {names_a:?} vs {names_b:?}")));
    }
    for t in a.transitions() {
        let (w, _) = b.transition(&t.from, &t.to)?;
        if w != t.winding {
            return Err(BundleError::Incompatible(format!(
                "transition {} -> {} has winding {} vs {w}",
                t.from, t.to, t.winding
            )));
        }
    }
    let seams_a: Vec<(usize, i64)> = a.seams().iter().map(|s| (s.coord, s.winding)).collect();
    let seams_b: Vec<(usize, i64)> = b.seams().iter().map(|s| (s.coord, s.winding)).collect();
    if seams_a != seams_b {
        return Err(BundleError::Incompatible(format!("seams {seams_a:?} vs {seams_b:?}")));
    }
    let minus_i = Complex64::new(0.0, -1.0);
    let per_region: Vec<DifferentialForm> = a
        .regions()
        .iter()
        .zip(b.regions())
        .map(|(ra, rb)| Ok(ra.potential().sub(rb.potential())?.scale(minus_i)))
        .collect::<Result<_>>()?;
    for i in 0..per_region.len() {
        for j in i + 1..per_region.len() {
            let (ri, rj) = (&a.regions()[i], &a.regions()[j]);
            let overlap: Vec<Vec<f64>> = samples.iter().filter(|x| ri.contains(x) && rj.contains(x)).cloned().collect();
            let gap = per_region[i].max_difference(&per_region[j], &overlap)?;
            if gap > CLOSEDNESS_TOL {
                return Err(BundleError::Incompatible(format!(
                    "difference disagrees on the overlap of `{}` and `{}` by {gap:e}",
                    ri.name(),
                    rj.name()
                )));
            }
        }
    }
    let xi = if per_region.len() == 1 {
        per_region.into_iter().next().expect("one region")
    } else {
        let chart = a.chart().clone();
        let reality = per_region
            .iter()
            .filter(|f| !f.components().is_empty())
            .map(|f| f.reality())
            .reduce(Reality::sum)
            .unwrap_or(Reality::Real);
        let regions = a.regions().to_vec();
        let components = all_multi_indices(chart.dim(), 1);
        DifferentialForm::from_batch(chart, 1, components, reality, move |x| {
            let k = regions.iter().position(|r| r.contains(x)).unwrap_or(0);
            per_region[k].dense_raw(x)
        })?
    };
    match ConnectionDifference::from_form(xi, samples) {
        Err(BundleError::NotClosed { residual }) => Err(BundleError::CurvatureMismatch { residual }),
        other => other,
    }
}

/// Loops on which periods are probed by default: the equator on the sphere,
/// both generator circles on the torus, a circle of half the radius on a
/// planar disk.
pub fn default_probe_loops(chart: &Arc<Chart>) -> Vec<PathInChart> {
    match chart.kind() {
        ChartKind::SphereCyl => vec![PathInChart::latitude(chart.clone(), 0.0)],
        ChartKind::Torus => vec![
            PathInChart::torus_circle(chart.clone(), 0, 0.0),
            PathInChart::torus_circle(chart.clone(), 1, 0.0),
        ],
        ChartKind::Disk { radius } if chart.dim() == 2 => {
            let r = radius / 2.0;
            vec![PathInChart::new(chart.clone(), true, move |t| {
                let a = 2.0 * PI * t;
                vec![r * a.cos(), r * a.sin()]
            })
            .with_velocity(move |t| {
                let a = 2.0 * PI * t;
                vec![-2.0 * PI * r * a.sin(), 2.0 * PI * r * a.cos()]
            })
            .with_label("half-radius circle")]
        }
        _ => vec![],
    }
}

/// `oint xi` over each loop.
pub fn periods(xi: &ConnectionDifference, loops: &[PathInChart]) -> Result<Vec<Complex64>> {
    loops
        .iter()
        .map(|l| {
            if !l.is_closed() || l.validate_closed().is_err() {
                return Err(BundleError::OpenPath(l.label().to_string()));
            }
            Ok(integrate_along_path(xi.xi(), l, 32, 256)?)
        })
        .collect()
}

/// Deterministic path families from the basepoint, used to define and then
/// cross-check `phi(p) = int xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathFamily {
    /// Disk: straight segment. Cylinder/torus: second coordinate first
    /// (theta fixed), then the first.
    Primary,
    /// Disk: through the midpoint pulled halfway to the centre.
    /// Cylinder/torus: first coordinate first, then the second.
    Secondary,
}

fn wrap(d: f64, period: f64) -> f64 {
    let r = d - period * (d / period).round();
    if r <= -period / 2.0 {
        r + period
    } else {
        r
    }
}

fn family_legs(chart: &Chart, base: &[f64], p: &[f64], family: PathFamily) -> Vec<(Vec<f64>, Vec<f64>)> {
    match chart.kind() {
        ChartKind::SphereCyl | ChartKind::Torus => {
            let mut target = base.to_vec();
            for i in 0..2 {
                let d = match chart.period(i) {
                    Some(per) => wrap(p[i] - base[i], per),
                    None => p[i] - base[i],
                };
                target[i] = base[i] + d;
            }
            let corner = match family {
                PathFamily::Primary => vec![base[0], target[1]],
                PathFamily::Secondary => vec![target[0], base[1]],
            };
            vec![(base.to_vec(), corner.clone()), (corner, target)]
        }
        _ => match family {
            PathFamily::Primary => vec![(base.to_vec(), p.to_vec())],
            PathFamily::Secondary => {
                let center = chart.star_center().unwrap_or_else(|| vec![0.0; base.len()]);
                let q: Vec<f64> = base
                    .iter()
                    .zip(p)
                    .zip(&center)
                    .map(|((a, b), c)| c + 0.5 * ((a + b) / 2.0 - c))
                    .collect();
                vec![(base.to_vec(), q.clone()), (q, p.to_vec())]
            }
        },
    }
}

fn family_integral(xi: &DifferentialForm, base: &[f64], p: &[f64], family: PathFamily) -> Result<Complex64> {
    let mut acc = ZERO;
    for (a, b) in family_legs(xi.chart(), base, p, family) {
        let d: Vec<f64> = b.iter().zip(&a).map(|(u, v)| u - v).collect();
        if d.iter().all(|v| *v == 0.0) {
            continue;
        }
        let mut x = a.clone();
        for (t, w) in gauss_legendre(LEG_ORDER, 0.0, 1.0) {
            for i in 0..x.len() {
                x[i] = a[i] + t * d[i];
            }
            let vals = xi.eval_raw(&x)?;
            let dens = xi.components().iter().zip(vals).fold(ZERO, |s, (idx, v)| s + v * d[idx[0]]);
            acc += w * dens;
        }
    }
    Ok(acc)
}

/// Gauge function `phi` with `d phi = xi` and `phi(basepoint) = 0`.
#[derive(Debug, Clone)]
pub struct GaugeFunction {
    phi: ScalarField,
    basepoint: Vec<f64>,
    hermitian: bool,
    disagreement: f64,
}

impl GaugeFunction {
    /// Wraps an arbitrary field (for example an averaged gauge function).
    pub fn from_field(phi: ScalarField, basepoint: Vec<f64>, hermitian: bool) -> Self {
        GaugeFunction { phi, basepoint, hermitian, disagreement: 0.0 }
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn value(&self, x: &[f64]) -> Result<Complex64> {
        Ok(self.phi.value(x)?)
    }

    pub fn basepoint(&self) -> &[f64] {
        &self.basepoint
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Largest disagreement between the two path families at the check points.
    pub fn path_disagreement(&self) -> f64 {
        self.disagreement
    }

    /// `sup |xi - d phi|` with `d phi` by central differences.
    pub fn gauge_residual(&self, xi: &ConnectionDifference, samples: &[Vec<f64>]) -> Result<f64> {
        let dphi = exterior_derivative(&DifferentialForm::scalar(xi.chart().clone(), self.phi.clone()), FD_STEP)?;
        Ok(dphi.max_difference(xi.xi(), samples)?)
    }

    /// `sup |Re phi|` over samples.
    pub fn real_part_bound(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for x in samples {
            worst = worst.max(self.phi.value(x)?.re.abs());
        }
        Ok(worst)
    }
}

/// Integrates `xi` from the basepoint after checking that its periods on the
/// probe loops vanish; path-independence is cross-checked against the
/// secondary family at 64 sample points.
pub fn recover_gauge(xi: &ConnectionDifference, basepoint: &Point, probe_loops: &[PathInChart]) -> Result<GaugeFunction> {
    if xi.residual() > CLOSEDNESS_TOL {
        return Err(BundleError::NotClosed { residual: xi.residual() });
    }
    if basepoint.chart() != xi.chart().name() {
        return Err(crate::geometry::GeometryError::ChartMismatch {
            expected: xi.chart().name().to_string(),
            found: basepoint.chart().to_string(),
        }
        .into());
    }
    for (l, p) in probe_loops.iter().zip(periods(xi, probe_loops)?) {
        if p.norm() > PERIOD_TOL {
            return Err(BundleError::Obstruction { loop_label: l.label().to_string(), period: p });
        }
    }
    let base = basepoint.coords().to_vec();
    let form = xi.xi().clone();
    let checks = sample_points(xi.chart(), 64, 0x6a, 0.01);
    let mut disagreement = 0.0f64;
    for x in &checks {
        let a = family_integral(&form, &base, x, PathFamily::Primary)?;
        let b = family_integral(&form, &base, x, PathFamily::Secondary)?;
        disagreement = disagreement.max((a - b).norm());
    }
    if disagreement > FAMILY_TOL {
        return Err(BundleError::PathDependence { disagreement });
    }
    let hermitian = xi.is_hermitian();
    let reality = xi.xi().reality();
    let b2 = base.clone();
    let phi = ScalarField::fallible(
        move |x| family_integral(&form, &b2, x, PathFamily::Primary).map_err(|e| match e {
            BundleError::Geometry(g) => g,
            other => crate::geometry::GeometryError::Evaluation(other.to_string()),
        }),
        reality,
    );
    Ok(GaugeFunction { phi, basepoint: base, hermitian, disagreement })
}

/// Map `t: M -> S^1` with `t^* dtheta = beta`, `beta` the real
/// representative of `xi`.
#[derive(Debug, Clone)]
pub struct CircleMap {
    map: SmoothMap,
    beta: DifferentialForm,
    base: Vec<f64>,
    disagreement: f64,
}

impl CircleMap {
    /// Map into the circle chart, valued in the angle `arg t` in `[0, 2pi)`.
    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn beta(&self) -> &DifferentialForm {
        &self.beta
    }

    /// `t(p)` as a unit complex number.
    pub fn value(&self, x: &[f64]) -> Result<Complex64> {
        let a = family_integral(&self.beta, &self.base, x, PathFamily::Primary)?;
        Ok(Complex64::from_polar(1.0, a.re))
    }

    pub fn path_disagreement(&self) -> f64 {
        self.disagreement
    }
}

/// `t(p) = exp(i int_{base -> p} beta)`; generator periods must lie in
/// `2pi Z`.
pub fn circle_map(xi: &ConnectionDifference, basepoint: &Point) -> Result<CircleMap> {
    let beta = xi.real_representative()?;
    let chart = xi.chart().clone();
    for l in default_probe_loops(&chart) {
        let p = integrate_along_path(&beta, &l, 32, 256)?.re;
        let nearest = (p / (2.0 * PI)).round();
        if (p - 2.0 * PI * nearest).abs() > PERIOD_TOL {
            return Err(BundleError::NonIntegralPeriod { loop_label: l.label().to_string(), period: p, nearest: nearest as i64 });
        }
    }
    let base = basepoint.coords().to_vec();
    let mut disagreement = 0.0f64;
    for x in sample_points(&chart, 64, 0x7c, 0.01) {
        let a = family_integral(&beta, &base, &x, PathFamily::Primary)?.re;
        let b = family_integral(&beta, &base, &x, PathFamily::Secondary)?.re;
        disagreement = disagreement.max((Complex64::from_polar(1.0, a) - Complex64::from_polar(1.0, b)).norm());
    }
    if disagreement > FAMILY_TOL {
        return Err(BundleError::PathDependence { disagreement });
    }
    let (bf, b2) = (beta.clone(), base.clone());
    let map = SmoothMap::fallible(chart, Chart::circle(), move |x| {
        let a = family_integral(&bf, &b2, x, PathFamily::Primary).map_err(|e| match e {
            BundleError::Geometry(g) => g,
            other => crate::geometry::GeometryError::Evaluation(other.to_string()),
        })?;
        Ok(vec![a.re.rem_euclid(2.0 * PI)])
    });
    Ok(CircleMap { map, beta, base, disagreement })
}

pub fn apply_gauge(conn: &PrequantumConnection, phi: &GaugeFunction) -> Result<PrequantumConnection> {
    apply_gauge_field(conn, phi.phi())
}

/// `A -> A + d phi`, i.e. `alpha -> alpha + i d phi`. A hermitian connection
/// needs `phi` imaginary so that the shift stays real.
pub fn apply_gauge_field(conn: &PrequantumConnection, phi: &ScalarField) -> Result<PrequantumConnection> {
    if conn.is_hermitian() && phi.reality() != Reality::Imaginary {
        let probes = sample_points(conn.chart(), 32, 0x4e, 0.0);
        let mut violation = 0.0f64;
        for x in &probes {
            violation = violation.max(phi.value(x)?.re.abs());
        }
        if violation > HERMITIAN_TOL {
            return Err(BundleError::HermitianViolation { violation });
        }
    }
    let dphi = exterior_derivative(&DifferentialForm::scalar(conn.chart().clone(), phi.clone()), FD_STEP)?;
    let mut shift = dphi.times_i();
    if conn.is_hermitian() {
        shift = match shift.reality() {
            Reality::Real => shift,
            _ => shift.real_part(),
        };
    }
    conn.map_potentials(|a| Ok(a.add(&shift)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::holonomy;

    fn psi() -> ScalarField {
        ScalarField::real(|x| (1.0 - x[1] * x[1]) * x[0].cos())
            .with_real_gradient(|x| vec![-(1.0 - x[1] * x[1]) * x[0].sin(), -2.0 * x[1] * x[0].cos()])
    }

    fn dpsi(chart: &Arc<Chart>) -> DifferentialForm {
        exterior_derivative(&DifferentialForm::scalar(chart.clone(), psi()), FD_STEP).unwrap()
    }

    fn samples() -> Vec<Vec<f64>> {
        sample_points(&Chart::sphere(), 100, 5, 0.01)
    }

    #[test]
    fn identical_connections_differ_by_zero() {
        let a = PrequantumConnection::sphere_monopole(1);
        let d = connection_difference(&a, &a, &samples()).unwrap();
        assert!(d.xi().sup_norm(&samples()).unwrap() == 0.0);
        let base = Point::new(d.chart(), &[0.0, 0.0]).unwrap();
        let g = recover_gauge(&d, &base, &default_probe_loops(d.chart())).unwrap();
        assert_eq!(g.value(&[1.0, 0.3]).unwrap(), ZERO);
    }

    #[test]
    fn exact_shift_is_recovered() {
        let a = PrequantumConnection::sphere_monopole(1);
        let b = a.shift_by(&dpsi(a.chart())).unwrap();
        let s = samples();
        // xi = -i (alpha_b - alpha_a) = -i d psi
        let d = connection_difference(&b, &a, &s).unwrap();
        assert!(d.is_hermitian());
        let base = Point::new(d.chart(), &[0.0, 0.0]).unwrap();
        let g = recover_gauge(&d, &base, &default_probe_loops(d.chart())).unwrap();
        assert!(g.gauge_residual(&d, &s).unwrap() < 1e-5);
        assert!(g.path_disagreement() < 1e-5);
        assert!(g.real_part_bound(&s).unwrap() <= 1e-10);
        let p0 = psi().value(&[0.0, 0.0]).unwrap();
        for x in &s[..10] {
            // oracle: phi = -i (psi - psi(base))
            let want = Complex64::new(0.0, -1.0) * (psi().value(x).unwrap() - p0);
            assert!((g.value(x).unwrap() - want).norm() < 1e-5);
        }
    }

    #[test]
    fn gauge_round_trip_and_holonomy() {
        let a = PrequantumConnection::sphere_monopole(2);
        let phi = psi().times_i();
        let b = apply_gauge_field(&a, &phi).unwrap();
        let s = samples();
        let d = connection_difference(&b, &a, &s).unwrap();
        let dphi = exterior_derivative(&DifferentialForm::scalar(a.chart().clone(), phi), FD_STEP).unwrap();
        assert!(d.xi().max_difference(&dphi, &s).unwrap() < 1e-6);
        for z in [-0.7, 0.1, 0.6] {
            let l = PathInChart::latitude(a.chart().clone(), z);
            assert!((holonomy(&a, &l).unwrap() - holonomy(&b, &l).unwrap()).norm() < 1e-8);
        }
        assert!(matches!(apply_gauge_field(&a, &psi()), Err(BundleError::HermitianViolation { .. })));
    }

    #[test]
    fn curvature_mismatch_is_reported() {
        let a = PrequantumConnection::sphere_monopole(1);
        let b = PrequantumConnection::sphere_monopole(2);
        assert!(matches!(connection_difference(&a, &b, &samples()), Err(BundleError::CurvatureMismatch { .. })));
    }

    fn torus_xi(c: f64) -> ConnectionDifference {
        let t = Chart::torus();
        let f = DifferentialForm::basis(t.clone(), &[0], c).unwrap();
        ConnectionDifference::from_form(f, &sample_points(&t, 20, 1, 0.0)).unwrap()
    }

    #[test]
    fn torus_periods_and_obstruction() {
        let xi = torus_xi(0.3);
        let loops = default_probe_loops(xi.chart());
        let p = periods(&xi, &loops).unwrap();
        assert!((p[0].re - 2.0 * PI * 0.3).abs() < 1e-9 && p[1].norm() < 1e-12);
        let base = Point::new(xi.chart(), &[0.0, 0.0]).unwrap();
        match recover_gauge(&xi, &base, &loops) {
            Err(BundleError::Obstruction { period, .. }) => assert!((period.re - 0.6 * PI).abs() < 1e-9),
            other => panic!("expected obstruction, got {other:?}"),
        }
        assert!(matches!(circle_map(&xi, &base), Err(BundleError::NonIntegralPeriod { nearest: 0, .. })));
    }

    #[test]
    fn circle_map_winds() {
        let base_pt = |xi: &ConnectionDifference| Point::new(xi.chart(), &[0.0, 0.0]).unwrap();
        let xi = torus_xi(1.0);
        let t = circle_map(&xi, &base_pt(&xi)).unwrap();
        for x in sample_points(xi.chart(), 50, 9, 0.0) {
            assert!((t.value(&x).unwrap() - Complex64::from_polar(1.0, x[0])).norm() < 1e-12);
        }
        let xi2 = torus_xi(2.0);
        let t2 = circle_map(&xi2, &base_pt(&xi2)).unwrap();
        let dtheta = DifferentialForm::basis(Chart::circle(), &[0], 1.0).unwrap();
        let pulled = crate::geometry::pullback_form(t2.map(), &dtheta).unwrap();
        let loop_ = PathInChart::torus_circle(xi2.chart().clone(), 0, 0.5);
        let w = integrate_along_path(&pulled, &loop_, 32, 64).unwrap();
        assert!((w.re - 4.0 * PI).abs() < 1e-6);
        let zero = torus_xi(0.0);
        let t0 = circle_map(&zero, &base_pt(&zero)).unwrap();
        assert_eq!(t0.value(&[2.0, 1.0]).unwrap(), Complex64::new(1.0, 0.0));
    }
}
