use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::report::{Report, SpectrumTable};
use super::ScenarioError;
use crate::bundle::{
    circle_map, connection_difference, default_probe_loops, holonomy, periods, recover_gauge, BundleError,
    ConnectionDifference, PrequantumConnection, Region,
};
use crate::geometry::{
    exterior_derivative, pullback_form, sample_points, Chart, DifferentialForm, PathInChart, Point, Pole, ScalarField,
    FD_STEP,
};
use crate::quantization::{
    bs_spectrum, independence_experiment, random_trig_polynomial, riemann_roch_surface, torus_counterexample,
    LagrangianFibration,
};
use crate::symplectic::{
    average_over_circle, average_scalar_over_circle, darboux_chart, poincare_primitive, sphere_fiber_primitive,
    CircleAction, FlowMap, MoserPath, Primitive, SymplecticForm,
};

type Outcome = Result<(), ScenarioError>;

/// Largest coordinate gap, periodic coordinates compared modulo the period.
fn chart_distance(chart: &Chart, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| match chart.period(i) {
            Some(p) => {
                let d = (x - y).rem_euclid(p);
                d.min(p - d)
            }
            None => (x - y).abs(),
        })
        .fold(0.0, f64::max)
}

fn sphere_area(scale: f64) -> Result<SymplecticForm, ScenarioError> {
    Ok(SymplecticForm::new(DifferentialForm::basis(Chart::sphere(), &[1, 0], scale)?)?)
}

/// `w0 = dz ^ dtheta`, `w1 = (1 + eps (3 z^2 - 1) / 2) dz ^ dtheta`.
fn sphere_moser_pair(eps: f64) -> Result<MoserPath, ScenarioError> {
    let density = ScalarField::real(move |x| 1.0 + eps * (3.0 * x[1] * x[1] - 1.0) / 2.0)
        .with_real_gradient(move |x| vec![0.0, 3.0 * eps * x[1]]);
    let w1 = DifferentialForm::from_terms(Chart::sphere(), 2, vec![(vec![1, 0], density)])?;
    Ok(MoserPath::new(sphere_area(1.0)?, SymplecticForm::new(w1)?)?)
}

fn exact(chart: &Arc<Chart>, psi: &ScalarField) -> Result<DifferentialForm, ScenarioError> {
    Ok(exterior_derivative(&DifferentialForm::scalar(chart.clone(), psi.clone()), FD_STEP)?)
}

/// `(1 - z^2) cos theta` with its gradient.
fn scripted_psi() -> ScalarField {
    ScalarField::real(|x| (1.0 - x[1] * x[1]) * x[0].cos())
        .with_real_gradient(|x| vec![-(1.0 - x[1] * x[1]) * x[0].sin(), -2.0 * x[1] * x[0].cos()])
}

fn pullback_residual(flow: &FlowMap, samples: &[Vec<f64>]) -> Result<f64, ScenarioError> {
    let path = flow.path();
    let pulled = pullback_form(&flow.as_smooth_map(), path.omega1().form())?;
    Ok(pulled.max_difference(path.omega0().form(), samples)?)
}

/// Local normal form on a disk, then two connections with the same curvature
/// related by a recovered gauge function.
pub(super) fn darboux_local(cfg: &ScenarioConfig, rep: &mut Report) -> Outcome {
    let (p, tol) = (&cfg.params, &cfg.tolerances);
    let disk = Chart::disk(2, 1.0)?;
    let density = ScalarField::real(|x| 1.0 + x[0]).with_real_gradient(|_| vec![1.0, 0.0]);
    let omega = SymplecticForm::new(DifferentialForm::from_terms(disk.clone(), 2, vec![(vec![0, 1], density)])?)?;
    let chart = darboux_chart(&omega, &[0.0, 0.0], p.radius, p.darboux_steps)?;
    let ball = chart.map().source().clone();
    let ball_samples = sample_points(&ball, p.samples.min(100), cfg.seed, 0.0);
    rep.at_most("darboux pullback residual", chart.pullback_residual(&omega, &ball_samples)?, tol.pullback);

    let radial = poincare_primitive(omega.form())?;
    // d((x + x^2/2) dy) = (1 + x) dx ^ dy
    let axis = DifferentialForm::from_terms(
        disk.clone(),
        1,
        vec![(vec![1], ScalarField::real(|x| x[0] + x[0] * x[0] / 2.0).with_real_gradient(|x| vec![1.0 + x[0], 0.0]))],
    )?;
    let conn_radial =
        PrequantumConnection::new(omega.form().clone(), vec![Region::global(radial)], vec![], vec![], true, "radial primitive")?;
    let conn_axis =
        PrequantumConnection::new(omega.form().clone(), vec![Region::global(axis)], vec![], vec![], true, "axis primitive")?;
    let disk_samples = sample_points(&disk, p.samples, cfg.seed ^ 0xd15c, 0.0);
    rep.at_most("radial primitive curvature residual", conn_radial.prequantum_residual(&disk_samples)?, tol.primitive);
    let xi = connection_difference(&conn_axis, &conn_radial, &disk_samples)?;
    let phi = recover_gauge(&xi, &Point::new(&disk, &[0.0, 0.0])?, &default_probe_loops(&disk))?;
    rep.at_most("gauge residual", phi.gauge_residual(&xi, &disk_samples)?, tol.gauge);
    rep.at_most("path family disagreement", phi.path_disagreement(), tol.path_family);
    rep.at_most("hermitian real part", phi.real_part_bound(&disk_samples)?, tol.hermitian);

    let pulled = conn_radial.pullback(chart.map())?;
    let standard = SymplecticForm::standard(ball.clone())?;
    let few: Vec<Vec<f64>> = ball_samples.iter().take(20).cloned().collect();
    let curvature = pulled.curvature("global")?.max_difference(standard.form(), &few)?;
    rep.at_most("pulled-back curvature residual", curvature, tol.pullback);
    Ok(())
}

/// Global Moser flow on the sphere between two area forms of equal total
/// area.
pub(super) fn moser_sphere(cfg: &ScenarioConfig, rep: &mut Report) -> Outcome {
    let (p, tol) = (&cfg.params, &cfg.tolerances);
    let path = sphere_moser_pair(p.epsilon)?;
    let chart = path.chart().clone();
    let samples = sample_points(&chart, p.samples, cfg.seed, 0.01);
    let alpha = sphere_fiber_primitive(path.difference())?;
    let prim = Primitive::new(alpha, path.difference(), &samples, FD_STEP, f64::INFINITY)?;
    rep.at_most("primitive residual", prim.residual(), tol.primitive);
    rep.observe("primitive pole decay ratio north", prim.alpha().pole_decay_ratio(Pole::North)?);
    rep.observe("primitive pole decay ratio south", prim.alpha().pole_decay_ratio(Pole::South)?);

    let flow = FlowMap::new(path.clone(), prim.alpha().clone(), p.steps)?;
    let residual = pullback_residual(&flow, &samples)?;
    if p.epsilon == 0.0 {
        rep.at_most("pullback residual", residual, tol.identity);
        let moved = samples
            .par_iter()
            .map(|x| Ok(chart_distance(&chart, &flow.forward(x)?, x)))
            .collect::<Result<Vec<f64>, ScenarioError>>()?;
        rep.at_most("identity displacement", moved.into_iter().fold(0.0, f64::max), tol.identity);
    } else {
        rep.at_most("pullback residual", residual, tol.pullback);
    }
    let inverse = samples
        .par_iter()
        .map(|x| Ok(chart_distance(&chart, &flow.backward(&flow.forward(x)?)?, x)))
        .collect::<Result<Vec<f64>, ScenarioError>>()?;
    rep.at_most("inverse round trip", inverse.into_iter().fold(0.0, f64::max), tol.inverse);

    // observed only: the residual is at roundoff level already
    let doubled = FlowMap::new(path.clone(), prim.alpha().clone(), 2 * p.steps)?;
    let residual2 = pullback_residual(&doubled, &samples)?;
    rep.observe("pullback residual at N", residual);
    rep.observe("pullback residual at 2N", residual2);
    rep.observe("refinement ratio", if residual2 > 0.0 { residual / residual2 } else { f64::INFINITY });

    // the connection with curvature w1, carried back to curvature w0
    let conn1 = PrequantumConnection::sphere_monopole(1).shift_by(prim.alpha())?;
    let pulled = conn1.pullback(&flow.as_smooth_map())?;
    let few: Vec<Vec<f64>> = samples.iter().take(24).cloned().collect();
    let mut worst = 0.0f64;
    for r in pulled.regions() {
        let inside: Vec<Vec<f64>> = few.iter().filter(|x| r.contains(x)).cloned().collect();
        worst = worst.max(pulled.curvature(r.name())?.max_difference(path.omega0().form(), &inside)?);
    }
    rep.at_most("pulled-back curvature residual", worst, tol.pullback);
    Ok(())
}

fn rotate(x: &[f64], g: f64) -> Vec<f64> {
    vec![x[0] + g, x[1]]
}

/// Moser flow made equivariant by averaging the primitive over rotations,
/// and an averaged gauge function.
pub(super) fn weinstein_rotation(cfg: &ScenarioConfig, rep: &mut Report) -> Outcome {
    let (p, tol) = (&cfg.params, &cfg.tolerances);
    let path = sphere_moser_pair(p.epsilon)?;
    let chart = path.chart().clone();
    let action = CircleAction::rotation(chart.clone(), 0)?;
    let samples = sample_points(&chart, 100, cfg.seed, 0.01);
    let angles = [0.7, 2.1, 4.4];

    let tilt = ScalarField::real(|x| 0.1 * (1.0 - x[1] * x[1]) * x[0].cos())
        .with_real_gradient(|x| vec![-0.1 * (1.0 - x[1] * x[1]) * x[0].sin(), -0.2 * x[1] * x[0].cos()]);
    let raw = sphere_fiber_primitive(path.difference())?.add(&exact(&chart, &tilt)?)?;
    let averaged = average_over_circle(&action, &raw, p.average_nodes)?;
    let prim = Primitive::new(averaged, path.difference(), &samples, FD_STEP, f64::INFINITY)?;
    rep.at_most("averaged primitive residual", prim.residual(), tol.primitive);
    rep.at_most(
        "averaged primitive invariance",
        action.invariance_defect(prim.alpha(), &samples[..20], &angles)?,
        tol.invariance,
    );

    let commute = |flow: &FlowMap| -> Result<f64, ScenarioError> {
        let defects = samples
            .par_iter()
            .map(|x| {
                let mut worst = 0.0f64;
                let fx = flow.forward(x)?;
                for &g in &angles {
                    worst = worst.max(chart_distance(&chart, &flow.forward(&rotate(x, g))?, &rotate(&fx, g)));
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>, ScenarioError>>()?;
        Ok(defects.into_iter().fold(0.0, f64::max))
    };
    let flow = FlowMap::new(path.clone(), prim.alpha().clone(), p.steps)?;
    rep.at_most("flow commutes with rotations", commute(&flow)?, tol.equivariance);
    rep.at_most("pullback residual", pullback_residual(&flow, &samples[..50])?, tol.pullback);
    let raw_flow = FlowMap::new(path, raw, p.steps)?;
    rep.observe("commutation defect without averaging", commute(&raw_flow)?);

    // gauge function between two invariant connections, then averaged
    let base = PrequantumConnection::sphere_monopole(1);
    let bump = ScalarField::real(|x| 0.3 * x[1].powi(3) + 0.2 * x[1])
        .with_real_gradient(|x| vec![0.0, 0.9 * x[1] * x[1] + 0.2]);
    let shifted = base.shift_by(&exact(&chart, &bump)?)?;
    let xi = connection_difference(&shifted, &base, &samples)?;
    let phi = recover_gauge(&xi, &Point::new(&chart, &[0.0, 0.0])?, &default_probe_loops(&chart))?;
    let phi_bar = average_scalar_over_circle(&action, phi.phi(), p.average_nodes)?;
    let avg = crate::bundle::GaugeFunction::from_field(phi_bar.clone(), vec![0.0, 0.0], true);
    let few = &samples[..30];
    rep.at_most("averaged gauge residual", avg.gauge_residual(&xi, few)?, tol.gauge);
    let form = DifferentialForm::scalar(chart.clone(), phi_bar);
    rep.at_most("averaged gauge invariance", action.invariance_defect(&form, few, &angles)?, tol.invariance);
    Ok(())
}

/// Two connections on the trivial bundle differing by an exact, non-constant
/// shift: the gauge function relating them is far from constant.
pub(super) fn gauge_necessity(cfg: &ScenarioConfig, rep: &mut Report) -> Outcome {
    let tol = &cfg.tolerances;
    let chart = Chart::sphere();
    let samples = sample_points(&chart, cfg.params.samples, cfg.seed, 0.01);
    let flat = PrequantumConnection::flat(chart.clone());
    let shifted = flat.shift_by(&exact(&chart, &scripted_psi())?)?.with_label("flat + d phi0");
    let xi = connection_difference(&shifted, &flat, &samples)?;
    let phi = recover_gauge(&xi, &Point::new(&chart, &[0.0, 0.0])?, &default_probe_loops(&chart))?;
    rep.at_most("gauge residual", phi.gauge_residual(&xi, &samples)?, tol.gauge);
    rep.at_most("path family disagreement", phi.path_disagreement(), tol.path_family);
    rep.at_most("hermitian real part", phi.real_part_bound(&samples)?, tol.hermitian);

    let values = samples.iter().map(|x| phi.value(x)).collect::<Result<Vec<Complex64>, BundleError>>()?;
    let mean = values.iter().sum::<Complex64>() / values.len() as f64;
    let variance = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (values.len() as f64 - 1.0);
    rep.at_least("gauge function sample variance", variance, tol.variance);

    let mut worst = 0.0f64;
    for j in 0..10 {
        let z = -0.9 + 1.8 * j as f64 / 9.0;
        let l = PathInChart::latitude(chart.clone(), z);
        worst = worst.max((holonomy(&flat, &l)? - holonomy(&shifted, &l)?).norm());
    }
    rep.at_most("holonomy gauge invariance", worst, tol.gauge_invariance);
    let regauged = crate::bundle::apply_gauge(&flat, &phi)?;
    let gap = regauged.regions()[0].potential().max_difference(shifted.regions()[0].potential(), &samples[..40])?;
    rep.observe("sup |alpha(flat gauged by phi) - alpha'|", gap);
    Ok(())
}

fn shift_torus(conn: &PrequantumConnection, c: f64) -> Result<PrequantumConnection, ScenarioError> {
    Ok(conn.shift_by(&DifferentialForm::basis(conn.chart().clone(), &[0], c)?)?)
}

/// Periods of `c dtheta1` on the torus, the gauge obstruction, the circle
/// map for integral periods and the effect on the spectrum.
pub(super) fn torus_periods(cfg: &ScenarioConfig, rep: &mut Report) -> Outcome {
    let (p, tol) = (&cfg.params, &cfg.tolerances);
    let torus = Chart::torus();
    let samples = sample_points(&torus, 60, cfg.seed, 0.0);
    let base = PrequantumConnection::torus(1, 0.0);
    let origin = Point::new(&torus, &[0.0, 0.0])?;
    let difference = |c: f64| -> Result<ConnectionDifference, ScenarioError> {
        Ok(connection_difference(&shift_torus(&base, c)?, &base, &samples)?)
    };

    let c = p.c;
    let xi = difference(c)?;
    let loops = default_probe_loops(&torus);
    let per = periods(&xi, &loops)?;
    // xi = -i c dtheta1: periods -2 pi i c and 0
    let want = [Complex64::new(0.0, -2.0 * PI * c), Complex64::new(0.0, 0.0)];
    let period_error = per.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    rep.at_most("period error", period_error, tol.period);
    rep.observe("theta1 period (imaginary part)", per[0].im);

    let obstructed = matches!(recover_gauge(&xi, &origin, &loops), Err(BundleError::Obstruction { .. }));
    rep.expect("H1 obstruction raised", obstructed, c.abs() > tol.period);
    let integral = (c - c.round()).abs() <= tol.period;
    match circle_map(&xi, &origin) {
        Ok(t) => {
            rep.expect("circle map exists", true, integral);
            rep.at_most("circle map pullback residual", circle_pullback_residual(&t, &xi, &samples)?, tol.circle_map);
        }
        Err(BundleError::NonIntegralPeriod { .. }) => {
            rep.expect("circle map exists", false, integral);
        }
        Err(e) => return Err(e.into()),
    }
    for n in [1.0, 2.0] {
        let t = circle_map(&difference(n)?, &origin)?;
        let r = circle_pullback_residual(&t, &difference(n)?, &samples)?;
        rep.at_most(&format!("circle map pullback residual c={n}"), r, tol.circle_map);
    }

    let fib = LagrangianFibration::torus_linear(torus.clone())?;
    let shifts = [0.0, 0.5, 1.0, 2.0, 0.3, c];
    let report = torus_counterexample(&base, &fib, &shifts, p.grid_step, p.root_tol)?;
    for row in &report.rows {
        rep.expect(&format!("spectrum changes for c={}", row.c), row.changed, row.expected_change);
    }
    rep.spectra.push(SpectrumTable::from_spectrum("torus-baseline", &report.baseline));
    let moved = bs_spectrum(&shift_torus(&base, c)?, &fib, p.grid_step, p.root_tol)?;
    rep.spectra.push(SpectrumTable::from_spectrum("torus-shifted", &moved));
    Ok(())
}

fn circle_pullback_residual(
    t: &crate::bundle::CircleMap,
    xi: &ConnectionDifference,
    samples: &[Vec<f64>],
) -> Result<f64, ScenarioError> {
    let dtheta = DifferentialForm::basis(Chart::circle(), &[0], 1.0)?;
    let pulled = pullback_form(t.map(), &dtheta)?;
    Ok(pulled.max_difference(&xi.real_representative()?, samples)?)
}

/// Bohr-Sommerfeld levels of the height fibration for `w = k dz ^ dtheta`.
pub(super) fn bs_sphere(cfg: &ScenarioConfig, rep: &mut Report) -> Outcome {
    let (p, tol) = (&cfg.params, &cfg.tolerances);
    let k = p.k;
    if k < 1 {
        return Err(ScenarioError::Config(format!("params.k must be positive, got {k}")));
    }
    let fib = LagrangianFibration::sphere_height(Chart::sphere())?;
    let s = bs_spectrum(&PrequantumConnection::sphere_monopole(k), &fib, p.grid_step, p.root_tol)?;
    let want: Vec<f64> = (1..2 * k).rev().map(|n| 1.0 - n as f64 / k as f64).collect();
    rep.expect("regular level count is 2k-1", s.regular_levels.len() == want.len(), true);
    let err = if s.regular_levels.len() == want.len() {
        s.regular_levels.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    rep.at_most("level error against 1 - n/k", err, tol.level);
    rep.at_most("leaf holonomy residual", s.residuals.iter().copied().fold(0.0, f64::max), tol.holonomy);
    rep.observe("total level count", s.total_count() as f64);
    rep.spectra.push(SpectrumTable::from_spectrum(format!("sphere-k{k}"), &s));
    Ok(())
}

/// Spectrum of the monopole against exact perturbations of its potential.
pub(super) fn bs_independence(cfg: &ScenarioConfig, rep: &mut Report) -> Outcome {
    let (p, tol) = (&cfg.params, &cfg.tolerances);
    let fib = LagrangianFibration::sphere_height(Chart::sphere())?;
    let conn = PrequantumConnection::sphere_monopole(p.k.max(1));
    let mut psis = vec![scripted_psi()];
    psis.extend((0..p.perturbations as u64).map(|i| random_trig_polynomial(cfg.seed.wrapping_mul(1000).wrapping_add(i))));
    let r = independence_experiment(&conn, &fib, &psis, p.grid_step, p.root_tol)?;
    rep.at_most("max level deviation", r.max_deviation, tol.level);
    rep.observe("perturbations", psis.len() as f64);
    rep.spectra.push(SpectrumTable::from_spectrum("independence-baseline", &r.baseline));
    Ok(())
}

/// Index `int w / 2pi + 1 - g` against Bohr-Sommerfeld level counts.
pub(super) fn riemann_roch(cfg: &ScenarioConfig, rep: &mut Report) -> Outcome {
    let p = &cfg.params;
    let fib = LagrangianFibration::sphere_height(Chart::sphere())?;
    for k in 1..=p.k_max {
        let rr = riemann_roch_surface(&sphere_area(k as f64)?, 0)?;
        rep.observe(&format!("index k={k}"), rr as f64);
        rep.expect(&format!("index equals 2k+1 for k={k}"), rr == 2 * k + 1, true);
        let s = bs_spectrum(&PrequantumConnection::sphere_monopole(k), &fib, p.grid_step, p.root_tol)?;
        rep.expect(&format!("level count equals index for k={k}"), s.total_count() as i64 == rr, true);
    }
    let torus = SymplecticForm::new(PrequantumConnection::torus(1, 0.0).base().clone())?;
    let rr = riemann_roch_surface(&torus, 1)?;
    rep.expect("torus index equals 1", rr == 1, true);
    Ok(())
}
