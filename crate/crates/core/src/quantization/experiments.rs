use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::fibration::LagrangianFibration;
use super::spectrum::{bs_spectrum, BSSpectrum};
use super::{QuantizationError, Result};
use crate::bundle::PrequantumConnection;
use crate::geometry::{exterior_derivative, ChartKind, DifferentialForm, ScalarField, FD_STEP};
use crate::symplectic::{surface_total_integral, SymplecticForm};

const SPECTRUM_TOL: f64 = 1e-6;
const CLASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct IndependenceReport {
    pub baseline: BSSpectrum,
    pub perturbed: Vec<BSSpectrum>,
    /// Largest level-wise deviation; infinite when a spectrum changed shape.
    pub max_deviation: f64,
}

impl IndependenceReport {
    pub fn passed(&self) -> bool {
        self.max_deviation <= SPECTRUM_TOL
    }
}

/// Spectrum of `conn` against the spectra of `conn + d psi` for each `psi`.
pub fn independence_experiment(
    conn: &PrequantumConnection,
    fib: &LagrangianFibration,
    perturbations: &[ScalarField],
    grid_step: f64,
    root_tol: f64,
) -> Result<IndependenceReport> {
    match conn.chart().kind() {
        ChartKind::SphereCyl | ChartKind::Disk { .. } => {}
        _ => {
            return Err(QuantizationError::Unsupported(format!(
                "independence experiment needs trivial H^1, got `{}`",
                conn.chart().name()
            )))
        }
    }
    let baseline = bs_spectrum(conn, fib, grid_step, root_tol)?;
    let perturbed: Vec<BSSpectrum> = perturbations
        .par_iter()
        .enumerate()
        .map(|(i, psi)| {
            let dpsi = exterior_derivative(&DifferentialForm::scalar(conn.chart().clone(), psi.clone()), FD_STEP)?;
            let shifted = conn.shift_by(&dpsi)?.with_label(format!("{} + d psi_{i}", conn.label()));
            bs_spectrum(&shifted, fib, grid_step, root_tol)
        })
        .collect::<Result<_>>()?;
    let max_deviation = perturbed.iter().map(|s| baseline.deviation(s).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
    Ok(IndependenceReport { baseline, perturbed, max_deviation })
}

/// Random real trigonometric polynomial on the sphere chart,
/// `a0 z + a1 z^2 + sum_{m=1,2} (1 - z^2)(b_m cos m theta + c_m sin m theta)(1 + d_m z)`.
pub fn random_trig_polynomial(seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = [0.0f64; 8];
    for v in &mut c {
        *v = rng.random_range(-1.0..1.0);
    }
    let value = move |x: &[f64]| {
        let (t, z) = (x[0], x[1]);
        let mut s = c[0] * z + c[1] * z * z;
        for m in 1..=2usize {
            let (b, cc, d) = (c[3 * m - 1], c[3 * m], c[3 * m + 1]);
            let mf = m as f64;
            s += (1.0 - z * z) * (b * (mf * t).cos() + cc * (mf * t).sin()) * (1.0 + d * z);
        }
        s
    };
    let grad = move |x: &[f64]| {
        let (t, z) = (x[0], x[1]);
        let mut g = [0.0, c[0] + 2.0 * c[1] * z];
        for m in 1..=2usize {
            let (b, cc, d) = (c[3 * m - 1], c[3 * m], c[3 * m + 1]);
            let mf = m as f64;
            let trig = b * (mf * t).cos() + cc * (mf * t).sin();
            let dtrig = mf * (-b * (mf * t).sin() + cc * (mf * t).cos());
            let p = (1.0 - z * z) * (1.0 + d * z);
            let dp = -2.0 * z * (1.0 + d * z) + (1.0 - z * z) * d;
            g[0] += p * dtrig;
            g[1] += dp * trig;
        }
        g.to_vec()
    };
    ScalarField::real(value).with_real_gradient(grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusRow {
    pub c: f64,
    /// `oint c dtheta1 = 2pi c`.
    pub period: f64,
    pub changed: bool,
    pub expected_change: bool,
}

#[derive(Debug, Clone)]
pub struct TorusReport {
    pub baseline: BSSpectrum,
    pub rows: Vec<TorusRow>,
}

impl TorusReport {
    /// The spectrum changed exactly for the non-integral shifts.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.changed == r.expected_change)
    }
}

/// Shifts the potential by `c dtheta1` for each `c` and records whether the
/// spectrum moved.
pub fn torus_counterexample(
    conn: &PrequantumConnection,
    fib: &LagrangianFibration,
    c_values: &[f64],
    grid_step: f64,
    root_tol: f64,
) -> Result<TorusReport> {
    if conn.chart().kind() != ChartKind::Torus {
        return Err(QuantizationError::Unsupported(format!("torus experiment on `{}`", conn.chart().name())));
    }
    let baseline = bs_spectrum(conn, fib, grid_step, root_tol)?;
    let rows = c_values
        .par_iter()
        .map(|&c| {
            let shift = DifferentialForm::basis(conn.chart().clone(), &[0], c)?;
            let s = bs_spectrum(&conn.shift_by(&shift)?, fib, grid_step, root_tol)?;
            Ok(TorusRow {
                c,
                period: 2.0 * PI * c,
                changed: !baseline.equals_within(&s, SPECTRUM_TOL),
                expected_change: (c - c.round()).abs() > CLASS_TOL,
            })
        })
        .collect::<Result<_>>()?;
    Ok(TorusReport { baseline, rows })
}

/// `int w / 2pi + 1 - g` for an integral class on a model surface.
pub fn riemann_roch_surface(omega: &SymplecticForm, genus: i64) -> Result<i64> {
    let chart = omega.chart();
    if chart.genus() != Some(genus) {
        return Err(QuantizationError::GenusMismatch { genus, chart: chart.name().to_string() });
    }
    let integral = surface_total_integral(omega.form(), 48, 128)?.re;
    let n = (integral / (2.0 * PI)).round();
    if (integral - 2.0 * PI * n).abs() > CLASS_TOL {
        return Err(QuantizationError::NonIntegralClass { integral });
    }
    Ok(n as i64 + 1 - genus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{sample_points, Chart};

    fn sphere_fib() -> LagrangianFibration {
        LagrangianFibration::sphere_height(Chart::sphere()).unwrap()
    }

    #[test]
    fn exact_perturbations_keep_the_spectrum() {
        let conn = PrequantumConnection::sphere_monopole(1);
        let scripted = ScalarField::real(|x| (1.0 - x[1] * x[1]) * x[0].cos());
        let mut psis = vec![ScalarField::zero(), scripted];
        psis.extend((0..3).map(random_trig_polynomial));
        let r = independence_experiment(&conn, &sphere_fib(), &psis, 0.05, 1e-10).unwrap();
        assert!(r.passed(), "deviation {}", r.max_deviation);
        assert_eq!(r.perturbed.len(), 5);
    }

    #[test]
    fn random_polynomial_gradient_matches_differences() {
        let psi = random_trig_polynomial(11);
        for x in sample_points(&Chart::sphere(), 10, 3, 0.0) {
            let g = psi.gradient(&x, FD_STEP).unwrap();
            let fd = psi.fd_gradient(&x, FD_STEP).unwrap();
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn torus_dichotomy() {
        let t = Chart::torus();
        let fib = LagrangianFibration::torus_linear(t).unwrap();
        let r = torus_counterexample(&PrequantumConnection::torus(1, 0.0), &fib, &[0.0, 0.5, 1.0, 0.3, 2.0], 0.1, 1e-10)
            .unwrap();
        assert!(r.passed(), "{:?} {:?}", r.rows, r.baseline.regular_levels);
        let changed: Vec<bool> = r.rows.iter().map(|row| row.changed).collect();
        assert_eq!(changed, vec![false, true, false, true, false]);
        assert!((r.rows[1].period - PI).abs() < 1e-15);
    }

    #[test]
    fn riemann_roch_counts() {
        for k in 1..=3 {
            let w = SymplecticForm::new(PrequantumConnection::sphere_monopole(k).base().clone()).unwrap();
            assert_eq!(riemann_roch_surface(&w, 0).unwrap(), 2 * k + 1);
        }
        let torus = SymplecticForm::new(PrequantumConnection::torus(1, 0.0).base().clone()).unwrap();
        assert_eq!(riemann_roch_surface(&torus, 1).unwrap(), 1);
        assert!(matches!(riemann_roch_surface(&torus, 0), Err(QuantizationError::GenusMismatch { .. })));
        let half = DifferentialForm::basis(Chart::sphere(), &[1, 0], 0.5).unwrap();
        let w = SymplecticForm::new(half.scale_real(1.5)).unwrap();
        assert!(matches!(riemann_roch_surface(&w, 0), Err(QuantizationError::NonIntegralClass { .. })));
    }
}
