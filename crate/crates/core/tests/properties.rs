use std::f64::consts::PI;

use proptest::prelude::*;

use prequant::bundle::{
    apply_gauge_field, connection_difference, default_probe_loops, holonomy, recover_gauge, PrequantumConnection,
};
use prequant::geometry::{
    exterior_derivative, integrate_along_path, integrate_form, pullback_form, sample_points, Chart, DifferentialForm,
    ParamRange, Patch, PathInChart, Point, ScalarField, SmoothMap, FD_STEP,
};
use prequant::quantization::{bs_spectrum, random_trig_polynomial, LagrangianFibration};

fn disk_one_form(a: f64, b: f64) -> DifferentialForm {
    let disk = Chart::disk(2, 2.0).unwrap();
    DifferentialForm::from_terms(
        disk,
        1,
        vec![
            (vec![0], ScalarField::real(move |x| a * x[1] * x[1] + x[0] * x[1])),
            (vec![1], ScalarField::real(move |x| (b * x[0]).sin() + x[0] * x[0])),
        ],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn stokes_on_disk_rectangles(
        a in -1.0f64..1.0, b in -2.0f64..2.0,
        x0 in -1.2f64..0.0, dx in 0.1f64..1.0, y0 in -1.2f64..0.0, dy in 0.1f64..1.0,
    ) {
        let alpha = disk_one_form(a, b);
        let chart = alpha.chart().clone();
        let boundary = PathInChart::rectangle_boundary(chart, [x0, y0], [x0 + dx, y0 + dy]);
        let lhs = integrate_along_path(&alpha, &boundary, 32, 256).unwrap();
        let patch = Patch::coordinate(vec![
            ParamRange::Interval { lo: x0, hi: x0 + dx },
            ParamRange::Interval { lo: y0, hi: y0 + dy },
        ]);
        let rhs = integrate_form(&exterior_derivative(&alpha, FD_STEP).unwrap(), &patch, 32, 256).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-6, "{lhs} vs {rhs}");
    }

    #[test]
    fn pullback_is_functorial_and_commutes_with_d(a in -1.0f64..1.0, b in -2.0f64..2.0, s in 0.2f64..0.6) {
        let disk = Chart::disk(2, 2.0).unwrap();
        let f = SmoothMap::new(disk.clone(), disk.clone(), move |x| vec![s * x[0] + 0.1 * x[1] * x[1], s * x[1]]);
        let g = SmoothMap::new(disk.clone(), disk.clone(), move |x| vec![x[0] * (1.0 - 0.1 * x[1]), x[1] + 0.2 * x[0]]);
        let alpha = disk_one_form(a, b);
        let samples = sample_points(&disk, 12, 3, 0.6);
        let composed = pullback_form(&f.then(&g).unwrap(), &alpha).unwrap();
        let stepwise = pullback_form(&f, &pullback_form(&g, &alpha).unwrap()).unwrap();
        prop_assert!(composed.max_difference(&stepwise, &samples).unwrap() < 1e-6);
        let d_then_pull = pullback_form(&f, &exterior_derivative(&alpha, FD_STEP).unwrap()).unwrap();
        let pull_then_d = exterior_derivative(&pullback_form(&f, &alpha).unwrap(), FD_STEP).unwrap();
        prop_assert!(d_then_pull.max_difference(&pull_then_d, &samples).unwrap() < 1e-4);
    }

    #[test]
    fn sphere_gauge_round_trip(seed in 0u64..1000, k in 1i64..4) {
        let s = Chart::sphere();
        let base = PrequantumConnection::sphere_monopole(k);
        let psi = random_trig_polynomial(seed);
        let shifted = base.shift_by(&exterior_derivative(&DifferentialForm::scalar(s.clone(), psi), FD_STEP).unwrap()).unwrap();
        let samples = sample_points(&s, 40, seed, 0.01);
        let xi = connection_difference(&shifted, &base, &samples).unwrap();
        let origin = Point::new(&s, &[0.0, 0.0]).unwrap();
        let phi = recover_gauge(&xi, &origin, &default_probe_loops(&s)).unwrap();
        prop_assert!(phi.is_hermitian());
        let back = apply_gauge_field(&base, phi.phi()).unwrap();
        for z in [-0.6, 0.1, 0.7] {
            let l = PathInChart::latitude(s.clone(), z);
            let (h1, h2) = (holonomy(&shifted, &l).unwrap(), holonomy(&back, &l).unwrap());
            prop_assert!((h1 - h2).norm() < 1e-6, "z={z}: {h1} vs {h2}");
        }
    }

    #[test]
    fn torus_constant_shift_moves_levels_by_its_fraction(c in -0.45f64..0.45) {
        // a constant shift c dtheta1 multiplies every leaf holonomy by e^{2 pi i c}; with n = 1
        // the leaf phase is -theta2, so the unique level moves to 2 pi c mod 2 pi
        let t = Chart::torus();
        let fib = LagrangianFibration::torus_linear(t.clone()).unwrap();
        let conn = PrequantumConnection::torus(1, c);
        let spec = bs_spectrum(&conn, &fib, 0.05, 1e-10).unwrap();
        prop_assert_eq!(spec.regular_levels.len(), 1);
        let want = (2.0 * PI * c).rem_euclid(2.0 * PI);
        let got = spec.regular_levels[0].rem_euclid(2.0 * PI);
        let gap = (got - want).abs().min(2.0 * PI - (got - want).abs());
        prop_assert!(gap < 1e-8, "level {got} vs {want}");
    }
}
