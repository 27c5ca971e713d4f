use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::forms::surface_total_integral;
use super::{Result, SymplecticError};
use crate::geometry::quadrature::gauss_legendre;
use crate::geometry::{exterior_derivative, sample_points, ChartKind, DifferentialForm, MultiIndex, FD_STEP};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const RAY_NODES: usize = 64;

/// Radial homotopy primitive of a closed k-form on a star-shaped chart:
/// `alpha = sum_I sum_p (-1)^p x^{I_p} (int_0^1 t^{k-1} f_I(t x) dt) dx^{I \ I_p}`,
/// with `x` measured from the star centre.
pub fn poincare_primitive(f: &DifferentialForm) -> Result<DifferentialForm> {
    let chart = f.chart().clone();
    let center = chart
        .star_center()
        .ok_or_else(|| SymplecticError::NotStarShaped(chart.name().to_string()))?;
    let k = f.degree();
    if k == 0 {
        return Err(SymplecticError::Unsupported("primitive of a 0-form".into()));
    }
    if k < chart.dim() {
        let samples = sample_points(&chart, 50, 0x9e37, 0.0);
        let residual = exterior_derivative(f, FD_STEP)?.sup_norm(&samples)?;
        if residual > 1e-6 {
            return Err(SymplecticError::NotClosed { residual });
        }
    }
    let mut plan: std::collections::BTreeMap<MultiIndex, Vec<(usize, usize, f64)>> = Default::default();
    for (c, idx) in f.components().iter().enumerate() {
        for p in 0..idx.len() {
            let mut rest = idx.clone();
            let coord = rest.remove(p);
            let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
            plan.entry(rest).or_default().push((c, coord, sign));
        }
    }
    let components: Vec<MultiIndex> = plan.keys().cloned().collect();
    let plan: Vec<Vec<(usize, usize, f64)>> = plan.into_values().collect();
    let nodes: Vec<(f64, f64)> = gauss_legendre(RAY_NODES, 0.0, 1.0)
        .into_iter()
        .map(|(t, w)| (t, w * t.powi(k as i32 - 1)))
        .collect();
    let ncomp = f.components().len();
    let src = f.clone();
    Ok(DifferentialForm::from_batch(chart, k - 1, components, f.reality(), move |x| {
        let rel: Vec<f64> = x.iter().zip(&center).map(|(a, c)| a - c).collect();
        let mut ray = vec![ZERO; ncomp];
        let mut y = vec![0.0; x.len()];
        for &(t, w) in &nodes {
            for ((yi, ci), ri) in y.iter_mut().zip(&center).zip(&rel) {
                *yi = ci + t * ri;
            }
            for (acc, v) in ray.iter_mut().zip(src.eval_raw(&y)?) {
                *acc += w * v;
            }
        }
        Ok(plan
            .iter()
            .map(|terms| terms.iter().fold(ZERO, |acc, &(c, coord, s)| acc + s * rel[coord] * ray[c]))
            .collect())
    })?)
}

/// Chebyshev polynomials `T_0..T_{n-1}` at `z`.
fn chebyshev(z: f64, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n.max(2)];
    t[0] = 1.0;
    t[1] = z;
    for j in 2..n {
        t[j] = 2.0 * z * t[j - 1] - t[j - 2];
    }
    t.truncate(n);
    t
}

/// Primitive on the sphere chart with the default spectral resolution
/// (64 Fourier nodes in theta, 48 Chebyshev nodes in z).
pub fn sphere_fiber_primitive(f: &DifferentialForm) -> Result<DifferentialForm> {
    sphere_fiber_primitive_with(f, 64, 48)
}

/// Primitive `alpha = G dtheta + H dz` of `f = g dtheta ^ dz` on the sphere.
///
/// `g` is expanded as `sum c_mj e^{i m theta} T_j(z)`. The zonal part is
/// integrated in `z` from the south pole (`G`), the rest in `theta` (`H`).
/// `G(+-1) = 0` exactly: the zero total integral makes the fibre integral
/// vanish at the north pole, and the remaining quadrature error is removed by
/// a linear correction in `z`.
pub fn sphere_fiber_primitive_with(f: &DifferentialForm, n_theta: usize, n_z: usize) -> Result<DifferentialForm> {
    let chart = f.chart().clone();
    if chart.kind() != ChartKind::SphereCyl || f.degree() != 2 {
        return Err(SymplecticError::Unsupported(format!(
            "fibre primitive of a degree-{} form on `{}`",
            f.degree(),
            chart.name()
        )));
    }
    let integral = surface_total_integral(f, 32, 256)?;
    if integral.norm() > 1e-8 {
        return Err(SymplecticError::Cohomology { integral: integral.re });
    }
    let z_nodes: Vec<f64> = (0..n_z).map(|k| (PI * (k as f64 + 0.5) / n_z as f64).cos()).collect();
    let mmax = (n_theta / 2) as i64 - 1;
    // hat[m + mmax][k] = Fourier coefficient m at z_k
    let mut hat = vec![vec![ZERO; n_z]; (2 * mmax + 1) as usize];
    for (kz, &z) in z_nodes.iter().enumerate() {
        let samples: Vec<Complex64> = (0..n_theta)
            .map(|a| {
                let th = 2.0 * PI * a as f64 / n_theta as f64;
                let v = f.eval_raw(&[th, z])?;
                Ok(f.components().iter().zip(v).find(|(c, _)| **c == [0, 1]).map_or(ZERO, |(_, v)| v))
            })
            .collect::<std::result::Result<_, crate::geometry::GeometryError>>()?;
        for m in -mmax..=mmax {
            let mut acc = ZERO;
            for (a, s) in samples.iter().enumerate() {
                let th = 2.0 * PI * a as f64 / n_theta as f64;
                acc += s * Complex64::from_polar(1.0, -(m as f64) * th);
            }
            hat[(m + mmax) as usize][kz] = acc / n_theta as f64;
        }
    }
    let coeffs: Vec<Vec<Complex64>> = hat
        .iter()
        .map(|row| {
            (0..n_z)
                .map(|j| {
                    let mut acc = ZERO;
                    for (k, v) in row.iter().enumerate() {
                        acc += v * (j as f64 * PI * (k as f64 + 0.5) / n_z as f64).cos();
                    }
                    let c = acc * (2.0 / n_z as f64);
                    if j == 0 {
                        c * 0.5
                    } else {
                        c
                    }
                })
                .collect()
        })
        .collect();
    let biggest = coeffs.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
    let cutoff = 1e-14 * biggest.max(1e-300);

    // antiderivative of the zonal series, in Chebyshev coefficients
    let zonal = &coeffs[mmax as usize];
    let mut anti = vec![ZERO; n_z + 1];
    for (j, &c) in zonal.iter().enumerate() {
        if c.norm() <= cutoff {
            continue;
        }
        match j {
            0 => anti[1] += c,
            1 => anti[2] += c / 4.0,
            _ => {
                anti[j + 1] += c / (2.0 * (j as f64 + 1.0));
                anti[j - 1] -= c / (2.0 * (j as f64 - 1.0));
            }
        }
    }
    let eval_anti = {
        let anti = anti.clone();
        move |z: f64| -> Complex64 { chebyshev(z, anti.len()).iter().zip(&anti).map(|(t, c)| c * t).sum() }
    };
    let p_south = eval_anti(-1.0);
    let north_defect = -(eval_anti(1.0) - p_south);
    let g_fn = Arc::new(move |z: f64| -> Complex64 { -(eval_anti(z) - p_south) - north_defect * (z + 1.0) / 2.0 });

    let h_terms: Vec<(i64, Vec<Complex64>)> = (-mmax..=mmax)
        .filter(|&m| m != 0)
        .filter_map(|m| {
            let row = &coeffs[(m + mmax) as usize];
            let scaled: Vec<Complex64> = row
                .iter()
                .map(|c| if c.norm() > cutoff { c / Complex64::new(0.0, m as f64) } else { ZERO })
                .collect();
            scaled.iter().any(|c| *c != ZERO).then_some((m, scaled))
        })
        .collect();
    let has_g = anti.iter().any(|c| *c != ZERO);
    let mut components = Vec::new();
    if has_g {
        components.push(vec![0]);
    }
    if !h_terms.is_empty() {
        components.push(vec![1]);
    }
    let reality = f.reality();
    Ok(DifferentialForm::from_batch(chart, 1, components, reality, move |x| {
        let mut out = Vec::with_capacity(2);
        if has_g {
            out.push(g_fn(x[1]));
        }
        if !h_terms.is_empty() {
            let t = chebyshev(x[1], n_z);
            let mut h = ZERO;
            for (m, row) in &h_terms {
                let radial: Complex64 = row.iter().zip(&t).map(|(c, tj)| c * tj).sum();
                h += radial * Complex64::from_polar(1.0, *m as f64 * x[0]);
            }
            out.push(h);
        }
        Ok(out)
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Chart, ScalarField};
    use crate::symplectic::forms::primitive_residual;

    fn grid(n: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let th = 2.0 * PI * a as f64 / n as f64;
                let z = -0.99 + 1.98 * b as f64 / (n - 1) as f64;
                out.push(vec![th, z]);
            }
        }
        out
    }

    #[test]
    fn disk_area_primitive_is_half_rotation() {
        let d = Chart::disk(2, 1.0).unwrap();
        let w = DifferentialForm::basis(d.clone(), &[0, 1], 1.0).unwrap();
        let a = poincare_primitive(&w).unwrap();
        // oracle: (x dy - y dx) / 2
        let x = [0.3, -0.4];
        assert!((a.component(&[0], &x).unwrap().re - 0.2).abs() < 1e-14);
        assert!((a.component(&[1], &x).unwrap().re - 0.15).abs() < 1e-14);
    }

    #[test]
    fn exact_one_form_recovers_function() {
        let d = Chart::disk(2, 1.0).unwrap();
        // d(x^2 y) = 2xy dx + x^2 dy
        let f = DifferentialForm::from_terms(
            d.clone(),
            1,
            vec![
                (vec![0], ScalarField::real(|x| 2.0 * x[0] * x[1]).with_real_gradient(|x| vec![2.0 * x[1], 2.0 * x[0]])),
                (vec![1], ScalarField::real(|x| x[0] * x[0]).with_real_gradient(|x| vec![2.0 * x[0], 0.0])),
            ],
        )
        .unwrap();
        let psi = poincare_primitive(&f).unwrap();
        let mut pts = Vec::new();
        for i in 0..20 {
            for j in 0..20 {
                let (x, y) = (-0.6 + 0.06 * i as f64, -0.6 + 0.06 * j as f64);
                pts.push(vec![x, y]);
            }
        }
        assert!(primitive_residual(&psi, &f, &pts, 1e-5).unwrap() < 1e-8);
        let v = psi.component(&[], &[0.5, 0.2]).unwrap().re;
        assert!((v - 0.05).abs() < 1e-13);
    }

    #[test]
    fn non_closed_input_is_rejected() {
        let d = Chart::disk(2, 1.0).unwrap();
        let f = DifferentialForm::from_terms(d, 1, vec![(vec![1], ScalarField::real(|x| x[0]))]).unwrap();
        assert!(matches!(poincare_primitive(&f), Err(SymplecticError::NotClosed { .. })));
        let s = Chart::sphere();
        let f = DifferentialForm::basis(s, &[0, 1], 1.0).unwrap();
        assert!(matches!(poincare_primitive(&f), Err(SymplecticError::NotStarShaped(_))));
    }

    #[test]
    fn zonal_primitive_matches_analytic() {
        let s = Chart::sphere();
        let eps = 0.2;
        let f = DifferentialForm::from_terms(
            s,
            2,
            vec![(vec![0, 1], ScalarField::real(move |x| eps * (3.0 * x[1] * x[1] - 1.0) / 2.0))],
        )
        .unwrap();
        let a = sphere_fiber_primitive(&f).unwrap();
        for &z in &[-1.0, -0.7, 0.0, 0.45, 1.0] {
            let oracle = -eps * (z * z * z - z) / 2.0;
            assert!((a.eval_raw(&[0.3, z]).unwrap()[0].re - oracle).abs() < 1e-13);
        }
        assert_eq!(a.components(), &[vec![0]]);
    }

    #[test]
    fn non_zonal_primitive_residual() {
        let s = Chart::sphere();
        let f = DifferentialForm::from_terms(
            s,
            2,
            vec![(vec![0, 1], ScalarField::real(|x| 0.2 * x[0].cos() * (1.0 - x[1] * x[1])))],
        )
        .unwrap();
        let a = sphere_fiber_primitive(&f).unwrap();
        assert!(primitive_residual(&a, &f, &grid(40), 1e-5).unwrap() < 1e-6);
        assert!(a.component(&[0], &[1.0, 0.9]).unwrap().norm() < 1e-12);
    }

    #[test]
    fn nonzero_class_is_an_obstruction() {
        let s = Chart::sphere();
        let f = DifferentialForm::basis(s, &[0, 1], 1.0).unwrap();
        match sphere_fiber_primitive(&f) {
            Err(SymplecticError::Cohomology { integral }) => assert!((integral + 4.0 * PI).abs() < 1e-9),
            other => panic!("expected obstruction, got {other:?}"),
        }
    }

    #[test]
    fn zero_form_gives_zero_primitive() {
        let s = Chart::sphere();
        let f = DifferentialForm::zero(s, 2).unwrap();
        let a = sphere_fiber_primitive(&f).unwrap();
        assert!(a.components().is_empty());
    }
}
