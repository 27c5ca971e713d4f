use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::{BundleError, Result};
use crate::geometry::{
    exterior_derivative, pullback_form, sample_points, Chart, DifferentialForm, Reality, ScalarField,
    SmoothMap, FD_STEP,
};
use crate::symplectic::surface_total_integral;

type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A trivialising region with its potential.
#[derive(Clone)]
pub struct Region {
    name: String,
    potential: DifferentialForm,
    domain: Arc<DomainFn>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region").field("name", &self.name).field("potential", &self.potential).finish()
    }
}

impl Region {
    pub fn new<F>(name: impl Into<String>, potential: DifferentialForm, domain: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        Region { name: name.into(), potential, domain: Arc::new(domain) }
    }

    pub fn global(potential: DifferentialForm) -> Self {
        Self::new("global", potential, |_| true)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn potential(&self) -> &DifferentialForm {
        &self.potential
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.domain)(x)
    }

    fn with_potential(&self, potential: DifferentialForm) -> Self {
        Region { name: self.name.clone(), potential, domain: self.domain.clone() }
    }
}

/// `alpha_to - alpha_from = winding * d angle` on the overlap.
#[derive(Debug, Clone)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub winding: i64,
    pub angle: ScalarField,
}

/// Identification across a periodic coordinate whose potential is not
/// periodic: `alpha(x + P e_coord) = alpha(x) + winding * d angle`.
#[derive(Debug, Clone)]
pub struct Seam {
    pub coord: usize,
    pub winding: i64,
    pub angle: ScalarField,
}

/// Prequantum connection: base 2-form, region potentials and overlap data.
#[derive(Debug, Clone)]
pub struct PrequantumConnection {
    base: DifferentialForm,
    regions: Vec<Region>,
    transitions: Vec<Transition>,
    seams: Vec<Seam>,
    hermitian: bool,
    label: String,
}

fn theta_angle(coord: usize) -> ScalarField {
    ScalarField::real(move |x| x[coord]).with_real_gradient(move |x| {
        let mut g = vec![0.0; x.len()];
        g[coord] = 1.0;
        g
    })
}

impl PrequantumConnection {
    pub fn new(
        base: DifferentialForm,
        regions: Vec<Region>,
        transitions: Vec<Transition>,
        seams: Vec<Seam>,
        hermitian: bool,
        label: impl Into<String>,
    ) -> Result<Self> {
        if base.degree() != 2 {
            return Err(BundleError::Unsupported(format!("base form of degree {}", base.degree())));
        }
        if regions.is_empty() {
            return Err(BundleError::Unsupported("connection without regions".into()));
        }
        for r in &regions {
            r.potential.chart().ensure_same(base.chart())?;
            if r.potential.degree() != 1 {
                return Err(BundleError::Unsupported(format!("potential of degree {}", r.potential.degree())));
            }
        }
        for t in &transitions {
            for name in [&t.from, &t.to] {
                if !regions.iter().any(|r| &r.name == name) {
                    return Err(BundleError::UnknownRegion(name.clone()));
                }
            }
        }
        Ok(PrequantumConnection { base, regions, transitions, seams, hermitian, label: label.into() })
    }

    /// Monopole bundle of degree `2k` over the sphere with `w = k dz ^ dtheta`:
    /// `alpha_N = k (z - 1) dtheta` on `z > -1/2`, `alpha_S = k (z + 1) dtheta`
    /// on `z < 1/2`, transition winding `2k` in `theta`.
    pub fn sphere_monopole(k: i64) -> Self {
        let s = Chart::sphere();
        let kf = k as f64;
        let base = DifferentialForm::basis(s.clone(), &[1, 0], kf).expect("valid basis");
        let pot = |shift: f64| {
            DifferentialForm::from_terms(
                s.clone(),
                1,
                vec![(vec![0], ScalarField::real(move |x| kf * (x[1] + shift)).with_real_gradient(move |_| vec![0.0, kf]))],
            )
            .expect("valid potential")
        };
        let north = Region::new("north", pot(-1.0), |x| x[1] > -0.5);
        let south = Region::new("south", pot(1.0), |x| x[1] < 0.5);
        let t = Transition { from: "north".into(), to: "south".into(), winding: 2 * k, angle: theta_angle(0) };
        Self::new(base, vec![north, south], vec![t], vec![], true, format!("sphere monopole k={k}")).expect("valid model")
    }

    /// `alpha = (1/2) sum_i (x_i dx_{n+i} - x_{n+i} dx_i)` with `w` standard.
    pub fn disk_standard(chart: Arc<Chart>) -> Result<Self> {
        let n = chart.dim() / 2;
        let mut terms = Vec::new();
        let mut base = DifferentialForm::zero(chart.clone(), 2)?;
        for i in 0..n {
            let (p, q) = (i, n + i);
            let grad = move |c: usize, s: f64| {
                move |x: &[f64]| {
                    let mut g = vec![0.0; x.len()];
                    g[c] = s;
                    g
                }
            };
            terms.push((vec![q], ScalarField::real(move |x| 0.5 * x[p]).with_real_gradient(grad(p, 0.5))));
            terms.push((vec![p], ScalarField::real(move |x| -0.5 * x[q]).with_real_gradient(grad(q, -0.5))));
            base = base.add(&DifferentialForm::basis(chart.clone(), &[p, q], 1.0)?)?;
        }
        let alpha = DifferentialForm::from_terms(chart, 1, terms)?;
        Self::new(base, vec![Region::global(alpha)], vec![], vec![], true, "disk standard")
    }

    /// Torus bundle of degree `n`: `w = (n / 2pi) dtheta1 ^ dtheta2`,
    /// `alpha = (c - n theta2 / 2pi) dtheta1`, seam in `theta2` with winding `-n`.
    pub fn torus(n: i64, c: f64) -> Self {
        let t = Chart::torus();
        let nf = n as f64;
        let base = DifferentialForm::basis(t.clone(), &[0, 1], nf / (2.0 * PI)).expect("valid basis");
        let alpha = DifferentialForm::from_terms(
            t,
            1,
            vec![(
                vec![0],
                ScalarField::real(move |x| c - nf * x[1] / (2.0 * PI)).with_real_gradient(move |_| vec![0.0, -nf / (2.0 * PI)]),
            )],
        )
        .expect("valid potential");
        let seams = if n != 0 { vec![Seam { coord: 1, winding: -n, angle: theta_angle(0) }] } else { vec![] };
        Self::new(base, vec![Region::global(alpha)], vec![], seams, true, format!("torus n={n} c={c}"))
            .expect("valid model")
    }

    /// Trivial connection `alpha = 0` over `w = 0`.
    pub fn flat(chart: Arc<Chart>) -> Self {
        let base = DifferentialForm::zero(chart.clone(), 2).expect("2-form on a surface chart");
        let alpha = DifferentialForm::zero(chart, 1).expect("1-form");
        Self::new(base, vec![Region::global(alpha)], vec![], vec![], true, "flat").expect("valid model")
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.base.chart()
    }

    pub fn base(&self) -> &DifferentialForm {
        &self.base
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn seams(&self) -> &[Seam] {
        &self.seams
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn region(&self, name: &str) -> Result<&Region> {
        self.regions.iter().find(|r| r.name == name).ok_or_else(|| BundleError::UnknownRegion(name.to_string()))
    }

    /// First region whose domain contains `x`.
    pub fn region_at(&self, x: &[f64]) -> Option<&Region> {
        self.regions.iter().find(|r| r.contains(x))
    }

    /// `(winding, angle)` with `alpha_to - alpha_from = winding d angle`.
    pub fn transition(&self, from: &str, to: &str) -> Result<(i64, ScalarField)> {
        if from == to {
            return Ok((0, ScalarField::zero()));
        }
        for t in &self.transitions {
            if t.from == from && t.to == to {
                return Ok((t.winding, t.angle.clone()));
            }
            if t.from == to && t.to == from {
                return Ok((-t.winding, t.angle.clone()));
            }
        }
        Err(BundleError::InvalidSchedule(format!("no transition between `{from}` and `{to}`")))
    }

    /// Adds the same 1-form to every region potential. A real `shift` keeps
    /// a hermitian connection hermitian.
    pub fn shift_by(&self, shift: &DifferentialForm) -> Result<Self> {
        let regions = self
            .regions
            .iter()
            .map(|r| Ok(r.with_potential(r.potential.add(shift)?)))
            .collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        out.regions = regions;
        out.hermitian = self.hermitian && shift.reality() == Reality::Real;
        Ok(out)
    }

    pub(crate) fn map_potentials<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&DifferentialForm) -> Result<DifferentialForm>,
    {
        let regions = self.regions.iter().map(|r| Ok(r.with_potential(f(&r.potential)?))).collect::<Result<Vec<_>>>()?;
        let mut out = self.clone();
        out.regions = regions;
        Ok(out)
    }

    /// `d alpha` of one region's potential.
    pub fn curvature(&self, region: &str) -> Result<DifferentialForm> {
        Ok(exterior_derivative(&self.region(region)?.potential, FD_STEP)?)
    }

    /// `sup |d alpha - w|` over samples lying in each region.
    pub fn prequantum_residual(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for r in &self.regions {
            let inside: Vec<Vec<f64>> = samples.iter().filter(|x| r.contains(x)).cloned().collect();
            let d = exterior_derivative(&r.potential, FD_STEP)?;
            worst = worst.max(d.max_difference(&self.base, &inside)?);
        }
        Ok(worst)
    }

    /// `sup |alpha_to - alpha_from - w d chi|` over samples in both regions.
    pub fn overlap_residual(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for t in &self.transitions {
            let (a, b) = (self.region(&t.from)?, self.region(&t.to)?);
            for x in samples.iter().filter(|x| a.contains(x) && b.contains(x)) {
                let (va, vb) = (a.potential.dense(x)?, b.potential.dense(x)?);
                let g = t.angle.gradient(x, FD_STEP)?;
                for i in 0..va.len() {
                    worst = worst.max((vb[i] - va[i] - t.winding as f64 * g[i]).norm());
                }
            }
        }
        Ok(worst)
    }

    /// Total integral of the base form and its distance from `2pi Z`;
    /// `None` on charts that are not closed surfaces.
    pub fn integrality(&self) -> Result<Option<(f64, f64)>> {
        if !self.chart().is_compact_surface() {
            return Ok(None);
        }
        let total = surface_total_integral(&self.base, 32, 256)?.re;
        let defect = (total - 2.0 * PI * (total / (2.0 * PI)).round()).abs();
        Ok(Some((total, defect)))
    }

    /// `int w / 2pi`, rounded; `None` off closed surfaces.
    pub fn degree(&self) -> Result<Option<i64>> {
        Ok(self.integrality()?.map(|(t, _)| (t / (2.0 * PI)).round() as i64))
    }

    /// `m^* conn`: potentials, base form, region domains and transition
    /// angles are all composed with `m`.
    pub fn pullback(&self, m: &SmoothMap) -> Result<Self> {
        m.target().ensure_same(self.chart())?;
        if !self.seams.is_empty() {
            return Err(BundleError::NotReconstructible(format!(
                "`{}` has seams; pullback of seam data is not supported",
                self.label
            )));
        }
        let base = pullback_form(m, &self.base)?;
        let regions = self
            .regions
            .iter()
            .map(|r| {
                let (mm, dom) = (m.clone(), r.domain.clone());
                Ok(Region {
                    name: r.name.clone(),
                    potential: pullback_form(m, &r.potential)?,
                    domain: Arc::new(move |x: &[f64]| mm.apply(x).map(|y| dom(&y)).unwrap_or(false)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let probes = sample_points(m.source(), 64, 0x9b, 0.0);
        if let Some(x) = probes.iter().find(|x| !regions.iter().any(|r| r.contains(x))) {
            return Err(BundleError::NotReconstructible(format!("no region covers the image of {x:?}")));
        }
        let transitions = self
            .transitions
            .iter()
            .map(|t| {
                let (mm, chi) = (m.clone(), t.angle.clone());
                let angle = ScalarField::fallible(move |x| chi.value(&mm.apply(x)?), Reality::Real);
                Transition { from: t.from.clone(), to: t.to.clone(), winding: t.winding, angle }
            })
            .collect();
        Ok(PrequantumConnection {
            base,
            regions,
            transitions,
            seams: vec![],
            hermitian: self.hermitian,
            label: format!("pullback of {}", self.label),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid_sphere() -> Vec<Vec<f64>> {
        sample_points(&Chart::sphere(), 100, 11, 0.01)
    }

    #[test]
    fn monopole_is_prequantum_and_integral() {
        for k in 1..=3 {
            let c = PrequantumConnection::sphere_monopole(k);
            let s = grid_sphere();
            assert!(c.prequantum_residual(&s).unwrap() < 1e-12);
            assert!(c.overlap_residual(&s).unwrap() < 1e-12);
            let (total, defect) = c.integrality().unwrap().unwrap();
            assert!((total - 4.0 * PI * k as f64).abs() < 1e-9 && defect < 1e-6);
            assert_eq!(c.degree().unwrap(), Some(2 * k));
        }
    }

    #[test]
    fn north_curvature_is_area_form() {
        let c = PrequantumConnection::sphere_monopole(1);
        let f = c.curvature("north").unwrap();
        // oracle: d((z - 1) dtheta) = dz ^ dtheta = -dtheta ^ dz
        assert_eq!(f.component(&[0, 1], &[0.5, 0.1]).unwrap(), Complex64::new(-1.0, 0.0));
        assert!(matches!(c.curvature("east"), Err(BundleError::UnknownRegion(_))));
    }

    #[test]
    fn disk_curvature_is_standard() {
        let d = Chart::disk(2, 1.0).unwrap();
        let c = PrequantumConnection::disk_standard(d.clone()).unwrap();
        let f = c.curvature("global").unwrap();
        assert_eq!(f.component(&[0, 1], &[0.2, 0.3]).unwrap(), Complex64::new(1.0, 0.0));
        assert!(c.prequantum_residual(&sample_points(&d, 20, 1, 0.0)).unwrap() < 1e-12);
    }

    #[test]
    fn flat_connection_has_zero_curvature() {
        let c = PrequantumConnection::flat(Chart::sphere());
        let f = c.curvature("global").unwrap();
        assert!(f.sup_norm(&grid_sphere()).unwrap() == 0.0);
    }

    #[test]
    fn torus_is_integral() {
        let c = PrequantumConnection::torus(3, 0.25);
        let (total, defect) = c.integrality().unwrap().unwrap();
        assert!((total - 6.0 * PI).abs() < 1e-9 && defect < 1e-9);
        assert!(c.prequantum_residual(&sample_points(c.chart(), 20, 1, 0.0)).unwrap() < 1e-12);
    }

    #[test]
    fn rotation_pullback_keeps_potential() {
        let c = PrequantumConnection::sphere_monopole(1);
        let rot = SmoothMap::translation(c.chart().clone(), vec![0.7, 0.0]);
        let p = c.pullback(&rot).unwrap();
        let s = grid_sphere();
        let diff = p.region("north").unwrap().potential().max_difference(c.region("north").unwrap().potential(), &s).unwrap();
        assert!(diff < 1e-15);
        assert!(p.overlap_residual(&s).unwrap() < 1e-9);
    }
}
