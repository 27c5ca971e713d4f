use num_complex::Complex64;

use super::connection::PrequantumConnection;
use super::{BundleError, Result};
use crate::geometry::{integrate_along_path, integrate_along_segment, PathInChart};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Holonomy with the default quadrature (Gauss–Legendre 32, trapezoid 256).
pub fn holonomy(conn: &PrequantumConnection, path: &PathInChart) -> Result<Complex64> {
    holonomy_with(conn, path, 32, 256)
}

/// `exp(i oint alpha)` along a closed path, including transition phases at
/// region switches and seam phases when the loop ends on another sheet.
pub fn holonomy_with(conn: &PrequantumConnection, path: &PathInChart, gl_order: usize, trapezoid_nodes: usize) -> Result<Complex64> {
    path.chart().ensure_same(conn.chart())?;
    if !path.is_closed() {
        return Err(BundleError::OpenPath(path.label().to_string()));
    }
    path.validate_closed().map_err(|_| BundleError::OpenPath(path.label().to_string()))?;
    let mut factor = Complex64::new(1.0, 0.0);
    let phase = if path.schedule().is_empty() {
        let pts = path.sample(64);
        let region = conn
            .regions()
            .iter()
            .find(|r| pts.iter().all(|p| r.contains(p)))
            .ok_or_else(|| BundleError::NoCoveringRegion(path.label().to_string()))?;
        integrate_along_path(region.potential(), path, gl_order, trapezoid_nodes)?
    } else {
        let pieces = path.pieces();
        if pieces.iter().any(|p| p.2.is_none()) {
            return Err(BundleError::InvalidSchedule(format!("schedule of `{}` does not cover [0, 1]", path.label())));
        }
        let mut phase = Complex64::new(0.0, 0.0);
        let mut prev: Option<&str> = None;
        for (a, b, region) in &pieces {
            let name = region.as_deref().expect("checked above");
            let r = conn.region(name)?;
            let (pa, pb) = (path.point(*a), path.point(*b));
            if !r.contains(&pa) || !r.contains(&pb) {
                return Err(BundleError::InvalidSchedule(format!(
                    "region `{name}` does not contain the path on [{a}, {b}]"
                )));
            }
            if let Some(p) = prev {
                if p != name {
                    let (w, chi) = conn.transition(p, name)?;
                    factor *= (I * w as f64 * chi.value(&pa)?).exp();
                }
            }
            phase += integrate_along_segment(r.potential(), path, *a, *b, gl_order)?;
            prev = Some(name);
        }
        let first = pieces[0].2.as_deref().expect("checked above");
        let last = prev.expect("at least one piece");
        if first != last {
            let (w, chi) = conn.transition(last, first)?;
            factor *= (I * w as f64 * chi.value(&path.point(1.0))?).exp();
        }
        phase
    };
    let (start, end) = (path.point(0.0), path.point(1.0));
    for seam in conn.seams() {
        let period = conn
            .chart()
            .period(seam.coord)
            .ok_or_else(|| BundleError::Unsupported(format!("seam on non-periodic coordinate {}", seam.coord)))?;
        let sheets = (end[seam.coord] / period).floor() - (start[seam.coord] / period).floor();
        if sheets != 0.0 {
            factor *= (-I * sheets * seam.winding as f64 * seam.angle.value(&end)?).exp();
        }
    }
    Ok((I * phase).exp() * factor)
}
