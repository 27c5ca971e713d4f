use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::fibration::{leaf_holonomy, LagrangianFibration};
use super::{QuantizationError, Result};
use crate::bundle::PrequantumConnection;

/// Largest `|hol - 1|` accepted at a regular level.
pub const LEVEL_HOLONOMY_TOL: f64 = 1e-6;
const DEDUP_TOL: f64 = 1e-8;
/// Phase distance (in turns) below which a grid point counts as a level.
const ENDPOINT_TOL: f64 = 1e-12;

/// Bohr-Sommerfeld levels of one connection on one fibration.
#[derive(Debug, Clone, PartialEq)]
pub struct BSSpectrum {
    /// Ascending, deduplicated within 1e-8.
    pub regular_levels: Vec<f64>,
    pub holonomies: Vec<Complex64>,
    /// `|hol - 1|` at each regular level.
    pub residuals: Vec<f64>,
    pub singular_levels: Vec<f64>,
    /// Every scanned leaf is integral; `regular_levels` is then empty.
    pub continuum: bool,
    pub connection: String,
    /// `(b, unwrapped phase)` at the scan grid.
    pub phase_profile: Vec<(f64, f64)>,
}

impl BSSpectrum {
    /// Level-wise deviation from `other`, `None` when the spectra have a
    /// different shape (count or continuum flag).
    pub fn deviation(&self, other: &BSSpectrum) -> Option<f64> {
        if self.continuum != other.continuum || self.regular_levels.len() != other.regular_levels.len() {
            return None;
        }
        Some(self.regular_levels.iter().zip(&other.regular_levels).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn equals_within(&self, other: &BSSpectrum, tol: f64) -> bool {
        self.deviation(other).is_some_and(|d| d <= tol)
    }

    /// Regular plus singular level count.
    pub fn total_count(&self) -> usize {
        self.regular_levels.len() + self.singular_levels.len()
    }
}

fn wrap_turns(z: Complex64) -> f64 {
    z.arg() / (2.0 * PI)
}

/// Scans the unwrapped holonomy phase (in turns) over the base grid and
/// bisects every integer crossing to `root_tol`.
pub fn bs_spectrum(conn: &PrequantumConnection, fib: &LagrangianFibration, grid_step: f64, root_tol: f64) -> Result<BSSpectrum> {
    if !(grid_step > 0.0 && root_tol > 0.0) {
        return Err(QuantizationError::InvalidParameter(format!("grid_step {grid_step}, root_tol {root_tol}")));
    }
    let (lo, hi) = fib.regular_range();
    let cells = ((hi - lo) / grid_step).ceil().max(1.0) as usize;
    let h = (hi - lo) / cells as f64;
    let grid: Vec<f64> = (0..=cells).map(|j| if j == cells { hi } else { lo + j as f64 * h }).collect();
    let mids: Vec<f64> = grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let eval = |bs: &[f64]| -> Result<Vec<Complex64>> { bs.par_iter().map(|&b| leaf_holonomy(conn, fib, b)).collect() };
    let hol = eval(&grid)?;
    let mid_hol = eval(&mids)?;

    let mut turns = vec![wrap_turns(hol[0])];
    for j in 1..grid.len() {
        let prev = turns[j - 1];
        let via_mid = prev + wrap_turns(mid_hol[j - 1] / hol[j - 1]) + wrap_turns(hol[j] / mid_hol[j - 1]);
        let direct = prev + wrap_turns(hol[j] / hol[j - 1]);
        if (via_mid - direct).abs() > 0.25 {
            return Err(QuantizationError::Refinement { lo: grid[j - 1], hi: grid[j] });
        }
        turns.push(via_mid);
    }
    let phase_profile: Vec<(f64, f64)> = grid.iter().zip(&turns).map(|(&b, &t)| (b, 2.0 * PI * t)).collect();
    let singular_levels = fib.singular_levels().to_vec();

    if hol.iter().all(|z| (z - 1.0).norm() <= LEVEL_HOLONOMY_TOL) {
        return Ok(BSSpectrum {
            regular_levels: vec![],
            holonomies: vec![],
            residuals: vec![],
            singular_levels,
            continuum: true,
            connection: conn.label().to_string(),
            phase_profile,
        });
    }

    // grid points that are levels up to roundoff, then strict crossings
    // on a periodic base the last grid point repeats the first
    let distinct = if fib.is_periodic() { grid.len() - 1 } else { grid.len() };
    let mut roots: Vec<f64> = grid[..distinct]
        .iter()
        .zip(&turns)
        .filter(|(_, t)| (*t - t.round()).abs() <= ENDPOINT_TOL)
        .map(|(b, _)| *b)
        .collect();
    for j in 1..grid.len() {
        let (u, v) = (turns[j - 1], turns[j]);
        if (v - u).abs() >= 1.0 {
            return Err(QuantizationError::Refinement { lo: grid[j - 1], hi: grid[j] });
        }
        let (lo_t, hi_t) = (u.min(v) + ENDPOINT_TOL, u.max(v) - ENDPOINT_TOL);
        let mut m = lo_t.ceil();
        while m <= hi_t {
            let (h0, t0) = (hol[j - 1], u);
            let f = |b: f64| -> Result<f64> { Ok(t0 + wrap_turns(leaf_holonomy(conn, fib, b)? / h0) - m) };
            let (mut a, mut c) = (grid[j - 1], grid[j]);
            let fa_sign = (u - m).signum();
            while c - a > root_tol {
                let mid = 0.5 * (a + c);
                if f(mid)?.signum() == fa_sign {
                    a = mid;
                } else {
                    c = mid;
                }
            }
            roots.push(0.5 * (a + c));
            m += 1.0;
        }
    }

    let period = fib.is_periodic().then(|| fib.base().1 - fib.base().0);
    // periodic base: levels live in [-DEDUP_TOL, p - DEDUP_TOL) so a root at
    // the seam has one representative
    let mut levels: Vec<f64> = roots
        .into_iter()
        .map(|b| period.map_or(b, |p| (b + DEDUP_TOL).rem_euclid(p) - DEDUP_TOL))
        .collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_TOL);

    let holonomies: Vec<Complex64> = levels.par_iter().map(|&b| leaf_holonomy(conn, fib, b)).collect::<Result<_>>()?;
    let residuals: Vec<f64> = holonomies.iter().map(|z| (z - 1.0).norm()).collect();
    if let Some((&level, &residual)) = levels.iter().zip(&residuals).find(|(_, r)| **r > LEVEL_HOLONOMY_TOL) {
        return Err(QuantizationError::Residual { level, residual });
    }
    Ok(BSSpectrum {
        regular_levels: levels,
        holonomies,
        residuals,
        singular_levels,
        continuum: false,
        connection: conn.label().to_string(),
        phase_profile,
    })
}
