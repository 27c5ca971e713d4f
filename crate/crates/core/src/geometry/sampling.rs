use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::chart::{Chart, ChartKind, CoordinateBound};

/// Deterministic interior sample points. Interval coordinates keep `margin`
/// away from both the bounds and any exclusion band; disk samples stay
/// `margin` inside the ball.
pub fn sample_points(chart: &Arc<Chart>, n: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranges: Vec<(f64, f64)> = chart
        .bounds()
        .iter()
        .enumerate()
        .map(|(i, b)| match *b {
            CoordinateBound::Periodic { period } => (0.0, period),
            CoordinateBound::Interval { lo, hi } => {
                let d = chart.band(i).unwrap_or(0.0) + margin;
                (lo + d, hi - d)
            }
        })
        .collect();
    let ball = match chart.kind() {
        ChartKind::Disk { radius } => Some((radius - margin).max(0.0)),
        _ => None,
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p: Vec<f64> = ranges.iter().map(|&(a, b)| if b > a { rng.random_range(a..b) } else { a }).collect();
        if let Some(r) = ball {
            if p.iter().map(|x| x * x).sum::<f64>() > r * r {
                continue;
            }
        }
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_reproducible_and_inside() {
        let s = Chart::sphere();
        let a = sample_points(&s, 50, 7, 0.01);
        assert_eq!(a, sample_points(&s, 50, 7, 0.01));
        assert!(a.iter().all(|p| s.contains(p) && p[1].abs() < 1.0 - 0.011));
        let d = Chart::disk(4, 0.5).unwrap();
        assert!(sample_points(&d, 50, 1, 0.05).iter().all(|p| p.iter().map(|x| x * x).sum::<f64>() <= 0.2025));
    }
}
