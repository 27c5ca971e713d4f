//! One-dimensional quadrature rules. Gauss–Legendre nodes come from the
//! `gauss-quad` crate and are cached per order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;

type Rule = Arc<Vec<(f64, f64)>>;

fn reference_rule(order: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| {
            let n = NonZeroUsize::new(order.max(1)).expect("order >= 1");
            let gl = GaussLegendre::new(n);
            Arc::new(gl.as_node_weight_pairs().to_vec())
        })
        .clone()
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    reference_rule(order).iter().map(|&(x, w)| (m + h * x, h * w)).collect()
}

/// Equal-weight trapezoid nodes on one period `[a, a + period)`.
pub fn trapezoid_periodic(nodes: usize, a: f64, period: f64) -> Vec<(f64, f64)> {
    let w = period / nodes as f64;
    (0..nodes).map(|j| (a + w * j as f64, w)).collect()
}

/// Trapezoid nodes on a full circle `[0, 2pi)`.
pub fn circle_nodes(nodes: usize) -> Vec<(f64, f64)> {
    trapezoid_periodic(nodes, 0.0, 2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        // order n integrates degree 2n-1 exactly
        let s: f64 = gauss_legendre(4, 0.0, 2.0).iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((s - 32.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_is_spectral_on_trig() {
        let s: f64 = circle_nodes(16).iter().map(|(t, w)| w * (3.0 * t).cos().powi(2)).sum();
        assert!((s - PI).abs() < 1e-13);
    }
}
