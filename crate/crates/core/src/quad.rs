//! Gauss–Legendre quadrature.
//!
//! Nodes and weights are obtained by Newton iteration on the Legendre
//! polynomial recurrence; rules are cached per node count since objective
//! evaluations reuse the same rule across many intervals.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// A Gauss–Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Build an `n`-point rule (exact for polynomials of degree ≤ 2n−1).
    ///
    /// Panics if `n == 0`.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // Nodes come in ± pairs; solve for the non-negative half.
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi's initial guess for the i-th root (descending order).
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() <= 1e-15 * x.abs().max(1.0) {
                    let (_, d2) = legendre_and_derivative(n, x);
                    dp = d2;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule with `n` nodes, built once per process.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn scaled(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// ∫ₐᵇ f(x) dx by this rule.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.scaled(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// (P_n(x), P'_n(x)) by the three-term recurrence.
fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0; // P_0
    let mut p = x; // P_1
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x² - 1)
    let d = (n as f64) * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn two_point_rule_integrates_quadratics_exactly() {
        let gl = GaussLegendre::new(2);
        // Oracle: ∫₀¹ x² dx = 1/3.
        assert_relative_eq!(gl.integrate(0.0, 1.0, |x| x * x), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn exponential_integral_converges_spectrally() {
        let gl = GaussLegendre::new(20);
        let exact = std::f64::consts::E - 1.0;
        assert_relative_eq!(gl.integrate(0.0, 1.0, f64::exp), exact, epsilon = 1e-14);
    }

    #[test]
    fn hundred_node_rule_matches_closed_form_on_decay_kernel() {
        // Oracle: ∫₀³ e^{-2t} dt = (1 - e^{-6}) / 2.
        let gl = GaussLegendre::new(100);
        let exact = (1.0 - (-6.0f64).exp()) / 2.0;
        assert_relative_eq!(gl.integrate(0.0, 3.0, |t| (-2.0 * t).exp()), exact, epsilon = 1e-14);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [1, 2, 3, 7, 50, 100] {
            let gl = GaussLegendre::new(n);
            let total: f64 = gl.scaled(-1.0, 1.0).map(|(_, w)| w).sum();
            assert_relative_eq!(total, 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn cached_rule_is_shared() {
        let a = GaussLegendre::cached(64);
        let b = GaussLegendre::cached(64);
        assert!(Arc::ptr_eq(&a, &b));
    }

    proptest! {
        // An n-point rule is exact for monomials up to degree 2n−1.
        #[test]
        fn exact_on_polynomials(n in 1usize..12, deg_off in 0usize..4) {
            let deg = (2 * n - 1).saturating_sub(deg_off);
            let gl = GaussLegendre::new(n);
            let got = gl.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            let exact = 1.0 / (deg as f64 + 1.0);
            prop_assert!((got - exact).abs() < 1e-12, "n={n} deg={deg} got={got} exact={exact}");
        }
    }
}
