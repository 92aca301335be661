//! Variable-transformation identity.
//!
//! Mapping 1-D data through a monotone `g : I → ℝ` and score-matching the
//! pushforward is algebraically identical — per sample, up to a θ-free
//! term — to weighted score matching on the raw data with the derived weight
//! `h = (g')⁻²`. With `x` the raw event, `ψ` the model score, and primes
//! denoting x-derivatives:
//!
//! ```text
//! pushforward score    ψ̃(g(x)) = (ψ − g''/g') / g'
//! its y-derivative     ∂_y ψ̃   = [ (ψ' − (g'''g' − g''²)/g'²)/g'
//!                                  − (ψ − g''/g') g''/g'² ] / g'
//! derived weight       h = 1/g'²,   h' = −2 g''/g'³
//! ```
//!
//! The check evaluates both objectives on the same samples over a θ-grid and
//! returns the largest centered discrepancy of their difference; a correct
//! implementation leaves only floating-point noise.

use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::models::ProcessModel;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A strictly increasing map from the observation interval onto the real
/// line, with three derivatives.
pub struct MonotoneMap {
    pub g: Box<ScalarFn>,
    pub dg: Box<ScalarFn>,
    pub d2g: Box<ScalarFn>,
    pub d3g: Box<ScalarFn>,
}

impl MonotoneMap {
    /// The logit map of `(0, t_max)` onto ℝ: `g(x) = ln(u/(1−u))`, `u = x/t_max`.
    pub fn logit(t_max: f64) -> Self {
        let w = move |x: f64| (x / t_max) * (1.0 - x / t_max); // u(1−u)
        MonotoneMap {
            g: Box::new(move |x| {
                let u = x / t_max;
                (u / (1.0 - u)).ln()
            }),
            // d/dx ln(u/(1−u)) = 1/(t_max·u(1−u))
            dg: Box::new(move |x| 1.0 / (t_max * w(x))),
            d2g: Box::new(move |x| {
                let u = x / t_max;
                -(1.0 - 2.0 * u) / (t_max * w(x)).powi(2)
            }),
            d3g: Box::new(move |x| {
                let u = x / t_max;
                let wp = 1.0 - 2.0 * u; // d(u(1−u))/du
                (2.0 * wp * wp / w(x).powi(3) + 2.0 / w(x).powi(2)) / t_max.powi(3)
            }),
        }
    }
}

/// Maximum over `theta_grid` of the centered difference between plain score
/// matching on `g`-transformed data and weighted score matching on the raw
/// data with the derived weight. `model` is the family template whose
/// parameters the grid replaces; it must have 1-D events.
pub fn change_of_variable_check(
    model: &ProcessModel,
    data: &Dataset,
    map: &MonotoneMap,
    theta_grid: &[Vec<f64>],
) -> Result<f64> {
    if model.janossy_dim() != Some(1) {
        return Err(Error::Config(
            "change-of-variable check needs a family with 1-D events".to_string(),
        ));
    }
    if theta_grid.is_empty() {
        return Err(Error::Config("empty θ-grid".to_string()));
    }
    for seq in &data.sequences {
        for &t in &seq.times {
            if !((map.dg)(t) > 0.0) {
                return Err(Error::Config(format!(
                    "map is not strictly increasing at observed time {t}"
                )));
            }
        }
    }
    let m = data.sequences.len().max(1) as f64;
    let mut diffs = Vec::with_capacity(theta_grid.len());
    for theta in theta_grid {
        let model = model.with_params(theta)?;
        let mut total = 0.0;
        for seq in &data.sequences {
            for n in 0..seq.len() {
                let x = seq.times[n];
                let je = model.janossy_eval(&data.domain, seq, n)?;
                let (psi, dpsi) = (je.psi[0], je.div);
                let g1 = (map.dg)(x);
                let g2 = (map.d2g)(x);
                let g3 = (map.d3g)(x);
                // transformed-data score matching term
                let shift = g2 / g1;
                let psi_y = (psi - shift) / g1;
                let dshift = (g3 * g1 - g2 * g2) / (g1 * g1);
                let dpsi_y = ((dpsi - dshift) / g1 - (psi - shift) * g2 / (g1 * g1)) / g1;
                let sm = 0.5 * psi_y * psi_y + dpsi_y;
                // raw-data weighted term with the derived weight
                let h = 1.0 / (g1 * g1);
                let dh = -2.0 * g2 / (g1 * g1 * g1);
                let wsm = (0.5 * psi * psi + dpsi) * h + psi * dh;
                total += sm - wsm;
            }
        }
        diffs.push(total / m);
    }
    let center = diffs.iter().sum::<f64>() / diffs.len() as f64;
    Ok(diffs.iter().fold(0.0_f64, |acc, d| acc.max((d - center).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ObservationDomain;
    use crate::models::PoissonWeibull1d;
    use crate::sequence::PointSequence;
    use crate::simulate::{simulate_dataset, SimConfig};
    use approx::assert_relative_eq;

    fn weibull(shape: f64) -> ProcessModel {
        ProcessModel::PoissonWeibull1d(PoissonWeibull1d::new(shape).unwrap())
    }

    #[test]
    fn logit_map_derivatives_are_consistent() {
        for t_max in [1.0, 3.7] {
            let map = MonotoneMap::logit(t_max);
            for frac in [0.12, 0.4, 0.63, 0.9] {
                let x = frac * t_max;
                let h = 1e-5 * t_max;
                let fd1 = ((map.g)(x + h) - (map.g)(x - h)) / (2.0 * h);
                assert_relative_eq!((map.dg)(x), fd1, max_relative = 1e-8);
                let fd2 = ((map.dg)(x + h) - (map.dg)(x - h)) / (2.0 * h);
                assert_relative_eq!((map.d2g)(x), fd2, max_relative = 1e-6);
                let fd3 = ((map.d2g)(x + h) - (map.d2g)(x - h)) / (2.0 * h);
                assert_relative_eq!((map.d3g)(x), fd3, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn per_sample_difference_is_the_known_theta_free_form() {
        // Weibull score + unit-interval logit: the per-event difference
        // between the two objectives is ½(1−2x)² − 2x(1−x), independent of θ
        let map = MonotoneMap::logit(1.0);
        let domain = ObservationDomain::temporal(1.0).unwrap();
        let x = 0.37;
        let data = Dataset::new(
            domain,
            "poisson_weibull_1d",
            0,
            vec![PointSequence::new(vec![x])],
        )
        .unwrap();
        let expect = 0.5 * (1.0 - 2.0 * x).powi(2) - 2.0 * x * (1.0 - x);
        for theta in [0.8, 1.7, 2.9] {
            let model = weibull(theta);
            let je = model.janossy_eval(&data.domain, &data.sequences[0], 0).unwrap();
            let (g1, g2, g3) = ((map.dg)(x), (map.d2g)(x), (map.d3g)(x));
            let shift = g2 / g1;
            let psi_y = (je.psi[0] - shift) / g1;
            let dshift = (g3 * g1 - g2 * g2) / (g1 * g1);
            let dpsi_y = ((je.div - dshift) / g1 - (je.psi[0] - shift) * g2 / (g1 * g1)) / g1;
            let sm = 0.5 * psi_y * psi_y + dpsi_y;
            let h = 1.0 / (g1 * g1);
            let dh = -2.0 * g2 / (g1 * g1 * g1);
            let wsm = (0.5 * je.psi[0] * je.psi[0] + je.div) * h + je.psi[0] * dh;
            assert_relative_eq!(sm - wsm, expect, max_relative = 1e-10);
        }
        // consequently the centered discrepancy across any θ-grid vanishes
        let grid = vec![vec![0.8], vec![2.0], vec![2.9]];
        let disc = change_of_variable_check(&weibull(1.0), &data, &map, &grid).unwrap();
        assert!(disc < 1e-12, "discrepancy {disc}");
    }

    #[test]
    fn identity_holds_on_simulated_data_across_grid() {
        let domain = ObservationDomain::temporal(1.0).unwrap();
        let data = simulate_dataset(&weibull(2.0), &domain, &SimConfig::new(200, 44)).unwrap();
        let map = MonotoneMap::logit(1.0);
        let grid: Vec<Vec<f64>> =
            [0.6, 1.1, 2.0, 2.7, 3.5].iter().map(|&t| vec![t]).collect();
        let disc = change_of_variable_check(&weibull(1.0), &data, &map, &grid).unwrap();
        assert!(disc < 1e-10, "max centered discrepancy {disc}");
    }

    #[test]
    fn one_point_grid_is_exactly_centered() {
        let domain = ObservationDomain::temporal(1.0).unwrap();
        let data = simulate_dataset(&weibull(2.0), &domain, &SimConfig::new(5, 3)).unwrap();
        let map = MonotoneMap::logit(1.0);
        let disc =
            change_of_variable_check(&weibull(1.0), &data, &map, &[vec![1.9]]).unwrap();
        assert_eq!(disc, 0.0);
    }

    #[test]
    fn decreasing_map_is_rejected() {
        let domain = ObservationDomain::temporal(1.0).unwrap();
        let data = simulate_dataset(&weibull(2.0), &domain, &SimConfig::new(3, 9)).unwrap();
        let map = MonotoneMap {
            g: Box::new(|x| -x),
            dg: Box::new(|_| -1.0),
            d2g: Box::new(|_| 0.0),
            d3g: Box::new(|_| 0.0),
        };
        assert!(matches!(
            change_of_variable_check(&weibull(1.0), &data, &map, &[vec![2.0]]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn derived_weight_vanishes_at_both_endpoints() {
        let map = MonotoneMap::logit(1.0);
        for x in [1e-6, 1.0 - 1e-6] {
            let h = 1.0 / (map.dg)(x).powi(2);
            assert!(h < 1e-11, "h({x}) = {h}");
        }
    }
}
