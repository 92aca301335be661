//! Self-correcting logistic hazard, and a tilted constant hazard whose time
//! score is blind to the tilt.
//!
//! `LogisticIntensity` has hazard `c` on the first interval and
//!
//! ```text
//! λ(t | H) = c / (1 + β e^{c (t − t_{n−1})}),   n ≥ 1
//! ```
//!
//! afterwards. Its time score is identically `ψ_T = −c` on every interval:
//! the score carries no information about `β`, which is exactly what makes
//! this family a stress test for score-based estimation without a survival
//! correction. All expressions here use the overflow-safe form
//! `λ = c E / (β + E)` with `E = e^{−cΔ}`, since `cΔ` can reach several
//! hundred on long intervals.
//!
//! `TiltedConstant` has hazard `λ̃(t) = r E / (E − α)` (equivalently
//! `r / (1 − α e^{rΔ})`), a tilt of the constant hazard `r` by the factor
//! `α`. Its time score is identically `−r` for every tilt, so all tilts are
//! indistinguishable to score matching; with `α = 0` it is the homogeneous
//! Poisson process. For `α ∈ (0, 1)` the hazard blows up at
//! `Δ* = log(1/α)/r`; expressions are valid on `Δ < Δ*`, and the compensator
//! reports a numeric error beyond it. For `α > 1` the "hazard" is negative —
//! not a process that can be simulated, but its density parts stay
//! well-defined, which is what the survival-correction identity checks
//! exploit.

use crate::error::{Error, Result};
use crate::models::TemporalEval;
use crate::sequence::PointSequence;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticIntensity {
    pub c: f64,
    pub beta: f64,
}

impl LogisticIntensity {
    pub fn new(c: f64, beta: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Config(format!("c must be positive, got {c}")));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::Config(format!("beta must be nonnegative, got {beta}")));
        }
        Ok(LogisticIntensity { c, beta })
    }

    pub fn params(&self) -> Vec<f64> {
        vec![self.c, self.beta]
    }

    pub fn with_params(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != 2 {
            return Err(Error::Config(format!(
                "logistic_intensity expects 2 parameters, got {}",
                theta.len()
            )));
        }
        LogisticIntensity::new(theta[0], theta[1])
    }

    /// Hazard and ∂θ = (∂c, ∂β) at elapsed time Δ since the last event.
    fn hazard(&self, n: usize, delta: f64) -> (f64, f64, f64) {
        let (c, b) = (self.c, self.beta);
        if n == 0 {
            return (c, 1.0, 0.0);
        }
        let e = (-c * delta).exp();
        let d = b + e;
        let lam = c * e / d;
        let d_c = e / d - c * delta * b * e / (d * d);
        let d_b = -c * e / (d * d);
        (lam, d_c, d_b)
    }

    /// The time score of this family is identically `−c` with zero time
    /// slope, on every interval — a closed-form consequence of
    /// `∂_t log λ = −cβe^{cΔ}/(1+βe^{cΔ}) = λ − c`.
    pub fn temporal_eval(&self, seq: &PointSequence, n: usize, t: f64) -> Result<TemporalEval> {
        let (lam, d_c, d_b) = self.hazard(n, t - seq.t_prev(n));
        Ok(TemporalEval {
            lambda: lam,
            psi: -self.c,
            dpsi_dt: 0.0,
            d_lambda: vec![d_c, d_b],
            d_psi: vec![-1.0, 0.0],
            d_dpsi_dt: vec![0.0, 0.0],
        })
    }

    /// Closed-form compensator: `Λ(Δ) = log((1 + β)/(β + e^{−cΔ}))` for
    /// `n ≥ 1`, `cΔ` on the first interval.
    pub fn cum_intensity(&self, seq: &PointSequence, n: usize, t: f64) -> (f64, Vec<f64>) {
        let (c, b) = (self.c, self.beta);
        let delta = t - seq.t_prev(n);
        if n == 0 {
            return (c * delta, vec![delta, 0.0]);
        }
        let e = (-c * delta).exp();
        let val = (1.0 + b).ln() - (b + e).ln();
        let d_c = delta * e / (b + e);
        let d_b = 1.0 / (1.0 + b) - 1.0 / (b + e);
        (val, vec![d_c, d_b])
    }

    pub fn event_intensity(&self, seq: &PointSequence, n: usize) -> (f64, Vec<f64>) {
        let (lam, d_c, d_b) = self.hazard(n, seq.times[n] - seq.t_prev(n));
        (lam, vec![d_c, d_b])
    }
}

/// Constant hazard `r` tilted by `α`; the tilt is structural, not fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedConstant {
    pub rate: f64,
    pub tilt: f64,
}

impl TiltedConstant {
    pub fn new(rate: f64, tilt: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Config(format!("rate must be positive, got {rate}")));
        }
        if !tilt.is_finite() || tilt == 1.0 {
            return Err(Error::Config(format!("tilt must be finite and ≠ 1, got {tilt}")));
        }
        Ok(TiltedConstant { rate, tilt })
    }

    pub fn params(&self) -> Vec<f64> {
        vec![self.rate]
    }

    pub fn with_params(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != 1 {
            return Err(Error::Config(format!(
                "tilted_constant expects 1 parameter, got {}",
                theta.len()
            )));
        }
        TiltedConstant::new(theta[0], self.tilt)
    }

    fn hazard(&self, delta: f64) -> (f64, f64) {
        let (r, a) = (self.rate, self.tilt);
        let e = (-r * delta).exp();
        let d = e - a;
        let lam = r * e / d;
        let d_r = e / d + r * a * delta * e / (d * d);
        (lam, d_r)
    }

    /// ψ ≡ −rate for every tilt: `∂_t log λ̃ = rα/(e^{−rΔ} − α) = λ̃ − r`.
    pub fn temporal_eval(&self, seq: &PointSequence, n: usize, t: f64) -> Result<TemporalEval> {
        let (lam, d_r) = self.hazard(t - seq.t_prev(n));
        Ok(TemporalEval {
            lambda: lam,
            psi: -self.rate,
            dpsi_dt: 0.0,
            d_lambda: vec![d_r],
            d_psi: vec![-1.0],
            d_dpsi_dt: vec![0.0],
        })
    }

    /// `Λ̃(Δ) = log|1 − α| − log|e^{−rΔ} − α|`, valid while the interval does
    /// not cross the hazard's singularity.
    pub fn cum_intensity(&self, seq: &PointSequence, n: usize, t: f64) -> Result<(f64, Vec<f64>)> {
        let (r, a) = (self.rate, self.tilt);
        let delta = t - seq.t_prev(n);
        let e = (-r * delta).exp();
        if (1.0 - a) * (e - a) <= 0.0 {
            return Err(Error::NonFinite {
                context: format!(
                    "tilted hazard (tilt {a}) crosses its singularity on an interval of length {delta}"
                ),
            });
        }
        let val = (1.0 - a).abs().ln() - (e - a).abs().ln();
        let d_r = delta * e / (e - a);
        Ok((val, vec![d_r]))
    }

    pub fn event_intensity(&self, seq: &PointSequence, n: usize) -> (f64, Vec<f64>) {
        let (lam, d_r) = self.hazard(seq.times[n] - seq.t_prev(n));
        (lam, vec![d_r])
    }

    /// log Janossy density via the renewal decomposition
    /// `Σ_n [log λ̃(t_n) − Λ̃_n] − Λ̃_{N+1}(T)`. With tilt 0 this is the
    /// homogeneous Poisson density `N log r − r T`.
    pub fn log_janossy_density(
        &self,
        domain: &crate::domain::ObservationDomain,
        seq: &PointSequence,
    ) -> Result<f64> {
        let mut ll = 0.0;
        for n in 0..seq.len() {
            let (lam, _) = self.hazard(seq.times[n] - seq.t_prev(n));
            if !(lam > 0.0) {
                return Err(Error::NonFinite {
                    context: format!("tilted hazard nonpositive at event {n}"),
                });
            }
            ll += lam.ln() - self.cum_intensity(seq, n, seq.times[n])?.0;
        }
        ll -= self.cum_intensity(seq, seq.len(), domain.t_max)?.0;
        Ok(ll)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ObservationDomain;
    use crate::models::testutil::{check_cum_intensity, check_temporal_gradients};
    use crate::models::ProcessModel;
    use crate::quad::GaussLegendre;
    use approx::assert_relative_eq;

    #[test]
    fn logistic_score_matches_hand_derivative() {
        // ψ = −cβe^{cΔ}/(1+βe^{cΔ}) − λ computed the literal way at moderate
        // Δ, against the simplified constant −c.
        let (c, b, delta) = (2.0_f64, 0.02_f64, 0.3_f64);
        let m = LogisticIntensity::new(c, b).unwrap();
        let seq = PointSequence::new(vec![1.0]);
        let eval = m.temporal_eval(&seq, 1, 1.0 + delta).unwrap();
        let literal = -c * b * (c * delta).exp() / (1.0 + b * (c * delta).exp())
            - c / (1.0 + b * (c * delta).exp());
        assert_relative_eq!(eval.psi, literal, max_relative = 1e-12);
        assert_relative_eq!(eval.psi, -c, max_relative = 1e-15);
    }

    #[test]
    fn logistic_hazard_survives_long_intervals() {
        // cΔ = 400 overflows e^{cΔ}; the safe form must stay finite.
        let m = LogisticIntensity::new(2.0, 0.02).unwrap();
        let seq = PointSequence::new(vec![0.0001]);
        let eval = m.temporal_eval(&seq, 1, 200.0).unwrap();
        assert!(eval.lambda >= 0.0 && eval.lambda.is_finite());
        assert_relative_eq!(eval.psi, -2.0);
        let (lam, _) = m.cum_intensity(&seq, 1, 200.0);
        assert!(lam.is_finite());
        // Λ(∞) = log((1+β)/β)
        assert_relative_eq!(lam, (1.02_f64 / 0.02).ln(), max_relative = 1e-9);
    }

    #[test]
    fn logistic_gradients_fd() {
        let model = ProcessModel::LogisticIntensity(LogisticIntensity::new(2.0, 0.5).unwrap());
        let domain = ObservationDomain::temporal(50.0).unwrap();
        let seq = PointSequence::new(vec![3.0]);
        check_temporal_gradients(&model, &domain, &seq, 0, 1.2, 1e-5);
        check_temporal_gradients(&model, &domain, &seq, 1, 4.1, 1e-5);
        let gl = GaussLegendre::cached(16);
        check_cum_intensity(&model, &domain, &seq, 0, 2.0, &gl, 1e-5);
        check_cum_intensity(&model, &domain, &seq, 1, 5.5, &gl, 1e-5);
    }

    #[test]
    fn logistic_compensator_matches_quadrature() {
        let m = LogisticIntensity::new(2.0, 0.4).unwrap();
        let seq = PointSequence::new(vec![1.0]);
        let gl = GaussLegendre::new(80);
        let quad = gl.integrate(1.0, 3.5, |t| m.temporal_eval(&seq, 1, t).unwrap().lambda);
        let (closed, _) = m.cum_intensity(&seq, 1, 3.5);
        assert_relative_eq!(closed, quad, max_relative = 1e-12);
    }

    #[test]
    fn tilted_score_is_tilt_free() {
        let seq = PointSequence::new(vec![1.0]);
        for tilt in [-0.5, 0.0, 0.5, 2.0] {
            let m = TiltedConstant::new(1.5, tilt).unwrap();
            let eval = m.temporal_eval(&seq, 1, 1.2).unwrap();
            assert_relative_eq!(eval.psi, -1.5, max_relative = 1e-15);
            assert_eq!(eval.dpsi_dt, 0.0);
        }
    }

    #[test]
    fn tilted_zero_is_homogeneous_poisson() {
        let m = TiltedConstant::new(1.5, 0.0).unwrap();
        let domain = ObservationDomain::temporal(4.0).unwrap();
        let seq = PointSequence::new(vec![0.5, 2.2, 3.0]);
        let ll = m.log_janossy_density(&domain, &seq).unwrap();
        assert_relative_eq!(ll, 3.0 * 1.5_f64.ln() - 1.5 * 4.0, max_relative = 1e-12);
        let eval = m.temporal_eval(&seq, 2, 2.7).unwrap();
        assert_relative_eq!(eval.lambda, 1.5, max_relative = 1e-15);
    }

    #[test]
    fn tilted_gradients_fd() {
        let domain = ObservationDomain::temporal(4.0).unwrap();
        let seq = PointSequence::new(vec![0.5]);
        for tilt in [-0.5, 0.5] {
            let model = ProcessModel::TiltedConstant(TiltedConstant::new(1.5, tilt).unwrap());
            check_temporal_gradients(&model, &domain, &seq, 1, 0.7, 1e-5);
            let gl = GaussLegendre::cached(16);
            check_cum_intensity(&model, &domain, &seq, 1, 0.8, &gl, 1e-5);
        }
    }

    #[test]
    fn tilted_compensator_rejects_singular_interval() {
        // tilt 0.5, rate 1.5: singularity at Δ* = ln 2 / 1.5 ≈ 0.462
        let m = TiltedConstant::new(1.5, 0.5).unwrap();
        let seq = PointSequence::new(vec![1.0]);
        assert!(m.cum_intensity(&seq, 1, 1.3).is_ok());
        let err = m.cum_intensity(&seq, 1, 1.6).unwrap_err();
        assert!(err.is_numeric(), "expected numeric error, got {err}");
    }

    #[test]
    fn tilted_negative_hazard_for_large_tilt() {
        let m = TiltedConstant::new(1.5, 2.0).unwrap();
        let seq = PointSequence::new(vec![]);
        let eval = m.temporal_eval(&seq, 0, 0.5).unwrap();
        assert!(eval.lambda < 0.0);
        // survival factor still positive: Λ̃ finite, G̃ = e^{−Λ̃} ∈ (0, ∞)
        let (cum, _) = m.cum_intensity(&seq, 0, 0.5).unwrap();
        assert!(cum.is_finite());
    }

    #[test]
    fn tilt_one_rejected() {
        assert!(TiltedConstant::new(1.0, 1.0).is_err());
    }
}
