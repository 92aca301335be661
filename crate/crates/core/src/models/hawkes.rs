//! Mutually exciting multivariate Hawkes process with exponential kernels.
//!
//! Type-k intensity given the history `H_t = {(t_i, k_i) : t_i < t}`:
//!
//! ```text
//! λ_k(t | H) = μ_k + Σ_i α_{k_i, k} exp(−β (t − t_i))
//! ```
//!
//! `α_{jk}` is the jump a parent of type `j` adds to the type-`k` intensity;
//! all pairs share one decay rate `β`. The ground hazard is the sum over
//! types, and the conditional type mass at an event is `λ_k / Σ_k λ_k`.
//!
//! `β` is structural by default (the parameter vector is `μ` then row-major
//! `α`); setting `fit_beta` appends it as a free parameter.

use crate::domain::ObservationDomain;
use crate::error::{Error, Result};
use crate::models::{hazard_parts, TemporalEval};
use crate::sequence::PointSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateExpHawkes {
    /// Baseline rates, one per type.
    pub mu: Vec<f64>,
    /// Excitation jumps, row-major: `alpha[j * K + k] = α_{j+1, k+1}`.
    pub alpha: Vec<f64>,
    /// Common exponential decay rate.
    pub beta: f64,
    /// Whether `β` is part of the free parameter vector.
    pub fit_beta: bool,
}

impl MultivariateExpHawkes {
    pub fn new(mu: Vec<f64>, alpha: Vec<f64>, beta: f64) -> Result<Self> {
        let k = mu.len();
        if k == 0 {
            return Err(Error::Config("at least one event type required".into()));
        }
        if alpha.len() != k * k {
            return Err(Error::Config(format!(
                "alpha must have {} entries for {k} types, got {}",
                k * k,
                alpha.len()
            )));
        }
        if mu.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
            return Err(Error::Config(format!("baselines must be positive, got {mu:?}")));
        }
        if alpha.iter().any(|&a| !(a.is_finite() && a >= 0.0)) {
            return Err(Error::Config(format!("excitations must be nonnegative, got {alpha:?}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Config(format!("decay must be positive, got {beta}")));
        }
        Ok(MultivariateExpHawkes { mu, alpha, beta, fit_beta: false })
    }

    pub fn with_fit_beta(mut self, fit: bool) -> Self {
        self.fit_beta = fit;
        self
    }

    pub fn n_types(&self) -> usize {
        self.mu.len()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.mu.clone();
        p.extend_from_slice(&self.alpha);
        if self.fit_beta {
            p.push(self.beta);
        }
        p
    }

    pub fn param_names(&self) -> Vec<String> {
        let k = self.n_types();
        let mut names: Vec<String> = (1..=k).map(|i| format!("mu_{i}")).collect();
        for j in 1..=k {
            for l in 1..=k {
                names.push(format!("alpha_{j}{l}"));
            }
        }
        if self.fit_beta {
            names.push("beta".into());
        }
        names
    }

    pub fn with_params(&self, theta: &[f64]) -> Result<Self> {
        let k = self.n_types();
        let expect = k + k * k + usize::from(self.fit_beta);
        if theta.len() != expect {
            return Err(Error::Config(format!(
                "multivariate_exp_hawkes expects {expect} parameters, got {}",
                theta.len()
            )));
        }
        let beta = if self.fit_beta { theta[k + k * k] } else { self.beta };
        let m = MultivariateExpHawkes::new(
            theta[..k].to_vec(),
            theta[k..k + k * k].to_vec(),
            beta,
        )?;
        Ok(m.with_fit_beta(self.fit_beta))
    }

    fn n_params(&self) -> usize {
        let k = self.n_types();
        k + k * k + usize::from(self.fit_beta)
    }

    /// Per-parent-type decayed sums over events `i < n`:
    /// `D_j = Σ e^{−β(t−t_i)}` and `TD_j = Σ (t−t_i) e^{−β(t−t_i)}`.
    fn decay_sums(&self, seq: &PointSequence, n: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
        let k = self.n_types();
        let mut d = vec![0.0; k];
        let mut td = vec![0.0; k];
        for i in 0..n {
            let tau = t - seq.times[i];
            let e = (-self.beta * tau).exp();
            let j = seq.mark0(i);
            d[j] += e;
            td[j] += tau * e;
        }
        (d, td)
    }

    /// Ground hazard and its score quantities at `t` with `n` history events.
    pub fn temporal_eval(&self, seq: &PointSequence, n: usize, t: f64) -> Result<TemporalEval> {
        let k = self.n_types();
        let (d, td) = self.decay_sums(seq, n, t);
        let m: f64 = self.mu.iter().sum();
        // a_j = Σ_k α_{jk}: total ground-intensity jump per type-j parent
        let a: Vec<f64> = (0..k).map(|j| self.alpha[j * k..(j + 1) * k].iter().sum()).collect();
        let s0: f64 = (0..k).map(|j| a[j] * d[j]).sum();
        let s1: f64 = (0..k).map(|j| a[j] * td[j]).sum();
        let b = self.beta;
        let lam = m + s0;
        let dlam = -b * s0;
        let ddlam = b * b * s0;
        let p = self.n_params();
        let (mut g_lam, mut g_dlam, mut g_ddlam) = (vec![0.0; p], vec![0.0; p], vec![0.0; p]);
        for i in 0..k {
            g_lam[i] = 1.0;
        }
        for j in 0..k {
            for l in 0..k {
                let idx = k + j * k + l;
                g_lam[idx] = d[j];
                g_dlam[idx] = -b * d[j];
                g_ddlam[idx] = b * b * d[j];
            }
        }
        if self.fit_beta {
            let idx = p - 1;
            g_lam[idx] = -s1;
            g_dlam[idx] = -s0 + b * s1;
            g_ddlam[idx] = 2.0 * b * s0 - b * b * s1;
        }
        Ok(hazard_parts(lam, dlam, ddlam, g_lam, g_dlam, g_ddlam))
    }

    /// Λ_n(t) in closed form: each kernel integrates to
    /// `(e^{−β(a−t_i)} − e^{−β(t−t_i)}) / β` with `a = t_{n−1}`.
    pub fn cum_intensity(&self, seq: &PointSequence, n: usize, t: f64) -> (f64, Vec<f64>) {
        let k = self.n_types();
        let a_prev = seq.t_prev(n);
        let (d_a, td_a) = self.decay_sums(seq, n, a_prev);
        let (d_t, td_t) = self.decay_sums(seq, n, t);
        let m: f64 = self.mu.iter().sum();
        let a: Vec<f64> = (0..k).map(|j| self.alpha[j * k..(j + 1) * k].iter().sum()).collect();
        let b = self.beta;
        let dt = t - a_prev;
        let decayed: f64 = (0..k).map(|j| a[j] * (d_a[j] - d_t[j])).sum();
        let lam = m * dt + decayed / b;
        let p = self.n_params();
        let mut grad = vec![0.0; p];
        for i in 0..k {
            grad[i] = dt;
        }
        for j in 0..k {
            for l in 0..k {
                grad[k + j * k + l] = (d_a[j] - d_t[j]) / b;
            }
        }
        if self.fit_beta {
            let tw: f64 = (0..k).map(|j| a[j] * (td_t[j] - td_a[j])).sum();
            grad[p - 1] = -decayed / (b * b) + tw / b;
        }
        (lam, grad)
    }

    /// Intensity of the observed type at event `n`, with ∂θ.
    pub fn event_intensity(&self, seq: &PointSequence, n: usize) -> (f64, Vec<f64>) {
        let k = self.n_types();
        let kn = seq.mark0(n);
        let (d, td) = self.decay_sums(seq, n, seq.times[n]);
        let lam = self.mu[kn] + (0..k).map(|j| self.alpha[j * k + kn] * d[j]).sum::<f64>();
        let p = self.n_params();
        let mut grad = vec![0.0; p];
        grad[kn] = 1.0;
        for j in 0..k {
            grad[k + j * k + kn] = d[j];
        }
        if self.fit_beta {
            grad[p - 1] = -(0..k).map(|j| self.alpha[j * k + kn] * td[j]).sum::<f64>();
        }
        (lam, grad)
    }

    /// log (λ_{k_n} / λ̄) at event `n`, with ∂θ.
    pub fn mark_log_mass(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let k = self.n_types();
        if domain.n_marks != k {
            return Err(Error::Config(format!(
                "domain declares {} mark types but model has {k}",
                domain.n_marks
            )));
        }
        let (typed, g_typed) = self.event_intensity(seq, n);
        let ground = self.temporal_eval(seq, n, seq.times[n])?;
        if !(typed > 0.0) || !(ground.lambda > 0.0) {
            return Err(Error::NonFinite {
                context: format!("nonpositive intensity in type mass at event {n}"),
            });
        }
        let val = typed.ln() - ground.lambda.ln();
        let grad = g_typed
            .iter()
            .zip(&ground.d_lambda)
            .map(|(gt, gg)| gt / typed - gg / ground.lambda)
            .collect();
        Ok((val, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::testutil::{check_cum_intensity, check_temporal_gradients};
    use crate::models::ProcessModel;
    use crate::quad::GaussLegendre;
    use approx::assert_relative_eq;

    fn truth() -> MultivariateExpHawkes {
        MultivariateExpHawkes::new(vec![1.0, 1.0], vec![1.6, 0.2, 1.0, 1.0], 5.0).unwrap()
    }

    fn sample_seq() -> PointSequence {
        PointSequence {
            times: vec![0.4, 0.9, 1.3, 2.0],
            locs: None,
            marks: Some(vec![1, 2, 1, 1]),
            truncated: false,
        }
    }

    #[test]
    fn hazard_hand_oracle() {
        // Two history events: (0.4, type 1), (0.9, type 2); evaluate at t=1.1.
        let m = truth();
        let seq = sample_seq();
        let e1 = (-5.0_f64 * 0.7).exp();
        let e2 = (-5.0_f64 * 0.2).exp();
        // ground jump per parent: type1 → 1.6+0.2 = 1.8, type2 → 1+1 = 2
        let expect = 2.0 + 1.8 * e1 + 2.0 * e2;
        let eval = m.temporal_eval(&seq, 2, 1.1).unwrap();
        assert_relative_eq!(eval.lambda, expect, max_relative = 1e-14);
    }

    #[test]
    fn typed_event_intensity_oracle() {
        let m = truth();
        let seq = sample_seq();
        // event 2 has type 1 at t = 1.3; history (0.4, 1), (0.9, 2)
        let e1 = (-5.0_f64 * 0.9).exp();
        let e2 = (-5.0_f64 * 0.4).exp();
        let expect = 1.0 + 1.6 * e1 + 1.0 * e2;
        let (lam, _) = m.event_intensity(&seq, 2);
        assert_relative_eq!(lam, expect, max_relative = 1e-14);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let seq = sample_seq();
        for fit_beta in [false, true] {
            let model = ProcessModel::MultivariateExpHawkes(truth().with_fit_beta(fit_beta));
            let domain = ObservationDomain::new(10.0, None, 2).unwrap();
            check_temporal_gradients(&model, &domain, &seq, 2, 1.15, 1e-5);
            check_temporal_gradients(&model, &domain, &seq, 4, 3.0, 1e-5);
            let gl = GaussLegendre::cached(16);
            check_cum_intensity(&model, &domain, &seq, 2, 1.25, &gl, 1e-5);
            check_cum_intensity(&model, &domain, &seq, 4, 6.0, &gl, 1e-5);
        }
    }

    #[test]
    fn cum_intensity_matches_quadrature() {
        let m = truth();
        let seq = sample_seq();
        let (closed, _) = m.cum_intensity(&seq, 3, 1.9);
        let gl = GaussLegendre::new(60);
        let quad = gl.integrate(1.3, 1.9, |t| m.temporal_eval(&seq, 3, t).unwrap().lambda);
        assert_relative_eq!(closed, quad, max_relative = 1e-12);
    }

    #[test]
    fn mark_mass_normalizes() {
        let m = truth();
        let domain = ObservationDomain::new(10.0, None, 2).unwrap();
        let mut seq = sample_seq();
        let (log_p1, _) = m.mark_log_mass(&domain, &seq, 2).unwrap();
        seq.marks.as_mut().unwrap()[2] = 2;
        let (log_p2, _) = m.mark_log_mass(&domain, &seq, 2).unwrap();
        assert_relative_eq!(log_p1.exp() + log_p2.exp(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn mark_mass_gradient_fd() {
        let model = truth().with_fit_beta(true);
        let domain = ObservationDomain::new(10.0, None, 2).unwrap();
        let seq = sample_seq();
        let (_, grad) = model.mark_log_mass(&domain, &seq, 3).unwrap();
        let theta = model.params();
        for i in 0..theta.len() {
            let h = 1e-6;
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let vp = model.with_params(&tp).unwrap().mark_log_mass(&domain, &seq, 3).unwrap().0;
            let vm = model.with_params(&tm).unwrap().mark_log_mass(&domain, &seq, 3).unwrap().0;
            let fd = (vp - vm) / (2.0 * h);
            assert_relative_eq!(grad[i], fd, epsilon = 1e-5, max_relative = 1e-5);
        }
    }

    #[test]
    fn constructor_validation() {
        assert!(MultivariateExpHawkes::new(vec![], vec![], 5.0).is_err());
        assert!(MultivariateExpHawkes::new(vec![1.0], vec![1.0, 2.0], 5.0).is_err());
        assert!(MultivariateExpHawkes::new(vec![0.0], vec![1.0], 5.0).is_err());
        assert!(MultivariateExpHawkes::new(vec![1.0], vec![-0.1], 5.0).is_err());
        assert!(MultivariateExpHawkes::new(vec![1.0], vec![1.0], 0.0).is_err());
    }
}
