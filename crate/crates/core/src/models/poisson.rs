//! Inhomogeneous Poisson families.
//!
//! Both families have factorized Janossy densities
//!
//! ```text
//! j̃_N(x_1..x_N) = ∏_i λ(x_i) · exp(−∫_V λ)
//! ```
//!
//! so the configuration score of event n depends on that event alone.
//!
//! The planar family `PoissonExpSin2d` has intensity
//! `λ(s) = exp(θ (sin s₀ + cos s₁))` on a rectangle. Realizations are stored
//! with the monotone time key `t = s₀ − x_lo`, under which the process is an
//! inhomogeneous temporal Poisson with marginal hazard
//! `λ_T(t) = exp(θ sin s₀) ∫ exp(θ cos y) dy`.
//!
//! The temporal family `PoissonWeibull1d` has hazard `λ(t) = θ t^{θ−1}` on
//! `(0, T)` — the failure-rate curve of a Weibull distribution, though here
//! it drives a Poisson process, not a single lifetime.

use crate::domain::ObservationDomain;
use crate::error::{Error, Result};
use crate::models::{hazard_parts, JanossyEval, TemporalEval};
use crate::quad::GaussLegendre;
use crate::sequence::PointSequence;

/// Number of quadrature nodes used for the one-dimensional marginals of the
/// planar intensity; the integrands are entire and periodic, so this is far
/// past full f64 accuracy for the parameter ranges exercised here.
const MARGINAL_NODES: usize = 64;

/// Planar Poisson process with intensity `exp(θ (sin s₀ + cos s₁))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonExpSin2d {
    pub theta: f64,
}

impl PoissonExpSin2d {
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Config(format!("theta must be finite, got {theta}")));
        }
        Ok(PoissonExpSin2d { theta })
    }

    pub fn params(&self) -> Vec<f64> {
        vec![self.theta]
    }

    pub fn with_params(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != 1 {
            return Err(Error::Config(format!(
                "poisson_exp_sin_2d expects 1 parameter, got {}",
                theta.len()
            )));
        }
        PoissonExpSin2d::new(theta[0])
    }

    /// Intensity at a planar location, with ∂θ.
    pub fn intensity_at(&self, s: [f64; 2]) -> (f64, f64) {
        let u = s[0].sin() + s[1].cos();
        let lam = (self.theta * u).exp();
        (lam, u * lam)
    }

    /// `(Q, Q', Q'')` of the y-marginal `Q(θ) = ∫ exp(θ cos y) dy` over the
    /// domain's y-range, with primes in θ.
    fn y_marginal(&self, domain: &ObservationDomain) -> Result<(f64, f64, f64)> {
        let rect = domain.require_space()?;
        let gl = GaussLegendre::cached(MARGINAL_NODES);
        let (mut q, mut dq, mut ddq) = (0.0, 0.0, 0.0);
        for (y, w) in gl.scaled(rect.y[0], rect.y[1]) {
            let c = y.cos();
            let e = w * (self.theta * c).exp();
            q += e;
            dq += c * e;
            ddq += c * c * e;
        }
        Ok((q, dq, ddq))
    }

    /// `∫_V λ` over the full rectangle, with ∂θ: the product of the two
    /// one-dimensional marginals.
    pub fn total_mass(&self, domain: &ObservationDomain) -> Result<(f64, f64)> {
        let rect = domain.require_space()?;
        let gl = GaussLegendre::cached(MARGINAL_NODES);
        let (mut p, mut dp) = (0.0, 0.0);
        for (x, w) in gl.scaled(rect.x[0], rect.x[1]) {
            let s = x.sin();
            let e = w * (self.theta * s).exp();
            p += e;
            dp += s * e;
        }
        let (q, dq, _) = self.y_marginal(domain)?;
        Ok((p * q, dp * q + p * dq))
    }

    /// Hazard of the time key `t = s₀ − x_lo`.
    pub fn temporal_eval(&self, domain: &ObservationDomain, t: f64) -> Result<TemporalEval> {
        let rect = domain.require_space()?;
        let x = rect.x[0] + t;
        let (q, dq, _) = self.y_marginal(domain)?;
        let th = self.theta;
        let (sx, cx) = x.sin_cos();
        let lam = (th * sx).exp() * q;
        let dlam = th * cx * lam;
        let ddlam = (th * th * cx * cx - th * sx) * lam;
        let g_lam = (sx + dq / q) * lam;
        let g_dlam = cx * lam + th * cx * g_lam;
        let g_ddlam = (2.0 * th * cx * cx - sx) * lam + (th * th * cx * cx - th * sx) * g_lam;
        Ok(hazard_parts(lam, dlam, ddlam, vec![g_lam], vec![g_dlam], vec![g_ddlam]))
    }

    pub fn cum_intensity(
        &self,
        domain: &ObservationDomain,
        a: f64,
        b: f64,
        gl: &GaussLegendre,
    ) -> Result<(f64, Vec<f64>)> {
        let rect = domain.require_space()?;
        let (q, dq, _) = self.y_marginal(domain)?;
        let th = self.theta;
        let (mut p, mut dp) = (0.0, 0.0);
        for (t, w) in gl.scaled(a, b) {
            let s = (rect.x[0] + t).sin();
            let e = w * (th * s).exp();
            p += e;
            dp += s * e;
        }
        Ok((p * q, vec![dp * q + p * dq]))
    }

    pub fn janossy_eval(&self, seq: &PointSequence, n: usize) -> Result<JanossyEval> {
        let s = seq.loc(n)?;
        let th = self.theta;
        let (psi0, psi1) = (th * s[0].cos(), -th * s[1].sin());
        let div = -th * (s[0].sin() + s[1].cos());
        Ok(JanossyEval {
            psi: vec![psi0, psi1],
            div,
            d_psi: vec![vec![s[0].cos(), -s[1].sin()]],
            d_div: vec![-(s[0].sin() + s[1].cos())],
        })
    }

    pub fn event_intensity(&self, seq: &PointSequence, n: usize) -> Result<(f64, Vec<f64>)> {
        let (lam, d) = self.intensity_at(seq.loc(n)?);
        Ok((lam, vec![d]))
    }

    pub fn log_janossy_density(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
    ) -> Result<f64> {
        let (mass, _) = self.total_mass(domain)?;
        let mut ll = -mass;
        if let Some(locs) = &seq.locs {
            for s in locs {
                ll += self.theta * (s[0].sin() + s[1].cos());
            }
        }
        Ok(ll)
    }
}

/// Temporal Poisson process with monomial hazard `λ(t) = θ t^{θ−1}` on (0, T).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonWeibull1d {
    pub shape: f64,
}

impl PoissonWeibull1d {
    pub fn new(shape: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::Config(format!("shape must be positive, got {shape}")));
        }
        Ok(PoissonWeibull1d { shape })
    }

    pub fn params(&self) -> Vec<f64> {
        vec![self.shape]
    }

    pub fn with_params(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != 1 {
            return Err(Error::Config(format!(
                "poisson_weibull_1d expects 1 parameter, got {}",
                theta.len()
            )));
        }
        PoissonWeibull1d::new(theta[0])
    }

    pub fn temporal_eval(&self, t: f64) -> Result<TemporalEval> {
        if t <= 0.0 {
            return Err(Error::NonFinite {
                context: format!("poisson_weibull_1d hazard evaluated at t = {t} ≤ 0"),
            });
        }
        let k = self.shape;
        let lt = t.ln();
        let pk1 = (lt * (k - 1.0)).exp(); // t^{k−1}
        let lam = k * pk1;
        let dlam = k * (k - 1.0) * pk1 / t;
        let ddlam = k * (k - 1.0) * (k - 2.0) * pk1 / (t * t);
        let g_lam = (1.0 + k * lt) * pk1;
        let g_dlam = ((2.0 * k - 1.0) + k * (k - 1.0) * lt) * pk1 / t;
        let g_ddlam =
            ((3.0 * k * k - 6.0 * k + 2.0) + k * (k - 1.0) * (k - 2.0) * lt) * pk1 / (t * t);
        Ok(hazard_parts(lam, dlam, ddlam, vec![g_lam], vec![g_dlam], vec![g_ddlam]))
    }

    /// Λ(a, b) = b^θ − a^θ with ∂θ, exact.
    pub fn cum_intensity(&self, a: f64, b: f64) -> (f64, Vec<f64>) {
        let k = self.shape;
        let pow = |x: f64| if x == 0.0 { (0.0, 0.0) } else { (x.powf(k), x.ln() * x.powf(k)) };
        let (pb, db) = pow(b);
        let (pa, da) = pow(a);
        (pb - pa, vec![db - da])
    }

    pub fn janossy_eval(
        &self,
        _domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
    ) -> Result<JanossyEval> {
        let t = seq.times[n];
        let k = self.shape;
        Ok(JanossyEval {
            psi: vec![(k - 1.0) / t],
            div: -(k - 1.0) / (t * t),
            d_psi: vec![vec![1.0 / t]],
            d_div: vec![-1.0 / (t * t)],
        })
    }

    pub fn event_intensity(&self, t: f64) -> (f64, Vec<f64>) {
        let k = self.shape;
        let pk1 = t.powf(k - 1.0);
        (k * pk1, vec![(1.0 + k * t.ln()) * pk1])
    }

    pub fn log_janossy_density(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
    ) -> Result<f64> {
        let k = self.shape;
        let mut ll = -domain.t_max.powf(k);
        for &t in &seq.times {
            ll += k.ln() + (k - 1.0) * t.ln();
        }
        Ok(ll)
    }
}
