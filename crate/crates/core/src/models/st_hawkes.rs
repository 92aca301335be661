//! Spatio-temporal Hawkes process with a Gaussian triggering kernel on a
//! bounded rectangle.
//!
//! ```text
//! λ(t, s | H) = μ + (C/2π) Σ_i e^{−β τ_i} · exp(−½‖s − s_i‖²) ,   τ_i = t − t_i
//! ```
//!
//! Each event seeds offspring in a unit-variance Gaussian footprint around
//! itself, at a rate that decays exponentially in elapsed time. The process
//! is observed on a rectangle `S`, so the ground temporal hazard integrates
//! the kernel over `S` only:
//!
//! ```text
//! λ_T(t) = μ |S| + C Σ_i e^{−β τ_i} M_i ,   M_i = A_x(s_i) A_y(s_i)
//! ```
//!
//! with per-axis in-window masses `A(c) = Φ(hi−c) − Φ(lo−c)` — constants of
//! each event's location, so λ_T decays purely exponentially between events.
//! Everything downstream (scores, compensators, likelihoods, simulation)
//! uses this bounded-domain model consistently, so no mass-leak
//! approximation is involved, and `ψ_T`, `∂_t ψ_T`, and every ∂θ are
//! analytic.

use crate::domain::ObservationDomain;
use crate::error::{Error, Result};
use crate::models::{hazard_parts, SpatialEval, TemporalEval};
use crate::quad::GaussLegendre;
use crate::sequence::PointSequence;
use crate::stats::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStHawkes {
    /// Uniform background rate per unit area.
    pub mu: f64,
    /// Offspring weight per event.
    pub c: f64,
    /// Temporal decay rate.
    pub beta: f64,
}

/// One axis' in-window mass of the unit-variance Gaussian centered at
/// `center`: `A = Φ(hi − center) − Φ(lo − center)`.
pub(crate) fn axis_mass(lo: f64, hi: f64, center: f64) -> f64 {
    normal_cdf(hi - center) - normal_cdf(lo - center)
}

impl GaussianStHawkes {
    pub fn new(mu: f64, c: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("mu", mu), ("c", c), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(GaussianStHawkes { mu, c, beta })
    }

    pub fn params(&self) -> Vec<f64> {
        vec![self.mu, self.c, self.beta]
    }

    pub fn with_params(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != 3 {
            return Err(Error::Config(format!(
                "gaussian_st_hawkes expects 3 parameters, got {}",
                theta.len()
            )));
        }
        GaussianStHawkes::new(theta[0], theta[1], theta[2])
    }

    /// In-window kernel mass `M_i` of the event at index `i`.
    pub(crate) fn window_mass(rect: &crate::domain::Rect, s: [f64; 2]) -> f64 {
        axis_mass(rect.x[0], rect.x[1], s[0]) * axis_mass(rect.y[0], rect.y[1], s[1])
    }

    /// Ground hazard λ_T(t) with ∂θ = (∂μ, ∂C, ∂β); the cheap single-point
    /// kernel used by compensator quadrature.
    pub(crate) fn lambda_t_with_grad(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
        t: f64,
    ) -> Result<(f64, [f64; 3])> {
        let rect = domain.require_space()?;
        let area = rect.area();
        let (mut g, mut g_tau) = (0.0, 0.0); // Σ e M, Σ τ e M
        for i in 0..n {
            let tau = t - seq.times[i];
            let m = Self::window_mass(rect, seq.loc(i)?);
            let e = (-self.beta * tau).exp() * m;
            g += e;
            g_tau += tau * e;
        }
        let lam = self.mu * area + self.c * g;
        Ok((lam, [area, g, -self.c * g_tau]))
    }

    /// Full hazard-score evaluation: λ_T, ψ_T, ∂_t ψ_T and ∂θ of all three.
    ///
    /// With constant masses the trigger sum `G(t) = Σ e^{−βτ_i} M_i` obeys
    /// `λ_T = μ|S| + CG`, `λ_T' = −βCG`, `λ_T'' = β²CG`, so a single pass
    /// accumulating `G` and `G_τ = Σ τ_i e^{−βτ_i} M_i` yields every term.
    pub fn temporal_eval(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
        t: f64,
    ) -> Result<TemporalEval> {
        let rect = domain.require_space()?;
        let area = rect.area();
        let b = self.beta;
        let (mut g, mut g_tau) = (0.0, 0.0);
        for i in 0..n {
            let tau = t - seq.times[i];
            let m = Self::window_mass(rect, seq.loc(i)?);
            let e = (-b * tau).exp() * m;
            g += e;
            g_tau += tau * e;
        }
        let lam = self.mu * area + self.c * g;
        let dlam = -b * self.c * g;
        let ddlam = b * b * self.c * g;
        let g_lam = vec![area, g, -self.c * g_tau];
        let g_dlam = vec![0.0, -b * g, -self.c * (g - b * g_tau)];
        let g_ddlam = vec![0.0, b * b * g, self.c * (2.0 * b * g - b * b * g_tau)];
        Ok(hazard_parts(lam, dlam, ddlam, g_lam, g_dlam, g_ddlam))
    }

    /// Λ_n(t) by quadrature of λ_T over `[t_{n−1}, t]`.
    pub fn cum_intensity(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
        t: f64,
        gl: &GaussLegendre,
    ) -> Result<(f64, Vec<f64>)> {
        let a = seq.t_prev(n);
        let (mut val, mut grad) = (0.0, vec![0.0; 3]);
        for (u, w) in gl.scaled(a, t) {
            let (lam, g) = self.lambda_t_with_grad(domain, seq, n, u)?;
            val += w * lam;
            for (gi, gv) in grad.iter_mut().zip(g) {
                *gi += w * gv;
            }
        }
        Ok((val, grad))
    }

    /// λ(t, s | H) alone — the space-resolved intensity at an arbitrary
    /// location (used by the spatial log-likelihood normalizer).
    pub(crate) fn point_intensity(
        &self,
        seq: &PointSequence,
        n: usize,
        t: f64,
        s: [f64; 2],
    ) -> Result<f64> {
        self.point_parts(seq, n, t, s).map(|p| p.0)
    }

    fn point_parts(
        &self,
        seq: &PointSequence,
        n: usize,
        t: f64,
        s: [f64; 2],
    ) -> Result<(f64, [f64; 2], f64, [f64; 3], [[f64; 2]; 3], [f64; 3])> {
        let mut lam = self.mu;
        let mut grad_s = [0.0, 0.0];
        let mut lap = 0.0;
        let mut d_lam = [1.0, 0.0, 0.0];
        let mut d_grad_s = [[0.0; 2]; 3];
        let mut d_lap = [0.0; 3];
        for i in 0..n {
            let tau = t - seq.times[i];
            let si = seq.loc(i)?;
            let dx = [s[0] - si[0], s[1] - si[1]];
            let r2 = dx[0] * dx[0] + dx[1] * dx[1];
            let g = self.c * (-self.beta * tau).exp() * (-0.5 * r2).exp()
                / (2.0 * std::f64::consts::PI);
            lam += g;
            let gs = [-g * dx[0], -g * dx[1]];
            grad_s[0] += gs[0];
            grad_s[1] += gs[1];
            let gl = g * (r2 - 2.0);
            lap += gl;
            // ∂C: every kernel term is proportional to C
            d_lam[1] += g / self.c;
            d_grad_s[1][0] += gs[0] / self.c;
            d_grad_s[1][1] += gs[1] / self.c;
            d_lap[1] += gl / self.c;
            // ∂β: multiplies each term by −τ
            d_lam[2] -= tau * g;
            d_grad_s[2][0] -= tau * gs[0];
            d_grad_s[2][1] -= tau * gs[1];
            d_lap[2] -= tau * gl;
        }
        Ok((lam, grad_s, lap, d_lam, d_grad_s, d_lap))
    }

    /// Conditional spatial score at event `n`: ψ_S = ∇_s log λ(t_n, s_n),
    /// valid because the conditional location density is λ(t_n, ·)
    /// normalized over the rectangle.
    pub fn spatial_eval(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
    ) -> Result<SpatialEval> {
        domain.require_space()?;
        let (lam, gs, lap, d_lam, d_gs, d_lap) =
            self.point_parts(seq, n, seq.times[n], seq.loc(n)?)?;
        let psi = [gs[0] / lam, gs[1] / lam];
        let norm2 = gs[0] * gs[0] + gs[1] * gs[1];
        let div = lap / lam - norm2 / (lam * lam);
        let mut d_psi = Vec::with_capacity(3);
        let mut d_div = Vec::with_capacity(3);
        for p in 0..3 {
            d_psi.push([
                d_gs[p][0] / lam - gs[0] * d_lam[p] / (lam * lam),
                d_gs[p][1] / lam - gs[1] * d_lam[p] / (lam * lam),
            ]);
            let dot = gs[0] * d_gs[p][0] + gs[1] * d_gs[p][1];
            d_div.push(
                d_lap[p] / lam - lap * d_lam[p] / (lam * lam) - 2.0 * dot / (lam * lam)
                    + 2.0 * norm2 * d_lam[p] / (lam * lam * lam),
            );
        }
        Ok(SpatialEval { psi, div, d_psi, d_div })
    }

    pub fn event_intensity(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
    ) -> Result<(f64, Vec<f64>)> {
        domain.require_space()?;
        let (lam, _, _, d_lam, _, _) = self.point_parts(seq, n, seq.times[n], seq.loc(n)?)?;
        Ok((lam, d_lam.to_vec()))
    }
}
