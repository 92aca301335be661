//! Model families: parameterized finite point processes on bounded domains.
//!
//! Every family exposes the same evaluation surface so that objectives can
//! be written once against it:
//!
//! ```text
//! temporal_eval   hazard λ_T(t | H), its time-score ψ_T = ∂_t log λ_T − λ_T,
//!                 ∂_t ψ_T, and ∂_θ of all of them
//! cum_intensity   Λ_n(t) = ∫_{t_{n-1}}^t λ_T  with ∂_θ
//! spatial_eval    conditional location score ψ_S = ∇_s log f(s | t, H),
//!                 its divergence, and ∂_θ  (spatio-temporal family only)
//! janossy_eval    unconditional configuration score ∇ log j̃_N and its
//!                 divergence at one event  (Poisson families only)
//! log_event_intensity   log λ(t_n, s_n, k_n) with ∂_θ (likelihood term)
//! mark_log_mass   log of the type distribution at an event (marked only)
//! ```
//!
//! Parameters are packed into a flat `Vec<f64>` in a fixed documented order
//! per family (`param_names`); `with_params` is the inverse.

pub mod hawkes;
pub mod logistic;
pub mod poisson;
pub mod st_hawkes;

pub use hawkes::MultivariateExpHawkes;
pub use logistic::{LogisticIntensity, TiltedConstant};
pub use poisson::{PoissonExpSin2d, PoissonWeibull1d};
pub use st_hawkes::GaussianStHawkes;

use crate::domain::ObservationDomain;
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::sequence::PointSequence;

/// Hazard-level quantities at one time point, with parameter gradients.
#[derive(Debug, Clone)]
pub struct TemporalEval {
    /// Ground hazard λ_T(t | H) (summed over types for marked processes).
    pub lambda: f64,
    /// Time score ψ_T = ∂_t log λ_T − λ_T.
    pub psi: f64,
    /// ∂_t ψ_T.
    pub dpsi_dt: f64,
    /// ∂_θ λ_T.
    pub d_lambda: Vec<f64>,
    /// ∂_θ ψ_T.
    pub d_psi: Vec<f64>,
    /// ∂_θ ∂_t ψ_T.
    pub d_dpsi_dt: Vec<f64>,
}

/// Conditional spatial score at one event, with parameter gradients.
#[derive(Debug, Clone)]
pub struct SpatialEval {
    /// ψ_S = ∇_s log f(s | t, H) ∈ R².
    pub psi: [f64; 2],
    /// ∇_s · ψ_S.
    pub div: f64,
    /// ∂_θ ψ_S, one `[f64; 2]` per parameter.
    pub d_psi: Vec<[f64; 2]>,
    /// ∂_θ (∇_s · ψ_S).
    pub d_div: Vec<f64>,
}

/// Configuration-space (Janossy) score contribution of one event.
#[derive(Debug, Clone)]
pub struct JanossyEval {
    /// ∇_{x_n} log j̃_N, length = coordinate dimension of the family.
    pub psi: Vec<f64>,
    /// Σ_d ∂²_{x_n,d} log j̃_N.
    pub div: f64,
    /// ∂_θ ψ, one row per parameter.
    pub d_psi: Vec<Vec<f64>>,
    /// ∂_θ div.
    pub d_div: Vec<f64>,
}

/// Assemble hazard score quantities from λ_T and its first two time
/// derivatives, given ∂_θ of each. Shared by every family so the chain rule
/// lives (and is tested) in exactly one place:
///
/// ```text
/// ψ      = λ'/λ − λ
/// ∂_t ψ  = λ''/λ − (λ'/λ)² − λ'
/// ∂_θ ψ  = ∂λ'/λ − λ' ∂λ/λ² − ∂λ
/// ∂_θ∂_tψ = ∂λ''/λ − λ'' ∂λ/λ² − 2(λ'/λ)(∂λ' λ − λ' ∂λ)/λ² − ∂λ'
/// ```
pub(crate) fn hazard_parts(
    lam: f64,
    dlam: f64,
    ddlam: f64,
    g_lam: Vec<f64>,
    g_dlam: Vec<f64>,
    g_ddlam: Vec<f64>,
) -> TemporalEval {
    let r = dlam / lam;
    let psi = r - lam;
    let dpsi_dt = ddlam / lam - r * r - dlam;
    let p = g_lam.len();
    let mut d_psi = Vec::with_capacity(p);
    let mut d_dpsi = Vec::with_capacity(p);
    for i in 0..p {
        let (gl, gd, gdd) = (g_lam[i], g_dlam[i], g_ddlam[i]);
        d_psi.push(gd / lam - dlam * gl / (lam * lam) - gl);
        d_dpsi.push(
            gdd / lam - ddlam * gl / (lam * lam)
                - 2.0 * r * (gd * lam - dlam * gl) / (lam * lam)
                - gd,
        );
    }
    TemporalEval { lambda: lam, psi, dpsi_dt, d_lambda: g_lam, d_psi, d_dpsi_dt: d_dpsi }
}

/// A finite point-process model: one of the supported families with a
/// concrete parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessModel {
    PoissonExpSin2d(PoissonExpSin2d),
    PoissonWeibull1d(PoissonWeibull1d),
    MultivariateExpHawkes(MultivariateExpHawkes),
    GaussianStHawkes(GaussianStHawkes),
    LogisticIntensity(LogisticIntensity),
    TiltedConstant(TiltedConstant),
}

impl ProcessModel {
    pub fn family(&self) -> &'static str {
        match self {
            ProcessModel::PoissonExpSin2d(_) => "poisson_exp_sin_2d",
            ProcessModel::PoissonWeibull1d(_) => "poisson_weibull_1d",
            ProcessModel::MultivariateExpHawkes(_) => "multivariate_exp_hawkes",
            ProcessModel::GaussianStHawkes(_) => "gaussian_st_hawkes",
            ProcessModel::LogisticIntensity(_) => "logistic_intensity",
            ProcessModel::TiltedConstant(_) => "tilted_constant",
        }
    }

    /// Free parameters, flattened in the family's documented order.
    pub fn params(&self) -> Vec<f64> {
        match self {
            ProcessModel::PoissonExpSin2d(m) => m.params(),
            ProcessModel::PoissonWeibull1d(m) => m.params(),
            ProcessModel::MultivariateExpHawkes(m) => m.params(),
            ProcessModel::GaussianStHawkes(m) => m.params(),
            ProcessModel::LogisticIntensity(m) => m.params(),
            ProcessModel::TiltedConstant(m) => m.params(),
        }
    }

    /// Names matching `params()` element-for-element.
    pub fn param_names(&self) -> Vec<String> {
        match self {
            ProcessModel::PoissonExpSin2d(_) => vec!["theta".into()],
            ProcessModel::PoissonWeibull1d(_) => vec!["shape".into()],
            ProcessModel::MultivariateExpHawkes(m) => m.param_names(),
            ProcessModel::GaussianStHawkes(_) => {
                vec!["mu".into(), "c".into(), "beta".into()]
            }
            ProcessModel::LogisticIntensity(_) => vec!["c".into(), "beta".into()],
            ProcessModel::TiltedConstant(_) => vec!["rate".into()],
        }
    }

    /// Same family, new parameter vector. Errors when the length is wrong or
    /// a value is outside the family's admissible set.
    pub fn with_params(&self, theta: &[f64]) -> Result<ProcessModel> {
        match self {
            ProcessModel::PoissonExpSin2d(m) => {
                m.with_params(theta).map(ProcessModel::PoissonExpSin2d)
            }
            ProcessModel::PoissonWeibull1d(m) => {
                m.with_params(theta).map(ProcessModel::PoissonWeibull1d)
            }
            ProcessModel::MultivariateExpHawkes(m) => {
                m.with_params(theta).map(ProcessModel::MultivariateExpHawkes)
            }
            ProcessModel::GaussianStHawkes(m) => {
                m.with_params(theta).map(ProcessModel::GaussianStHawkes)
            }
            ProcessModel::LogisticIntensity(m) => {
                m.with_params(theta).map(ProcessModel::LogisticIntensity)
            }
            ProcessModel::TiltedConstant(m) => {
                m.with_params(theta).map(ProcessModel::TiltedConstant)
            }
        }
    }

    /// Dimension of one event's coordinates in configuration space, for the
    /// families whose Janossy density factorizes (Poisson): 1 for the
    /// temporal family, 2 for the planar one. `None` otherwise.
    pub fn janossy_dim(&self) -> Option<usize> {
        match self {
            ProcessModel::PoissonExpSin2d(_) => Some(2),
            ProcessModel::PoissonWeibull1d(_) => Some(1),
            _ => None,
        }
    }

    fn unsupported(&self, reason: &str) -> Error {
        Error::Unsupported { family: self.family(), reason: reason.to_string() }
    }

    /// Hazard quantities at time `t` in the interval after event `n − 1`
    /// (so `n` events of `seq` strictly before `t` form the history).
    pub fn temporal_eval(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
        t: f64,
    ) -> Result<TemporalEval> {
        match self {
            ProcessModel::PoissonExpSin2d(m) => m.temporal_eval(domain, t),
            ProcessModel::PoissonWeibull1d(m) => m.temporal_eval(t),
            ProcessModel::MultivariateExpHawkes(m) => m.temporal_eval(seq, n, t),
            ProcessModel::GaussianStHawkes(m) => m.temporal_eval(domain, seq, n, t),
            ProcessModel::LogisticIntensity(m) => m.temporal_eval(seq, n, t),
            ProcessModel::TiltedConstant(m) => m.temporal_eval(seq, n, t),
        }
    }

    /// Λ_n(t) = ∫_{t_{n-1}}^{t} λ_T(u | H) du with ∂_θ. Families without a
    /// closed form integrate with the supplied rule; the others ignore it.
    pub fn cum_intensity(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
        t: f64,
        gl: &GaussLegendre,
    ) -> Result<(f64, Vec<f64>)> {
        match self {
            ProcessModel::PoissonExpSin2d(m) => m.cum_intensity(domain, seq.t_prev(n), t, gl),
            ProcessModel::PoissonWeibull1d(m) => Ok(m.cum_intensity(seq.t_prev(n), t)),
            ProcessModel::MultivariateExpHawkes(m) => Ok(m.cum_intensity(seq, n, t)),
            ProcessModel::GaussianStHawkes(m) => m.cum_intensity(domain, seq, n, t, gl),
            ProcessModel::LogisticIntensity(m) => Ok(m.cum_intensity(seq, n, t)),
            ProcessModel::TiltedConstant(m) => m.cum_intensity(seq, n, t),
        }
    }

    /// Conditional spatial score at event `n`.
    pub fn spatial_eval(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
    ) -> Result<SpatialEval> {
        match self {
            ProcessModel::GaussianStHawkes(m) => m.spatial_eval(domain, seq, n),
            _ => Err(self.unsupported("no conditional spatial density")),
        }
    }

    /// Configuration-space score contribution of event `n`.
    pub fn janossy_eval(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
    ) -> Result<JanossyEval> {
        match self {
            ProcessModel::PoissonExpSin2d(m) => m.janossy_eval(seq, n),
            ProcessModel::PoissonWeibull1d(m) => m.janossy_eval(domain, seq, n),
            _ => Err(self.unsupported("Janossy score implemented only for Poisson families")),
        }
    }

    /// log λ(t_n, s_n, k_n) and its ∂_θ — the event term of the log-likelihood.
    /// Errors with a numeric error when the intensity is not positive.
    pub fn log_event_intensity(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let (lam, d_lam) = match self {
            ProcessModel::PoissonExpSin2d(m) => m.event_intensity(seq, n)?,
            ProcessModel::PoissonWeibull1d(m) => m.event_intensity(seq.times[n]),
            ProcessModel::MultivariateExpHawkes(m) => m.event_intensity(seq, n),
            ProcessModel::GaussianStHawkes(m) => m.event_intensity(domain, seq, n)?,
            ProcessModel::LogisticIntensity(m) => m.event_intensity(seq, n),
            ProcessModel::TiltedConstant(m) => m.event_intensity(seq, n),
        };
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::NonFinite {
                context: format!(
                    "{}: intensity {lam} at event {n} (t = {}) is not positive",
                    self.family(),
                    seq.times[n]
                ),
            });
        }
        let d_log = d_lam.iter().map(|g| g / lam).collect();
        Ok((lam.ln(), d_log))
    }

    /// log of the conditional type mass at event `n`, with ∂_θ.
    pub fn mark_log_mass(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
    ) -> Result<(f64, Vec<f64>)> {
        match self {
            ProcessModel::MultivariateExpHawkes(m) => m.mark_log_mass(domain, seq, n),
            _ => Err(self.unsupported("family has no event types")),
        }
    }

    /// log j̃_N(x_1..x_N): unnormalized log Janossy density of a whole
    /// configuration (Poisson families; used by the count-normalizer
    /// estimator and as a ground-truth hook in tests).
    pub fn log_janossy_density(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
    ) -> Result<f64> {
        match self {
            ProcessModel::PoissonExpSin2d(m) => m.log_janossy_density(domain, seq),
            ProcessModel::PoissonWeibull1d(m) => m.log_janossy_density(domain, seq),
            ProcessModel::TiltedConstant(m) => m.log_janossy_density(domain, seq),
            _ => Err(self.unsupported("Janossy density implemented only for Poisson-type families")),
        }
    }
}
