//! Survival classification and the censoring correction.
//!
//! Score matching on hazards cannot identify the absolute normalization of
//! the next-event distribution: any surrogate hazard λ̃ with the right
//! conditional score is a valid minimizer. A separately trained classifier
//! for "the window contains an n-th event",
//!
//! ```text
//! F̂_n(H_{n-1}) ≈ Pr(N ≥ n | H_{n-1}),
//! ```
//!
//! restores it: with G̃_n(t) = exp(−Λ̃_n(t)) the corrected hazard
//!
//! ```text
//! λ̂_T(t) = G̃_n(t) λ̃_n(t) / ( G̃_n(t) + (1 − G̃_n(t_max))/F̂_n − 1 )
//! ```
//!
//! recovers the true hazard exactly when ψ̃ = ψ* and F̂ is the true
//! continuation probability — for *any* member of the score-equivalence
//! class, which is what the tilted-family tests exercise. A count-based
//! normalizer estimate for configuration-space score matching rounds out the
//! module.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::ObservationDomain;
use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::models::ProcessModel;
use crate::objectives::ObjectiveReport;
use crate::optimize::{adam_minimize, AdamConfig};
use crate::quad::GaussLegendre;
use crate::sequence::PointSequence;

/// Logistic continuation classifier over fixed history features.
///
/// The feature vector for "does event `n` exist", given the first `n − 1`
/// events of a window on `(0, horizon)`, is
///
/// ```text
/// [ 1,  n−1,  t_{n-1}/horizon,  (n−1)/mean_count,  mark fractions… ]
/// ```
///
/// with the per-type fractions appended only for marked domains. The scale
/// `mean_count` is frozen at fit time so serialized models are
/// self-contained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurvivalModel {
    pub weights: Vec<f64>,
    pub horizon: f64,
    pub mean_count: f64,
    pub n_marks: usize,
}

impl SurvivalModel {
    pub fn new(weights: Vec<f64>, horizon: f64, mean_count: f64, n_marks: usize) -> Result<Self> {
        let dim = Self::feature_dim_for(n_marks);
        if weights.len() != dim {
            return Err(Error::Config(format!(
                "survival model needs {dim} weights for {n_marks} mark(s), got {}",
                weights.len()
            )));
        }
        if !(horizon > 0.0) || !(mean_count > 0.0) {
            return Err(Error::Config(
                "survival model horizon and mean_count must be positive".to_string(),
            ));
        }
        Ok(SurvivalModel { weights, horizon, mean_count, n_marks })
    }

    pub fn feature_dim_for(n_marks: usize) -> usize {
        4 + if n_marks > 1 { n_marks } else { 0 }
    }

    pub fn feature_dim(&self) -> usize {
        Self::feature_dim_for(self.n_marks)
    }

    /// Features of the history before a hypothetical `n`-th event (1-based;
    /// `n` may be `len() + 1` for the stop label).
    pub fn features(&self, seq: &PointSequence, n: usize) -> Vec<f64> {
        let seen = n - 1;
        let mut phi = Vec::with_capacity(self.feature_dim());
        phi.push(1.0);
        phi.push(seen as f64);
        phi.push(seq.t_prev(seen) / self.horizon);
        phi.push(seen as f64 / self.mean_count);
        if self.n_marks > 1 {
            let mut hist = vec![0.0; self.n_marks];
            for i in 0..seen {
                hist[seq.mark0(i)] += 1.0;
            }
            if seen > 0 {
                for h in &mut hist {
                    *h /= seen as f64;
                }
            }
            phi.extend(hist);
        }
        phi
    }

    /// F̂_n ∈ (0, 1).
    pub fn predict(&self, seq: &PointSequence, n: usize) -> f64 {
        let phi = self.features(seq, n);
        let z: f64 = self.weights.iter().zip(&phi).map(|(w, x)| w * x).sum();
        sigmoid(z)
    }

    /// (F̂_n, ∂F̂_n/∂w).
    pub fn predict_with_grad(&self, seq: &PointSequence, n: usize) -> (f64, Vec<f64>) {
        let phi = self.features(seq, n);
        let z: f64 = self.weights.iter().zip(&phi).map(|(w, x)| w * x).sum();
        let f = sigmoid(z);
        let scale = f * (1.0 - f);
        (f, phi.into_iter().map(|x| scale * x).collect())
    }

    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        Self::new(weights.to_vec(), self.horizon, self.mean_count, self.n_marks)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

const PROB_FLOOR: f64 = 1e-12;

/// Cross-entropy of the continue/stop labels under `surv`, optionally with
/// per-class weights `(w_continue, w_stop)`. Probabilities are clamped into
/// `[1e-12, 1 − 1e-12]`; the number of clamped terms is reported.
pub(crate) fn ce_core(
    surv: &SurvivalModel,
    data: &Dataset,
    class_weights: Option<(f64, f64)>,
) -> Result<ObjectiveReport> {
    let (w_cont, w_stop) = class_weights.unwrap_or((1.0, 1.0));
    let dim = surv.weights.len();
    let mut clamped = 0usize;
    let mut parts = Vec::with_capacity(data.sequences.len());
    for seq in &data.sequences {
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        for n in 1..=seq.len() + 1 {
            let (f, df) = surv.predict_with_grad(seq, n);
            let continues = n <= seq.len();
            let (p, sign, w) = if continues {
                (f, 1.0, w_cont)
            } else {
                (1.0 - f, -1.0, w_stop)
            };
            let p_safe = if p < PROB_FLOOR {
                clamped += 1;
                PROB_FLOOR
            } else {
                p
            };
            value -= w * p_safe.ln();
            // d(−ln p)/dw = −sign·dF/dw / p
            for (g, d) in grad.iter_mut().zip(&df) {
                *g -= w * sign * d / p_safe;
            }
        }
        parts.push((value, grad));
    }
    let mut rep = ObjectiveReport::reduce(parts, dim);
    rep.clamp_events = clamped;
    Ok(rep)
}

/// Outcome of fitting the continuation classifier.
#[derive(Debug, Clone)]
pub struct SurvivalFit {
    pub model: SurvivalModel,
    /// Number of continue labels (= total events).
    pub continue_count: usize,
    /// Number of stop labels (= number of sequences).
    pub stop_count: usize,
    /// Final (unweighted) cross-entropy.
    pub final_ce: f64,
    /// True when one class was empty and a constant-probability model was
    /// returned instead of running the optimizer.
    pub degenerate: bool,
}

/// Fit the logistic continuation classifier by minimizing the label
/// cross-entropy with Adam. `class_weighted` rescales each class by its
/// inverse frequency (the labels are typically highly imbalanced: every
/// event is a continue, every sequence contributes exactly one stop).
pub fn fit_survival(
    data: &Dataset,
    cfg: &AdamConfig,
    class_weighted: bool,
) -> Result<SurvivalFit> {
    if data.sequences.is_empty() {
        return Err(Error::Config("cannot fit a survival model to an empty dataset".into()));
    }
    let m = data.sequences.len();
    let continue_count = data.n_events();
    let stop_count = m;
    let mean_count = (continue_count as f64 / m as f64).max(1e-9);
    let template = SurvivalModel::new(
        vec![0.0; SurvivalModel::feature_dim_for(data.domain.n_marks)],
        data.domain.t_max,
        mean_count.max(1.0),
        data.domain.n_marks,
    )?;
    if continue_count == 0 {
        // single-class labels: constant-probability model, Laplace smoothed
        let q = 1.0 / (stop_count + 2) as f64;
        let mut w = vec![0.0; template.feature_dim()];
        w[0] = (q / (1.0 - q)).ln();
        let model = template.with_weights(&w)?;
        let final_ce = ce_core(&model, data, None)?.value;
        return Ok(SurvivalFit {
            model,
            continue_count,
            stop_count,
            final_ce,
            degenerate: true,
        });
    }
    let class_weights = if class_weighted {
        let total = (continue_count + stop_count) as f64;
        Some((
            total / (2.0 * continue_count as f64),
            total / (2.0 * stop_count as f64),
        ))
    } else {
        None
    };
    let f = |w: &[f64]| {
        let model = template.with_weights(w)?;
        let rep = ce_core(&model, data, class_weights)?;
        Ok((rep.value, rep.grad))
    };
    let res = adam_minimize(f, &vec![0.0; template.feature_dim()], cfg)?;
    let model = template.with_weights(&res.theta)?;
    let final_ce = ce_core(&model, data, None)?.value;
    Ok(SurvivalFit { model, continue_count, stop_count, final_ce, degenerate: false })
}

/// Where continuation probabilities come from: a fitted classifier, or an
/// exact analytic oracle (synthetic tests of the correction algebra).
pub enum Continuation<'a> {
    Fitted(&'a SurvivalModel),
    Exact(&'a (dyn Fn(&PointSequence, usize) -> f64 + Sync)),
}

impl Continuation<'_> {
    pub fn prob(&self, seq: &PointSequence, n: usize) -> f64 {
        match self {
            Continuation::Fitted(m) => m.predict(seq, n),
            Continuation::Exact(f) => f(seq, n),
        }
    }
}

/// Exact continuation probability of a homogeneous Poisson process with the
/// given rate: `1 − exp(−rate·(t_max − t_{n-1}))`.
pub fn poisson_continuation(rate: f64, t_prev: f64, t_max: f64) -> f64 {
    -(-rate * (t_max - t_prev)).exp_m1()
}

/// Exact continuation probability of the gap-logistic family:
/// `(1 − exp(−c·(t_max − t_{n-1}))) / (1 + beta)`.
pub fn logistic_continuation(c: f64, beta: f64, t_prev: f64, t_max: f64) -> f64 {
    -(-c * (t_max - t_prev)).exp_m1() / (1.0 + beta)
}

/// Corrected ground hazard λ̂_T at `t` in the interval after event `n − 1`.
///
/// Errors when the correction denominator is (numerically) zero or the
/// corrected value fails to be positive and finite; the error reports F̂ and
/// the surrogate's survivor mass at the horizon.
pub fn corrected_intensity(
    surrogate: &ProcessModel,
    cont: &Continuation<'_>,
    domain: &ObservationDomain,
    seq: &PointSequence,
    n: usize,
    t: f64,
    gl: &GaussLegendre,
) -> Result<f64> {
    let lam = surrogate.temporal_eval(domain, seq, n, t)?.lambda;
    let (big_t, _) = surrogate.cum_intensity(domain, seq, n, t, gl)?;
    let (big_horizon, _) = surrogate.cum_intensity(domain, seq, n, domain.t_max, gl)?;
    let g_t = (-big_t).exp();
    let g_horizon = (-big_horizon).exp();
    let f_hat = cont.prob(seq, n + 1);
    let denom = g_t + (1.0 - g_horizon) / f_hat - 1.0;
    let value = g_t * lam / denom;
    if denom.abs() < 1e-12 || !(value > 0.0) || !value.is_finite() {
        return Err(Error::CorrectionInvalid { t, value, f_hat, g_horizon });
    }
    Ok(value)
}

/// Mean corrected log-likelihood of a dataset under a surrogate hazard and a
/// continuation source. Temporal part per sequence:
///
/// ```text
/// Σ_n [ log λ̃(t_n) − Λ̃_n(t_n) − log(1 − G̃_n(t_max)) + log F̂_n ]
///   + log(1 − F̂_{N+1})
/// ```
///
/// For the spatio-temporal family the spatial part
/// `Σ_n log f̃_S(s_n) − log ∫_S f̃_S` is reported separately, its normalizer
/// recomputed by tensor quadrature. Sequences producing non-finite terms are
/// excluded from the means and flagged.
#[derive(Debug, Clone)]
pub struct CorrectedLoglik {
    pub ll_t: f64,
    pub ll_s: Option<f64>,
    /// Indices of sequences skipped for non-finite terms.
    pub flagged: Vec<usize>,
}

pub fn corrected_loglik(
    surrogate: &ProcessModel,
    cont: &Continuation<'_>,
    data: &Dataset,
    quad_nodes: usize,
) -> Result<CorrectedLoglik> {
    let gl = GaussLegendre::cached(quad_nodes);
    let spatial = matches!(surrogate, ProcessModel::GaussianStHawkes(_));
    let mut sum_t = 0.0;
    let mut sum_s = 0.0;
    let mut kept = 0usize;
    let mut flagged = Vec::new();
    for (idx, seq) in data.sequences.iter().enumerate() {
        match seq_loglik(surrogate, cont, data, seq, spatial, &gl) {
            Ok((lt, ls)) => {
                sum_t += lt;
                sum_s += ls;
                kept += 1;
            }
            Err(_) => flagged.push(idx),
        }
    }
    if kept == 0 {
        return Err(Error::NonFinite {
            context: "corrected log-likelihood: every sequence produced non-finite terms"
                .to_string(),
        });
    }
    Ok(CorrectedLoglik {
        ll_t: sum_t / kept as f64,
        ll_s: spatial.then_some(sum_s / kept as f64),
        flagged,
    })
}

fn seq_loglik(
    surrogate: &ProcessModel,
    cont: &Continuation<'_>,
    data: &Dataset,
    seq: &PointSequence,
    spatial: bool,
    gl: &GaussLegendre,
) -> Result<(f64, f64)> {
    let domain = &data.domain;
    let mut lt = 0.0;
    let mut ls = 0.0;
    for n in 0..seq.len() {
        let t = seq.times[n];
        let lam = surrogate.temporal_eval(domain, seq, n, t)?.lambda;
        if !(lam > 0.0) {
            return Err(Error::NonFinite { context: format!("λ̃({t}) = {lam}") });
        }
        let (big_t, _) = surrogate.cum_intensity(domain, seq, n, t, gl)?;
        let (big_h, _) = surrogate.cum_intensity(domain, seq, n, domain.t_max, gl)?;
        let g_horizon = (-big_h).exp();
        let f_hat = cont.prob(seq, n + 1);
        let term = lam.ln() - big_t - (1.0 - g_horizon).ln() + f_hat.ln();
        if !term.is_finite() {
            return Err(Error::NonFinite { context: format!("temporal term at t = {t}") });
        }
        lt += term;
        if spatial {
            ls += spatial_term(surrogate, domain, seq, n, gl)?;
        }
    }
    let f_stop = cont.prob(seq, seq.len() + 1);
    let tail = (1.0 - f_stop).ln();
    if !tail.is_finite() {
        return Err(Error::NonFinite { context: "stop term".to_string() });
    }
    Ok((lt + tail, ls))
}

fn spatial_term(
    surrogate: &ProcessModel,
    domain: &ObservationDomain,
    seq: &PointSequence,
    n: usize,
    gl: &GaussLegendre,
) -> Result<f64> {
    let ProcessModel::GaussianStHawkes(m) = surrogate else {
        return Err(Error::Unsupported {
            family: surrogate.family(),
            reason: "spatial log-likelihood requires the spatio-temporal family".to_string(),
        });
    };
    let rect = domain.require_space()?;
    let t = seq.times[n];
    let lam_t = surrogate.temporal_eval(domain, seq, n, t)?.lambda;
    let at_event = m.point_intensity(seq, n, t, seq.loc(n)?)?;
    if !(at_event > 0.0) {
        return Err(Error::NonFinite {
            context: format!("spatial intensity {at_event} at event {n}"),
        });
    }
    // tensor-product quadrature of the conditional location density
    let mut integral = 0.0;
    for (xi, wx) in gl.scaled(rect.x[0], rect.x[1]) {
        for (yi, wy) in gl.scaled(rect.y[0], rect.y[1]) {
            integral += wx * wy * m.point_intensity(seq, n, t, [xi, yi])?;
        }
    }
    let norm = integral / lam_t;
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::NonFinite {
            context: format!("spatial normalizer {norm} at event {n}"),
        });
    }
    Ok((at_event / lam_t).ln() - norm.ln())
}

/// One count-normalizer estimate: for window count `n`,
/// `ĉ_n = ∫_{V^n} j̃_n / (n! · p̂_n)`.
#[derive(Debug, Clone)]
pub struct CnEstimate {
    pub n: usize,
    pub value: f64,
    /// Standard error of `value`, combining the Monte-Carlo numerator noise
    /// with the binomial noise of the count frequency (delta method).
    pub se: f64,
    /// Numerator estimate and its standard error.
    pub integral: f64,
    pub integral_se: f64,
    /// Empirical frequency p̂_n.
    pub freq: f64,
}

/// Estimate the count normalizers `c_0 … c_{n_max}` of an unnormalized
/// Janossy density on a purely temporal window.
///
/// The numerator ∫_{(0,t_max)^n} j̃_n is computed by stratified Monte Carlo:
/// each axis is split into `cells` strata, one uniformly jittered point per
/// cell, averaged over `replicates` independent jitters (the spread across
/// replicates gives the standard error). The denominator is the empirical
/// count frequency times n!; a count never observed in the data has no
/// defined normalizer and errors.
pub fn estimate_cn<F>(
    log_j_tilde: F,
    data: &Dataset,
    n_max: usize,
    cells: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<CnEstimate>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if n_max > 3 {
        return Err(Error::Config(format!(
            "count-normalizer estimation is exponential in the count; n_max = {n_max} > 3"
        )));
    }
    if cells < 2 || replicates < 2 {
        return Err(Error::Config(
            "count-normalizer estimation needs ≥ 2 cells and ≥ 2 replicates".to_string(),
        ));
    }
    let m = data.sequences.len();
    if m == 0 {
        return Err(Error::Config("empty dataset".to_string()));
    }
    let t_max = data.domain.t_max;
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let count = data.sequences.iter().filter(|s| s.len() == n).count();
        if count == 0 {
            return Err(Error::UndefinedCount { n });
        }
        let freq = count as f64 / m as f64;
        let (integral, integral_se) = if n == 0 {
            (log_j_tilde(&[])?.exp(), 0.0)
        } else {
            stratified_integral(&log_j_tilde, t_max, n, cells, replicates, seed)?
        };
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        let denom = factorial * freq;
        let value = integral / denom;
        let freq_se = (freq * (1.0 - freq) / m as f64).sqrt();
        let se = ((integral_se / denom).powi(2) + (value * freq_se / freq).powi(2)).sqrt();
        out.push(CnEstimate {
            n,
            value,
            se,
            integral,
            integral_se,
            freq,
        });
    }
    Ok(out)
}

fn stratified_integral<F>(
    log_j: &F,
    t_max: f64,
    n: usize,
    cells: usize,
    replicates: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let width = t_max / cells as f64;
    let n_cells = cells.pow(n as u32);
    let cell_volume = width.powi(n as i32);
    let mut estimates = Vec::with_capacity(replicates);
    for rep in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 + rep as u64);
        let mut total = 0.0;
        let mut point = vec![0.0; n];
        for cell in 0..n_cells {
            let mut c = cell;
            for axis in point.iter_mut() {
                let idx = c % cells;
                c /= cells;
                *axis = (idx as f64 + rng.gen::<f64>()) * width;
            }
            total += log_j(&point)?.exp();
        }
        estimates.push(total * cell_volume);
    }
    let mean = estimates.iter().sum::<f64>() / replicates as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
        / (replicates as f64 - 1.0);
    Ok((mean, (var / replicates as f64).sqrt()))
}
