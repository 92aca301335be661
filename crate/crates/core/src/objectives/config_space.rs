//! Configuration-space (Janossy) score matching.
//!
//! For Poisson families the log Janossy density of a window decomposes over
//! events, so the score at event `x_n` is a local quantity. The implicit
//! weighted objective per sequence is
//!
//! ```text
//! Σ_n ( ½‖ψ_n‖² + Tr ∇ψ_n ) h(x_n) + ψ_n · ∇h(x_n)
//! ```
//!
//! which equals the explicit squared-score discrepancy up to a θ-free
//! constant when `h` vanishes on the boundary. The plain (unweighted) form
//! keeps `h ≡ 1` and is retained as a deliberately broken baseline.

use super::{janossy_dim_of, ConfigWeight, ObjectiveReport};
use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::models::ProcessModel;
use crate::optimize::{solve_quadratic, sym_eigenvalues};
use crate::sequence::PointSequence;

/// Unweighted score matching: `mean Σ_n ½‖ψ_n‖² + Tr ∇ψ_n`. Its population
/// minimizer ignores the count distribution, which is exactly the failure
/// the weighted forms repair; see the Weibull fixed-minimizer test below.
pub fn j_sm_implicit(model: &ProcessModel, data: &Dataset) -> Result<ObjectiveReport> {
    janossy_dim_of(model)?;
    let dim = model.params().len();
    let mut parts = Vec::with_capacity(data.sequences.len());
    for seq in &data.sequences {
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        for n in 0..seq.len() {
            let je = model.janossy_eval(&data.domain, seq, n)?;
            let sq: f64 = je.psi.iter().map(|p| p * p).sum();
            value += 0.5 * sq + je.div;
            for i in 0..dim {
                let dot: f64 = je.psi.iter().zip(&je.d_psi[i]).map(|(p, d)| p * d).sum();
                grad[i] += dot + je.d_div[i];
            }
        }
        parts.push((value, grad));
    }
    Ok(ObjectiveReport::reduce(parts, dim))
}

/// Weighted score matching with a boundary-vanishing configuration weight.
pub fn j_wsm_implicit(
    model: &ProcessModel,
    data: &Dataset,
    w: &ConfigWeight,
) -> Result<ObjectiveReport> {
    let dim_x = janossy_dim_of(model)?;
    let dim = model.params().len();
    let mut parts = Vec::with_capacity(data.sequences.len());
    for seq in &data.sequences {
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        for n in 0..seq.len() {
            let je = model.janossy_eval(&data.domain, seq, n)?;
            let (h, dh) = w.eval_event(&data.domain, seq, n, dim_x)?;
            let sq: f64 = je.psi.iter().map(|p| p * p).sum();
            let transport: f64 = je.psi.iter().zip(&dh).map(|(p, d)| p * d).sum();
            value += (0.5 * sq + je.div) * h + transport;
            for i in 0..dim {
                let dot: f64 = je.psi.iter().zip(&je.d_psi[i]).map(|(p, d)| p * d).sum();
                let dtrans: f64 = je.d_psi[i].iter().zip(&dh).map(|(p, d)| p * d).sum();
                grad[i] += (dot + je.d_div[i]) * h + dtrans;
            }
        }
        parts.push((value, grad));
    }
    Ok(ObjectiveReport::reduce(parts, dim))
}

/// Explicit weighted score discrepancy against a known true model:
/// `½ mean Σ_n ‖ψ_n(oracle) − ψ_n(θ)‖² h(x_n)`. Test-only companion of
/// [`j_wsm_implicit`]; the two differ by a θ-free constant.
pub fn l_wsm_explicit(
    model: &ProcessModel,
    data: &Dataset,
    w: &ConfigWeight,
    oracle: &ProcessModel,
) -> Result<ObjectiveReport> {
    let dim_x = janossy_dim_of(model)?;
    if janossy_dim_of(oracle)? != dim_x {
        return Err(Error::Config(
            "oracle and model have different event dimensions".to_string(),
        ));
    }
    let dim = model.params().len();
    let mut parts = Vec::with_capacity(data.sequences.len());
    for seq in &data.sequences {
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        for n in 0..seq.len() {
            let je = model.janossy_eval(&data.domain, seq, n)?;
            let truth = oracle.janossy_eval(&data.domain, seq, n)?;
            let (h, _) = w.eval_event(&data.domain, seq, n, dim_x)?;
            let diff: Vec<f64> =
                je.psi.iter().zip(&truth.psi).map(|(m, o)| m - o).collect();
            value += 0.5 * h * diff.iter().map(|d| d * d).sum::<f64>();
            for i in 0..dim {
                grad[i] +=
                    h * diff.iter().zip(&je.d_psi[i]).map(|(d, g)| d * g).sum::<f64>();
            }
        }
        parts.push((value, grad));
    }
    Ok(ObjectiveReport::reduce(parts, dim))
}

/// Event-level pieces of an exponential-family sufficient statistic `T` and
/// carrier `b`: with `p` natural parameters and `d`-dimensional events,
/// `s[j][axis] = ∂T_j/∂x_axis`, `trace_h[j] = Δ_x T_j`, and
/// `b_grad[axis] = ∂b/∂x_axis`, all at event `n`.
#[derive(Debug, Clone)]
pub struct EventStats {
    pub s: Vec<Vec<f64>>,
    pub trace_h: Vec<f64>,
    pub b_grad: Vec<f64>,
}

/// Closed-form weighted score-matching fit for an exponential family.
#[derive(Debug, Clone)]
pub struct ExpFamilyFit {
    pub theta: Vec<f64>,
    /// Normal matrix `Γ̂ = mean Σ_n h S Sᵀ`, row-major `p × p`.
    pub gamma: Vec<f64>,
    /// Linear term `ĝ`, so the objective is `½θᵀΓ̂θ − ĝᵀθ + const`.
    pub g: Vec<f64>,
}

/// Assemble the quadratic form of weighted score matching for a family with
/// log Janossy density `θᵀT(x) + b(x) + const` and solve it exactly:
///
/// ```text
/// Γ̂ = mean Σ_n h S Sᵀ
/// ĝ = −mean Σ_n [ h (S ∇b + Δ_x T) + S ∇h ]
/// θ̂ = Γ̂⁻¹ ĝ
/// ```
///
/// `stats` supplies the event-level pieces; `dim_theta`/`dim_x` fix the
/// shapes. A singular normal matrix (empty data, collinear statistics) is a
/// rank-deficiency error carrying the condition number.
pub fn exp_family_fit<F>(
    data: &Dataset,
    w: &ConfigWeight,
    dim_theta: usize,
    dim_x: usize,
    stats: F,
) -> Result<ExpFamilyFit>
where
    F: Fn(&PointSequence, usize) -> Result<EventStats>,
{
    let p = dim_theta;
    let m = data.sequences.len();
    if m == 0 {
        return Err(Error::RankDeficient { cond: f64::INFINITY });
    }
    let mut gamma = vec![0.0; p * p];
    let mut g = vec![0.0; p];
    for seq in &data.sequences {
        for n in 0..seq.len() {
            let ev = stats(seq, n)?;
            if ev.s.len() != p || ev.trace_h.len() != p || ev.b_grad.len() != dim_x {
                return Err(Error::Config(format!(
                    "event statistics have shape ({}, {}, {}), expected ({p}, {p}, {dim_x})",
                    ev.s.len(),
                    ev.trace_h.len(),
                    ev.b_grad.len()
                )));
            }
            let (h, dh) = w.eval_event(&data.domain, seq, n, dim_x)?;
            for j in 0..p {
                for k in 0..p {
                    let dot: f64 =
                        ev.s[j].iter().zip(&ev.s[k]).map(|(a, b)| a * b).sum();
                    gamma[j * p + k] += h * dot;
                }
                let sb: f64 = ev.s[j].iter().zip(&ev.b_grad).map(|(a, b)| a * b).sum();
                let sdh: f64 = ev.s[j].iter().zip(&dh).map(|(a, b)| a * b).sum();
                g[j] -= h * (sb + ev.trace_h[j]) + sdh;
            }
        }
    }
    let inv = 1.0 / m as f64;
    for v in gamma.iter_mut().chain(g.iter_mut()) {
        *v *= inv;
    }
    let eigs = sym_eigenvalues(&gamma, p);
    let max_abs = eigs.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    let min_abs = eigs.iter().fold(f64::INFINITY, |a, e| a.min(e.abs()));
    if !(min_abs > 1e-12 * max_abs.max(1e-300)) {
        let cond = if min_abs == 0.0 { f64::INFINITY } else { max_abs / min_abs };
        return Err(Error::RankDeficient { cond });
    }
    let theta = solve_quadratic(&gamma, &g)?;
    Ok(ExpFamilyFit { theta, gamma, g })
}

/// Sufficient-statistic pieces for the planar Poisson family with intensity
/// `exp(θ (sin x + cos y))`: one natural parameter, `T = Σ_n sin x_n + cos y_n`,
/// carrier zero.
pub fn exp_sin_stats(seq: &PointSequence, n: usize) -> Result<EventStats> {
    let s = seq.loc(n)?;
    Ok(EventStats {
        s: vec![vec![s[0].cos(), -s[1].sin()]],
        trace_h: vec![-s[0].sin() - s[1].cos()],
        b_grad: vec![0.0, 0.0],
    })
}
