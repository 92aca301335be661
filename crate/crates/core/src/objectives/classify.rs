//! Classification losses: continuation (survival) and event-type terms, and
//! the combined training loss that couples them to the autoregressive score
//! objective.

use super::{j_awsm_implicit, tag_seq, ObjectiveReport};
use crate::domain::{SpatialWeight, TemporalWeight};
use crate::error::Result;
use crate::io::Dataset;
use crate::models::ProcessModel;
use crate::survival::{ce_core, SurvivalModel};

/// Continuation cross-entropy: per sequence,
/// `−( Σ_{n=1}^N log F̂_n + log(1 − F̂_{N+1}) )`, averaged over sequences.
/// Gradient is with respect to the classifier weights. Probabilities at the
/// clamp floor are counted in the report.
pub fn survival_ce(surv: &SurvivalModel, data: &Dataset) -> Result<ObjectiveReport> {
    ce_core(surv, data, None)
}

/// Event-type cross-entropy `−mean Σ_n log f(k_n | t_n, H)`, zero for
/// unmarked domains. Gradient is with respect to the model parameters.
pub fn mark_ce(model: &ProcessModel, data: &Dataset) -> Result<ObjectiveReport> {
    let dim = model.params().len();
    if data.domain.n_marks <= 1 {
        return Ok(ObjectiveReport::zeros(dim, data.sequences.len()));
    }
    let mut parts = Vec::with_capacity(data.sequences.len());
    for (idx, seq) in data.sequences.iter().enumerate() {
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        for n in 0..seq.len() {
            let (lm, dlm) = model
                .mark_log_mass(&data.domain, seq, n)
                .map_err(|e| tag_seq(e, idx))?;
            value -= lm;
            for (g, d) in grad.iter_mut().zip(&dlm) {
                *g -= d;
            }
        }
        parts.push((value, grad));
    }
    Ok(ObjectiveReport::reduce(parts, dim))
}

/// Full autoregressive training loss
/// `J_awsm + α_surv·CE_surv + α_mark·CE_mark`, with the gradient laid out as
/// the model parameters followed by the classifier weights.
#[allow(clippy::too_many_arguments)]
pub fn combined_loss(
    model: &ProcessModel,
    surv: &SurvivalModel,
    data: &Dataset,
    w_t: &TemporalWeight,
    w_s: Option<&SpatialWeight>,
    alpha_surv: f64,
    alpha_mark: f64,
) -> Result<ObjectiveReport> {
    let score = j_awsm_implicit(model, data, w_t, w_s)?;
    let surv_ce = survival_ce(surv, data)?;
    let type_ce = mark_ce(model, data)?;
    let dim_model = score.grad.len();
    let mut grad = Vec::with_capacity(dim_model + surv_ce.grad.len());
    for i in 0..dim_model {
        grad.push(score.grad[i] + alpha_mark * type_ce.grad[i]);
    }
    grad.extend(surv_ce.grad.iter().map(|g| alpha_surv * g));
    let per_seq = match (&score.per_seq, &surv_ce.per_seq, &type_ce.per_seq) {
        (Some(a), Some(b), Some(c)) => Some(
            a.iter()
                .zip(b)
                .zip(c)
                .map(|((x, y), z)| x + alpha_surv * y + alpha_mark * z)
                .collect(),
        ),
        _ => None,
    };
    Ok(ObjectiveReport {
        value: score.value + alpha_surv * surv_ce.value + alpha_mark * type_ce.value,
        grad,
        per_seq,
        clamp_events: surv_ce.clamp_events,
    })
}
