//! Training objectives as pure functions `θ ↦ (value, gradient)`.
//!
//! Two score-matching forms coexist:
//!
//! ```text
//! configuration space   the score differentiates the log Janossy density of
//!                       the whole window w.r.t. one event's coordinates;
//!                       tractable for Poisson families (config_space)
//! autoregressive        the score differentiates the conditional hazard in
//!                       time (and the conditional location density in
//!                       space); tractable for every family (hazard)
//! ```
//!
//! Each comes in an implicit variant (integration by parts, computable from
//! data alone — what is trained) and an explicit variant (references the true
//! score; used to test the equivalence up to a θ-free constant). The
//! likelihood baseline, classification terms, and the change-of-variable
//! identity check round out the set.
//!
//! Every objective is the mean over sequences of a per-sequence sum over
//! events, reduced in ascending sequence order so results are bitwise
//! deterministic. Empty sequences contribute zero to score objectives, their
//! survivor terms to the likelihood, and a stop label to the survival loss.

mod change_of_variable;
mod classify;
mod config_space;
mod hazard;
mod likelihood;

pub use change_of_variable::{change_of_variable_check, MonotoneMap};
pub use classify::{combined_loss, mark_ce, survival_ce};
pub use config_space::{
    exp_family_fit, exp_sin_stats, j_sm_implicit, j_wsm_implicit, l_wsm_explicit, EventStats,
    ExpFamilyFit,
};
pub use hazard::{j_asm_implicit, j_awsm_implicit, l_awsm_explicit};
pub use likelihood::{nll_mle, PreparedStNll};

use crate::domain::{ObservationDomain, SpatialWeight, TemporalWeight};
use crate::error::{Error, Result};
use crate::models::ProcessModel;
use crate::sequence::PointSequence;

/// Value, gradient, and per-sequence decomposition of one objective.
#[derive(Debug, Clone)]
pub struct ObjectiveReport {
    pub value: f64,
    /// Gradient in the same layout as the objective's parameter vector.
    pub grad: Vec<f64>,
    /// Per-sequence contributions; their mean is `value`.
    pub per_seq: Option<Vec<f64>>,
    /// How many probability evaluations had to be clamped away from {0, 1}
    /// (classification losses only; 0 elsewhere).
    pub clamp_events: usize,
}

impl ObjectiveReport {
    pub(crate) fn zeros(dim: usize, n_seq: usize) -> Self {
        ObjectiveReport {
            value: 0.0,
            grad: vec![0.0; dim],
            per_seq: Some(vec![0.0; n_seq]),
            clamp_events: 0,
        }
    }

    /// Mean-reduce per-sequence `(value, grad)` pairs in index order.
    pub(crate) fn reduce(parts: Vec<(f64, Vec<f64>)>, dim: usize) -> Self {
        let m = parts.len();
        if m == 0 {
            return ObjectiveReport::zeros(dim, 0);
        }
        let mut value = 0.0;
        let mut grad = vec![0.0; dim];
        let mut per_seq = Vec::with_capacity(m);
        for (v, g) in &parts {
            value += v;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += gi;
            }
            per_seq.push(*v);
        }
        let inv = 1.0 / m as f64;
        value *= inv;
        for g in &mut grad {
            *g *= inv;
        }
        ObjectiveReport { value, grad, per_seq: Some(per_seq), clamp_events: 0 }
    }
}

/// Weight on configuration space for the Janossy-score objectives: on the
/// observation interval for 1-D families, on the spatial rectangle for
/// planar ones.
#[derive(Debug, Clone)]
pub enum ConfigWeight {
    Interval(TemporalWeight),
    Planar(SpatialWeight),
}

impl ConfigWeight {
    /// `(h, ∇h)` at event `n`, with the gradient dimension matching the
    /// family's coordinate dimension `dim_x`. A weight for the wrong kind of
    /// domain is a configuration error.
    pub(crate) fn eval_event(
        &self,
        domain: &ObservationDomain,
        seq: &PointSequence,
        n: usize,
        dim_x: usize,
    ) -> Result<(f64, Vec<f64>)> {
        match (self, dim_x) {
            (ConfigWeight::Interval(w), 1) => {
                let (h, dh) = w.eval(0.0, seq.times[n], domain.t_max);
                Ok((h, vec![dh]))
            }
            (ConfigWeight::Planar(w), 2) => {
                let rect = domain.require_space()?;
                let (h, dh) = w.eval(rect, seq.loc(n)?);
                Ok((h, dh.to_vec()))
            }
            (ConfigWeight::Interval(_), d) => Err(Error::Config(format!(
                "interval weight applied to a family with {d}-dimensional events"
            ))),
            (ConfigWeight::Planar(_), d) => Err(Error::Config(format!(
                "planar weight applied to a family with {d}-dimensional events"
            ))),
        }
    }
}

/// Coordinate dimension of the model's Janossy score, or an unsupported-
/// operation error for history-dependent families.
pub(crate) fn janossy_dim_of(model: &ProcessModel) -> Result<usize> {
    model.janossy_dim().ok_or(Error::Unsupported {
        family: model.family(),
        reason: "configuration-space score requires a Poisson family".to_string(),
    })
}

/// Attach the sequence index to numeric errors raised inside per-sequence
/// loops, so likelihood failures name the offending sequence.
pub(crate) fn tag_seq(err: Error, seq_index: usize) -> Error {
    match err {
        Error::NonFinite { context } => Error::NonFinite {
            context: format!("sequence {seq_index}: {context}"),
        },
        other => other,
    }
}
