//! Simulation and score-matching estimation for finite point processes on
//! bounded observation windows.
//!
//! The crate provides, per model family: exact simulators, weighted
//! (boundary-aware) score-matching objectives in configuration space and in
//! autoregressive hazard form, likelihood baselines, a survival classifier
//! that corrects score-based hazards for horizon censoring, and a small
//! experiment harness behind the `ppscore` binary.

pub mod domain;
pub mod error;
pub mod experiment;
pub mod io;
pub mod models;
pub mod objectives;
pub mod optimize;
pub mod quad;
pub mod sequence;
pub mod simulate;
pub mod stats;
pub mod survival;

pub use domain::{ObservationDomain, Rect, SpatialWeight, TemporalWeight, WeightKind};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult};
pub use io::Dataset;
pub use models::ProcessModel;
pub use objectives::{
    change_of_variable_check, combined_loss, exp_family_fit, j_asm_implicit, j_awsm_implicit,
    j_sm_implicit, j_wsm_implicit, l_awsm_explicit, l_wsm_explicit, mark_ce, nll_mle,
    survival_ce, ConfigWeight, MonotoneMap, ObjectiveReport, PreparedStNll,
};
pub use optimize::{adam_minimize, grad_check, solve_quadratic, AdamConfig, AdamResult};
pub use sequence::PointSequence;
pub use simulate::{simulate_dataset, SimConfig};
pub use survival::{
    corrected_intensity, corrected_loglik, estimate_cn, fit_survival, logistic_continuation,
    poisson_continuation, Continuation, SurvivalModel,
};
