//! Error types shared across the crate.
//!
//! Two broad classes matter to callers (and to the CLI's exit codes):
//! configuration/validation problems (bad inputs, malformed files, unsupported
//! operations) and numeric failures (non-finite objectives, singular systems,
//! invalid corrections). [`Error::is_numeric`] draws that line.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A point sequence violates its observation domain (ordering, range,
    /// marks, or shape).
    #[error("sequence {seq_index}: {reason}")]
    DomainViolation { seq_index: usize, reason: String },

    /// Bad configuration: inconsistent domain, invalid weight, missing field…
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The requested operation is not defined for this model family
    /// (e.g. a Janossy score for a history-dependent family).
    #[error("unsupported operation for {family}: {reason}")]
    Unsupported { family: &'static str, reason: String },

    /// An objective or intensity evaluated to a non-finite value.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// The optimizer hit a non-finite objective or gradient mid-run.
    /// Carries the last finite iterate so the caller can inspect it.
    #[error("optimizer aborted at iteration {iter}: non-finite {what}")]
    OptimizerAborted {
        iter: usize,
        what: String,
        last_theta: Vec<f64>,
        last_value: f64,
    },

    /// A linear system was not symmetric positive definite.
    #[error("matrix not positive definite (smallest eigenvalue ≈ {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    /// The sufficient-statistic normal matrix of a closed-form fit was
    /// singular (e.g. an empty dataset).
    #[error("sufficient-statistic matrix is rank deficient (condition number ≈ {cond:.3e})")]
    RankDeficient { cond: f64 },

    /// Survival correction produced an invalid intensity.
    #[error(
        "survival correction invalid at t = {t}: corrected intensity {value:.3e} \
         (continuation prob {f_hat:.3e}, surrogate survivor at horizon {g_horizon:.3e})"
    )]
    CorrectionInvalid {
        t: f64,
        value: f64,
        f_hat: f64,
        g_horizon: f64,
    },

    /// A count-normalization constant is undefined because no simulated
    /// trajectory had the requested number of points.
    #[error("normalization for N = {n} undefined: no trajectory with {n} points observed")]
    UndefinedCount { n: usize },

    /// Malformed data file.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// True for numeric failures (CLI exit code 3), false for
    /// validation/configuration problems (exit code 2).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::OptimizerAborted { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::RankDeficient { .. }
                | Error::CorrectionInvalid { .. }
                | Error::UndefinedCount { .. }
        )
    }
}
