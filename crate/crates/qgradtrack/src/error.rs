//! Crate-wide error type.

use thiserror::Error;

use crate::dynamics::TraceRecord;

/// Errors produced by the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A quantizer received a NaN or infinite input.
    #[error("non-finite input {value}{}", fmt_index(.index))]
    NonFinite { value: f64, index: Option<usize> },

    /// An operation was invoked on a quantizer kind that does not support it.
    #[error("operation `{operation}` is not supported for the {kind} quantizer")]
    UnsupportedQuantizer {
        kind: &'static str,
        operation: &'static str,
    },

    /// A parameter or configuration value violates its contract.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Random graph generation exhausted its retry budget without
    /// producing a strongly connected graph.
    #[error(
        "failed to generate a strongly connected graph (n={n}, p={p}, seed={seed}) \
         after {attempts} attempts"
    )]
    GenerationFailure {
        n: usize,
        p: f64,
        seed: u64,
        attempts: usize,
    },

    /// The Laplacian has more than one eigenvalue in the zero-tolerance
    /// ball, so the graph cannot be strongly connected.
    #[error("connectivity violation: {near_zero} Laplacian eigenvalues within the zero tolerance")]
    ConnectivityViolation { near_zero: usize },

    /// A simulation produced a non-finite state component. Carries the
    /// partial trace recorded up to the failure.
    #[error("divergence at t={t}: non-finite state at agent {agent}")]
    Divergence {
        t: f64,
        agent: usize,
        trace: Vec<TraceRecord>,
    },

    /// The centralized reference solver hit its iteration budget.
    #[error("oracle did not converge after {iterations} iterations (grad norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    /// The eigensolver returned non-finite values.
    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_index(index: &Option<usize>) -> String {
    match index {
        Some(i) => format!(" at index {i}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
