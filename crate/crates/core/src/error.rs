use alloc::string::String;

use thiserror::Error;

/// Errors raised by the matching pipeline.
///
/// Numerical divergence of a shooting run is *not* an error: it is reported
/// through [`crate::shooting::Termination`] so sweeps can record it as data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("particles {i} and {j} coincide{}", at_suffix(.at))]
    Coincident {
        i: usize,
        j: usize,
        /// Integrator step index and time, when raised during integration.
        at: Option<(usize, f64)>,
    },

    #[error("state became non-finite at step {step} (t = {time})")]
    NonFinite { step: usize, time: f64 },

    #[error("template size mismatch: reference has {reference} landmarks, target has {target}")]
    SizeMismatch { reference: usize, target: usize },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("matching {reference} -> {target} did not converge")]
    NotConverged { reference: String, target: String },
}

fn at_suffix(at: &Option<(usize, f64)>) -> String {
    match at {
        Some((step, t)) => alloc::format!(" at step {step} (t = {t})"),
        None => String::new(),
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
