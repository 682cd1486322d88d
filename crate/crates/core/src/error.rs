use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree {k} out of range 0..={max}")]
    Range { k: usize, max: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("point lies outside the collar (d = {d}, collar width = {width})")]
    Collar { d: f64, width: f64 },

    #[error("node {node} is not k-admissible (margin {margin:e})")]
    Inadmissible { node: usize, margin: f64 },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e}): {reason}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
        last_u: Vec<f64>,
    },

    #[error("continuation stalled at t = {t} (dt fell below {dt_min})")]
    Continuation {
        t: f64,
        dt_min: f64,
        last_u: Vec<f64>,
    },

    #[error("sampler starved: accepted {accepted} of {proposed} proposals for mode {mode}")]
    SamplerStarved {
        mode: String,
        accepted: usize,
        proposed: usize,
    },

    #[error("validation failed: {0}")]
    Validation(String),
}
