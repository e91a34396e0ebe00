use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("field length {got} does not match mesh size {want}")]
    LengthMismatch { got: usize, want: usize },

    #[error("metric density not positive at {} node(s), first at index {first} (t = {t})", nodes.len())]
    Positivity {
        t: f64,
        first: usize,
        nodes: Vec<usize>,
    },

    #[error("Newton iteration failed to converge after {iters} iterations (t = {t}, residual = {residual:.3e})")]
    NewtonDiverged { t: f64, iters: usize, residual: f64 },

    #[error("configuration error for `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("trajectory mismatch: {0}")]
    Mismatch(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("{0}")]
    Other(String),
}

impl CoreError {
    pub fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        CoreError::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        CoreError::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
