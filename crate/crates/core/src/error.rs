use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("root finding failed: {0}")]
    RootFind(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
