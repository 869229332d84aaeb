use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("state error: {0}")]
    State(String),

    #[error("{phase} solve failed to converge: {iterations} iterations, final residual {residual:.3e}")]
    NonConvergence {
        phase: String,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
