use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} qubits vs {right} qubits")]
    Dimension { left: usize, right: usize },

    #[error("cannot parse Pauli string {input:?}: {reason}")]
    ParsePauli { input: String, reason: String },

    #[error("operator {0} is not Hermitian (odd phase exponent)")]
    NonHermitian(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("invalid model:\n  {}", .0.join("\n  "))]
    InvalidModel(Vec<String>),

    #[error("circuit error: {0}")]
    Circuit(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("simulator error: {0}")]
    Simulator(String),

    #[error("{what} failed to converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
