use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: at least {min} required")]
    InvalidDimension { dim: usize, min: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported Hamiltonian: {0}")]
    UnsupportedHamiltonian(String),

    #[error("spectrum unbounded below: exp(-beta*E) overflows for E = {energy} at beta = {beta}")]
    UnboundedBelow { energy: f64, beta: f64 },

    #[error("Green function at equal times is ambiguous; use green_at_zero with a prescription")]
    EqualTimeAmbiguity,

    #[error("lattice step too large: eps*mu = {0} must be below 1")]
    StepTooLarge(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("symbol kind {kind} cannot be used with the {prescription} prescription")]
    KindMismatch {
        kind: &'static str,
        prescription: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
