use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("qubit index {index} out of range for a {n_qubits}-qubit chain")]
    QubitIndex { index: usize, n_qubits: usize },

    #[error("shape mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    Shape {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error(
        "non-positive transition frequency {value} for qubit {} in basis state |{state}> (label {label})",
        crate::spin_chain::qubit_name(*.qubit)
    )]
    NonPositiveFrequency {
        qubit: usize,
        state: String,
        label: usize,
        value: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration diverged at step {step}: non-finite entries")]
    Divergence { step: usize },

    #[error("insufficient data: need at least {needed} kick cycles, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("quasi-stationary regime not reached")]
    NotConverged,

    #[error("dissipated power is zero; Fourier coefficient undefined")]
    UndefinedCoefficient,
}
