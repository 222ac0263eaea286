use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QiteError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{qubits} qubits exceeds the dense limit of {limit}")]
    DenseLimit { qubits: usize, limit: usize },
    #[error("zero Hamiltonian cannot be normalized")]
    ZeroHamiltonian,
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("state is not normalized (norm {0})")]
    Unnormalized(f64),
    #[error("state has no ancilla register")]
    MissingAncilla,
    #[error("alpha {alpha} outside admissible range (> {floor}) for tau {tau}")]
    AlphaOutOfRange { alpha: f64, tau: f64, floor: f64 },
    #[error("degree {degree} reaches eps {achieved:e}, requested {requested:e}")]
    DegreeTooSmall { degree: usize, achieved: f64, requested: f64 },
    #[error("eps target {0:e} is below the supported floor 1e-10")]
    EpsBelowFloor(f64),
    #[error("angle lists do not match {slots} slots")]
    SlotMismatch { slots: usize },
    #[error("angle synthesis did not converge (residual {residual:e})")]
    SynthesisFailed { residual: f64 },
    #[error("post-selection failed: success probability {0:e}")]
    PostSelectionFailed(f64),
    #[error("Trotter error {eps_t:e} is not below half the gap {half_gap:e}")]
    TrotterTooCoarse { eps_t: f64, half_gap: f64 },
    #[error("loss denominator is zero")]
    ZeroDenominator,
    #[error("no ancilla-zero samples were observed")]
    EmptySample,
    #[error("loss never reached the threshold -B = {neg_b}")]
    ThresholdNeverMet { neg_b: f64 },
    #[error("bisection inconsistency: {0}")]
    Bisection(String),
    #[error("iteration cap {0} exceeded")]
    IterationCap(usize),
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, QiteError>;

impl From<std::io::Error> for QiteError {
    fn from(e: std::io::Error) -> Self {
        QiteError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for QiteError {
    fn from(e: serde_json::Error) -> Self {
        QiteError::Format(e.to_string())
    }
}
