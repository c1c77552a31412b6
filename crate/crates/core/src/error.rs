use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("CNOT control and target must differ (both {0})")]
    SameControlTarget(usize),
    #[error("register of {n_qubits} qubits exceeds the cap of {max}")]
    TooManyQubits { n_qubits: usize, max: usize },
    #[error("at least one qubit is required")]
    NoQubits,
    #[error("matrix dimension {dim} exceeds the oracle limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("checkpoint {checkpoint} exceeds the circuit length {n_gates}")]
    CheckpointBeyondCircuit { checkpoint: usize, n_gates: usize },
    #[error("checkpoints must be strictly increasing")]
    CheckpointsNotIncreasing,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("realization count must be at least 1")]
    NoRealizations,
    #[error("statistic order k = {0} outside 1..=8")]
    InvalidOrder(usize),
    #[error("row {row} out of range for dimension {dim}")]
    RowOutOfRange { row: usize, dim: usize },
    #[error("correlator order {k} exceeds the dimension {dim}")]
    OrderExceedsDimension { k: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("log-intensity {value} exceeds ln N = {bound}; state is not normalized")]
    NotNormalized { value: f64, bound: f64 },
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("no states were supplied")]
    EmptyEnsemble,
    #[error("reference value {0} must be positive")]
    NonPositiveReference(f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("regressor is constant across points; fit is degenerate")]
    DegenerateRegressor,
    #[error("points do not share a single ln(eps)")]
    MixedEpsilon,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
