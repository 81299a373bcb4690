use thiserror::Error;

/// Errors raised across the simulation, inversion and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit count {0} exceeds the supported maximum of {1}")]
    TooManyQubits(usize, usize),

    #[error("invalid qubit index {index} for a {n}-qubit register")]
    InvalidQubit { index: usize, n: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("operation on an annihilated state (trace factor is zero)")]
    ZeroTrace,

    #[error("channel contains a projector; the Clifford-only comparison does not apply")]
    ProjectorInClifford,

    #[error("channel is not propagable through the computational-basis measurement")]
    NotPropagable,

    #[error("singular channel: PTM eigenvalue {0:e} is zero")]
    SingularChannel(f64),

    #[error("noise model is not invertible by the Neumann series (Pr(I) = {pr_identity}, Pr(N) = {pr_noise})")]
    NotInvertible { pr_identity: f64, pr_noise: f64 },

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("geometric draw exceeded the cap of {0} noise factors")]
    NeumannCapExceeded(usize),

    #[error("calibrated fidelity parameter r = {0} is not positive")]
    CalibrationFailed(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
