use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} outside register of {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("qubit {0} appears twice in one Pauli term")]
    DuplicateQubit(usize),
    #[error("register of {requested} qubits exceeds the cap of {cap}")]
    RegisterCap { requested: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("parity mismatch: {0}")]
    ParityMismatch(String),
    #[error("sector M={m} is invalid for N={n}")]
    InvalidSector { n: usize, m: usize },
    #[error("encoding produced couplings between sectors M={from} and M={to}")]
    ForbiddenCoupling { from: usize, to: usize },
    #[error("near-degenerate denominator between levels {i} and {k}: |{gap:e}|")]
    Degenerate { i: usize, k: usize, gap: f64 },
    #[error("propagation tolerance {0:e} could not be reached")]
    ToleranceUnachievable(f64),
    #[error("step-size floor reached at T={0}")]
    StepFloor(f64),
    #[error("density matrix of dimension {dim} exceeds the cap {cap}")]
    DensityCap { dim: usize, cap: usize },
    #[error("negative decay rate {0}")]
    NegativeRate(f64),
    #[error("positivity violated at T={time}: min eigenvalue {min_eig:e}")]
    Positivity { time: f64, min_eig: f64 },
    #[error("state left the sector: projected weight {0}")]
    LeftSector(f64),
    #[error("empty averaging window [{0}, {1}]")]
    EmptyWindow(f64, f64),
    #[error("need at least {needed} eigenvalues, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("bound violated: {0}")]
    BoundViolated(String),
    #[error("zero operator")]
    ZeroOperator,
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
