use thiserror::Error;

/// Errors raised across the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subsystem index {index} out of range for layout of {len} subsystems")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("trace {0} is not within tolerance of 1")]
    BadTrace(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("joint state is not pure (purity {0})")]
    NotPure(f64),

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("invalid rate or frequency {0}, must be positive")]
    InvalidRate(f64),

    #[error("channel count {channels} does not match {slots} subsystems")]
    ChannelCountMismatch { channels: usize, slots: usize },

    #[error("slot {slot} has dimension {dim}, expected a qubit")]
    NotAQubit { slot: usize, dim: usize },

    #[error("zero denominator in count estimator")]
    ZeroCounts,

    #[error("no sudden-death enhancement possible: |alpha| >= |beta|")]
    NoDistillation,

    #[error("measurement settings are not informationally complete (rank {rank} < {needed})")]
    NotInformationallyComplete { rank: usize, needed: usize },

    #[error("unknown projector label {0:?}")]
    UnknownSetting(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
