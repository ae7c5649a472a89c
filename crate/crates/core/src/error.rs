use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate spectrum: every non-constant coefficient is zero")]
    DegenerateSpectrum,

    #[error("degenerate bound constants: c1 + c3 must be positive")]
    DegenerateConstants,

    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("ensemble needs at least two models, got {0}")]
    EnsembleTooSmall(usize),

    #[error("dual form refused for {0} training points; use a feature map small enough for the primal form")]
    MemoryGuard(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
