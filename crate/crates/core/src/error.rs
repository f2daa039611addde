use thiserror::Error;

/// Errors surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Search-space construction or sampling precondition violated.
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    /// Kernel hyperparameters inconsistent with the space, or out of range.
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// Gaussian-process training or evaluation failed.
    #[error("gp: {0}")]
    Gp(String),

    /// Feature-grid construction precondition violated.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Solver or experiment configuration rejected.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Experiment aborted; reports how many repetitions had completed.
    #[error("experiment failed after {completed} completed repetition(s): {cause}")]
    Experiment { completed: usize, cause: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
