use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: loss is not a finite number")]
    NonFiniteLoss { line: usize },

    #[error("config {config}: epoch {epoch} appears more than once")]
    DuplicateEpoch { config: u64, epoch: usize },

    #[error("config {config}: epochs are not contiguous from 1 (missing epoch {missing})")]
    EpochGap { config: u64, missing: usize },

    #[error("config {config}: feature values differ between rows")]
    InconsistentFeatures { config: u64 },

    #[error("curve set is empty")]
    EmptyCurveSet,

    #[error("budget of {0} steps is exhausted")]
    BudgetExhausted(usize),

    #[error("curve of arm {0} is exhausted")]
    CurveExhausted(usize),

    #[error("arm {arm} is out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("degenerate regret range: initial loss {initial} does not exceed optimum {optimum}")]
    DegenerateRange { initial: f64, optimum: f64 },

    #[error("covariance matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no eligible arm left to select")]
    NoEligibleArm,

    #[error("rollout recursion exceeded depth {0}")]
    RecursionLimit(usize),
}
