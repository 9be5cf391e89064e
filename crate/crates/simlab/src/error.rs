use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] calpha_core::Error),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("{test} does not apply to {model} data")]
    Mismatch { test: &'static str, model: &'static str },

    #[error("sqrt-scaled draw kept producing nonpositive means after {0} attempts")]
    ResampleExhausted(usize),

    /// Fewer than two replications survived; `reasons` counts the exclusions.
    #[error("only {completed} of {reps} replications completed ({reasons:?})")]
    TooFewCompleted {
        completed: usize,
        reps: usize,
        reasons: Vec<(String, usize)>,
    },

    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;
