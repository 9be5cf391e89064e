use thiserror::Error;

/// Exit code for malformed input data or invalid arguments.
pub const EXIT_DATA: u8 = 2;
/// Exit code when a fit or test fails numerically.
pub const EXIT_CONVERGENCE: u8 = 3;
/// Exit code when the report cannot be written.
pub const EXIT_IO: u8 = 1;

#[derive(Debug, Error)]
pub enum Error {
    /// `row` counts data rows from 1; the header is row 0.
    #[error("{source_name}: row {row}, column {column}: {message}")]
    Parse {
        source_name: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{source_name}: unbalanced panel, no row for (id={id}, period={period})")]
    UnbalancedPanel {
        source_name: String,
        id: String,
        period: u64,
    },

    #[error("{source_name}: {message}")]
    Format { source_name: String, message: String },

    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {target}: {message}")]
    Write { target: String, message: String },

    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] calpha_core::Error),

    #[error(transparent)]
    Sim(#[from] calpha_simlab::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn core_is_numerical(e: &calpha_core::Error) -> bool {
    matches!(
        e,
        calpha_core::Error::NotConverged { .. } | calpha_core::Error::Singular(_)
    )
}

impl Error {
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Write { .. } => EXIT_IO,
            Error::Core(e) | Error::Sim(calpha_simlab::Error::Core(e)) if core_is_numerical(e) => EXIT_CONVERGENCE,
            Error::Sim(calpha_simlab::Error::TooFewCompleted { reasons, .. })
                if reasons.iter().all(|(r, _)| r == "not_converged" || r == "singular") =>
            {
                EXIT_CONVERGENCE
            }
            _ => EXIT_DATA,
        }
    }
}
