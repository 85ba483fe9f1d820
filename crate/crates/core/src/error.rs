use thiserror::Error;

/// Errors produced by fitting, evaluation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of a density or formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke a documented precondition (length mismatch, bad index, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The covariate has zero range, so no local grid can be built.
    #[error("degenerate covariate: all x values equal {0}")]
    DegenerateCovariate(f64),

    /// Every random start of a fit ended in an empty component or a non-finite likelihood.
    #[error("fit failed: {0}")]
    FitFailure(String),

    /// Every candidate in a model search failed to fit.
    #[error("model selection failed: {0}")]
    SelectionFailure(String),

    /// Malformed user input (CSV rows, CLI values, model files).
    #[error("input error: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front-end: 2 for input problems, 3 for
    /// numerical or fit failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Io(_) | Error::Json(_) | Error::DegenerateCovariate(_) => 2,
            Error::Contract(_) => 2,
            Error::Domain(_) | Error::FitFailure(_) | Error::SelectionFailure(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
