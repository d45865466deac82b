use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("invalid beta parameters: mu = {mu}, phi = {phi}")]
    InvalidBetaParams { mu: f64, phi: f64 },

    #[error("design matrix is rank deficient (intercept plus {p} covariates)")]
    SingularDesign { p: usize },

    #[error("optimizer hit the iteration cap with gradient norm {grad_norm:e}")]
    NonConvergence { grad_norm: f64 },

    #[error("expected {expected} covariates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{operation} is not defined for model family {family}")]
    FamilyMismatch {
        operation: &'static str,
        family: &'static str,
    },

    #[error("score {score} cannot be used with model family {family}")]
    IncompatibleScore {
        score: &'static str,
        family: &'static str,
    },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no non-conformity scores to take a quantile of")]
    EmptyScores,

    #[error("input has no column named `y`")]
    MissingResponseColumn,

    #[error("response outside (0,1) at data rows {rows:?}")]
    OutOfRangeResponse { rows: Vec<usize> },

    #[error("parse error at data row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that originate in data ingestion rather than in
    /// fitting or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidData(_)
                | Error::MissingResponseColumn
                | Error::OutOfRangeResponse { .. }
                | Error::Parse { .. }
                | Error::Csv(_)
                | Error::Io(_)
                | Error::DimensionMismatch { .. }
        )
    }
}
