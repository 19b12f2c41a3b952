use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("column {column} has zero norm")]
    ZeroColumn { column: usize },

    /// The candidate column lies (numerically) in the span of the current support.
    #[error("column {column} is degenerate: residual norm {residual_norm:e} after projection")]
    DegenerateColumn { column: usize, residual_norm: f64 },

    #[error("{0}")]
    RankDeficient(String),

    #[error("combinatorial budget exceeded: {0}")]
    Budget(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure comes from input data rather than configuration or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::ZeroColumn { .. }
                | Error::RankDeficient(_)
                | Error::Parse { .. }
                | Error::Data(_)
                | Error::Io(_)
                | Error::Csv(_)
        )
    }

    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Json(_) | Error::Budget(_))
    }
}
