use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("weight w_{index} is zero; weighted shifts need nonvanishing weights")]
    ZeroWeight { index: i64 },

    #[error("weight w_{index} is undefined: the table has no tail rule on that side")]
    UndefinedWeight { index: i64 },

    #[error("empty index range [{a}, {b}]")]
    InvalidRange { a: i64, b: i64 },

    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("|w_{index}| = {lhs} differs from |u_{index}| = {rhs}")]
    ModulusMismatch { index: i64, lhs: f64, rhs: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by user input rather than the environment.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
