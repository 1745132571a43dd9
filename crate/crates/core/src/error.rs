use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The step-halving audit found the trajectory under-resolved.
    #[error(
        "step-halving discrepancy {discrepancy:.3e} exceeds tolerance {tolerance:.3e}; \
         try dt <= {suggested_dt:.6e}"
    )]
    Accuracy {
        discrepancy: f64,
        tolerance: f64,
        suggested_dt: f64,
    },

    #[error("numerical failure at t = {t}: {detail}")]
    NumericalFailure { t: f64, detail: String },

    #[error("harmonic expansion truncated at J = {order}: tail weight {tail:.3e} exceeds 1e-10")]
    Truncation { order: usize, tail: f64 },

    #[error("mode {index}: {source}")]
    Mode {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config field `{field}`: {message}")]
    ConfigField { field: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::InvalidInput(_)
            | Error::ConfigParse { .. }
            | Error::ConfigField { .. } => 2,
            Error::Accuracy { .. } | Error::NumericalFailure { .. } | Error::Truncation { .. } => 3,
            Error::Mode { source, .. } => source.exit_code(),
            Error::Io { .. } | Error::Csv(_) => 1,
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {value}")))
    }
}
