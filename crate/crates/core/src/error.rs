use thiserror::Error;

/// Every failure the simulator can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("arcsin argument {value} outside [-1, 1] in {context}")]
    Domain { context: &'static str, value: f64 },

    #[error("scenario ended: t = {t} s is past the stop time {stop_time} s")]
    ScenarioEnded { t: f64, stop_time: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("quadrature did not converge: best estimate {estimate}, achieved tolerance {achieved}")]
    NoConvergence { estimate: f64, achieved: f64 },

    #[error("total noise variance is zero")]
    ZeroNoise,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by the scenario description rather than by evaluation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation(_) | Error::InvalidParameter(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
