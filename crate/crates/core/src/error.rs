use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Horizontal range is zero, so the azimuth rate is undefined.
    #[error("degenerate geometry: horizontal range is {range_xy} m")]
    DegenerateGeometry { range_xy: f64 },

    #[error("guidance matrix is singular: |det(A)| = {det:e}")]
    Singular { det: f64 },

    #[error("integration diverged at t = {t} s")]
    Diverged { t: f64 },

    #[error("insufficient history: need 2 samples with distinct times, have {have}")]
    InsufficientHistory { have: usize },

    #[error("invalid gain: {0}")]
    InvalidGain(String),

    #[error("undefined gain ratio: initial S1 is zero")]
    UndefinedRatio,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("guidance parameters rejected: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
