use std::path::PathBuf;

use thiserror::Error;

use crate::profile::StateLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("prediction horizon {t_span} s is outside (0, {duration}] s")]
    HorizonOutOfRange { t_span: f64, duration: f64 },

    #[error("tolerances must be positive (got x={tol_x}, theta={tol_theta})")]
    InvalidTolerance { tol_x: f64, tol_theta: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rank {requested} out of range 1..={max}")]
    Rank { requested: usize, max: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("training labels must contain both classes")]
    DegenerateLabels,

    #[error("SMO did not converge within {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("model has no probability calibration")]
    Uncalibrated,

    #[error("accuracy undefined: {0}")]
    UndefinedDenominator(&'static str),

    #[error("node needs at least two states, got {0}")]
    DegenerateNode(usize),

    #[error("samples {first} ({first_label}) and {second} ({second_label}) have identical features")]
    Unsplittable {
        first: usize,
        first_label: StateLabel,
        second: usize,
        second_label: StateLabel,
    },

    #[error("probe profile unavailable: {0}")]
    ProbeUnavailable(String),

    #[error("offset ({dx} mm, {dtheta_z} deg) is outside the admissible range")]
    OffsetOutOfRange { dx: f64, dtheta_z: f64 },

    #[error("incompatible inputs: {0}")]
    Compatibility(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit code: 2 for data/config problems, 3 for training and
    /// evaluation failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateLabels
            | Error::Convergence { .. }
            | Error::Uncalibrated
            | Error::UndefinedDenominator(_)
            | Error::DegenerateNode(_)
            | Error::Unsplittable { .. }
            | Error::ProbeUnavailable(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}
