use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
///
/// Display strings start with the error class name so that command-line
/// diagnostics can be matched by class.
#[derive(Debug, Error)]
pub enum Error {
    #[error("MalformedHeader: {0}")]
    MalformedHeader(String),
    #[error("UnsupportedDtype: {0}")]
    UnsupportedDtype(String),
    #[error("NonFiniteValue: {0}")]
    NonFiniteValue(String),
    #[error("RankError: rank {0} is not 2 or 3")]
    RankError(usize),
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(String),
    #[error("IoFailure: {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ManifestSchemaError: {0}")]
    ManifestSchemaError(String),
    #[error("MissingFile: {0}")]
    MissingFile(PathBuf),
    #[error("MetaMismatch: {0}")]
    MetaMismatch(String),

    #[error("SizeZero: transform dimensions must be at least 1")]
    SizeZero,

    #[error("NonPositiveCutoff: cutoff must be finite and > 0, got {0}")]
    NonPositiveCutoff(f64),
    #[error("DimMismatch: {0}")]
    DimMismatch(String),
    #[error("ZeroEnergyFeature: {0}")]
    ZeroEnergyFeature(String),

    #[error("ScheduleError: {0}")]
    ScheduleError(String),
    #[error("ProfileInvalid: {0}")]
    ProfileInvalid(String),
    #[error("FrequencyTooHigh: detail frequency {freq} must be below {limit}")]
    FrequencyTooHigh { freq: usize, limit: f64 },

    #[error("EmptyInput: {0}")]
    EmptyInput(String),
    #[error("InvalidEmbeddingSet: {0}")]
    InvalidEmbeddingSet(String),
    #[error("DegenerateWithinScatter: every sample coincides with its class mean")]
    DegenerateWithinScatter,
    #[error("ConstantSeries: {0} has zero variance")]
    ConstantSeries(&'static str),
    #[error("SeriesError: {0}")]
    SeriesError(String),

    #[error("EmptyTimestep: {0}")]
    EmptyTimestep(String),
    #[error("EmptyCurve: no timesteps to select from")]
    EmptyCurve,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }

    /// Short class name, e.g. `"MalformedHeader"`.
    pub fn class(&self) -> &'static str {
        match self {
            Error::MalformedHeader(_) => "MalformedHeader",
            Error::UnsupportedDtype(_) => "UnsupportedDtype",
            Error::NonFiniteValue(_) => "NonFiniteValue",
            Error::RankError(_) => "RankError",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::IoFailure { .. } => "IoFailure",
            Error::ManifestSchemaError(_) => "ManifestSchemaError",
            Error::MissingFile(_) => "MissingFile",
            Error::MetaMismatch(_) => "MetaMismatch",
            Error::SizeZero => "SizeZero",
            Error::NonPositiveCutoff(_) => "NonPositiveCutoff",
            Error::DimMismatch(_) => "DimMismatch",
            Error::ZeroEnergyFeature(_) => "ZeroEnergyFeature",
            Error::ScheduleError(_) => "ScheduleError",
            Error::ProfileInvalid(_) => "ProfileInvalid",
            Error::FrequencyTooHigh { .. } => "FrequencyTooHigh",
            Error::EmptyInput(_) => "EmptyInput",
            Error::InvalidEmbeddingSet(_) => "InvalidEmbeddingSet",
            Error::DegenerateWithinScatter => "DegenerateWithinScatter",
            Error::ConstantSeries(_) => "ConstantSeries",
            Error::SeriesError(_) => "SeriesError",
            Error::EmptyTimestep(_) => "EmptyTimestep",
            Error::EmptyCurve => "EmptyCurve",
        }
    }
}
