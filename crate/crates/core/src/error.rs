use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),

    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dataset: empty input")]
    EmptyInput,

    #[error("dataset: row {row}: {message}")]
    MalformedRow { row: usize, message: String },

    #[error("dataset: duplicate row for entity `{entity}`, year {year}")]
    DuplicateKey { entity: String, year: i32 },

    #[error("dataset: column `{0}` is not mapped to any variable")]
    UnknownColumn(String),

    #[error("dataset: unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("dataset: entity `{entity}` has no value for {variable} in {year}")]
    MissingValue {
        entity: String,
        variable: String,
        year: i32,
    },

    #[error("dataset: {0}")]
    InvalidDataset(String),

    #[error("synth: infeasible spec: {0}")]
    InfeasibleSynth(String),

    #[error("transform: variable {variable} has a degenerate range (min = max = {value})")]
    DegenerateRange { variable: String, value: f64 },

    #[error("{module}: need at least {needed} entities, got {found}")]
    TooFewEntities {
        module: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("clustering: invalid weight scheme: {0}")]
    InvalidWeights(String),

    #[error("clustering: invalid centroid set: {0}")]
    InvalidCentroids(String),

    #[error("clustering: {variable} = {value} lies outside [0, 1]")]
    OutOfUnitRange { variable: String, value: f64 },

    #[error("clustering: scope mismatch: {0}")]
    ScopeMismatch(String),

    #[error("{module}: entity sets differ: {message}")]
    EntityMismatch {
        module: &'static str,
        message: String,
    },

    #[error("clustering: outlier filter would remove {attempted} of {total} entities (limit {limit})")]
    RunawayFilter {
        attempted: usize,
        total: usize,
        limit: usize,
    },

    #[error("analytics: {0}")]
    Analytics(String),

    #[error("report: {0}")]
    Report(String),
}

impl Error {
    /// Process exit code: 1 usage/config, 2 data validation, 3 numeric or
    /// degenerate input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } | Error::InvalidWeights(_) | Error::InvalidCentroids(_) => 1,
            Error::EmptyInput
            | Error::MalformedRow { .. }
            | Error::DuplicateKey { .. }
            | Error::UnknownColumn(_)
            | Error::UnknownVariable(_)
            | Error::MissingValue { .. }
            | Error::InvalidDataset(_)
            | Error::OutOfUnitRange { .. }
            | Error::ScopeMismatch(_)
            | Error::EntityMismatch { .. }
            | Error::Report(_) => 2,
            Error::InfeasibleSynth(_)
            | Error::DegenerateRange { .. }
            | Error::TooFewEntities { .. }
            | Error::RunawayFilter { .. }
            | Error::Analytics(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
