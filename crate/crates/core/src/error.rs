use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes. The CLI maps these onto exit codes and the C API
/// onto status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Config,
    Data,
    Model,
    NoRunnableCells,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("column `{0}` named in the role map is not present in the header")]
    MissingColumn(String),
    #[error("dataset contains no records")]
    EmptyDataset,
    #[error("duplicate record for series `{series}` at timestamp {timestamp}")]
    DuplicateKey { series: String, timestamp: i64 },
    #[error("series `{series}` has {length} points but at least {required} are needed")]
    SeriesTooShort {
        series: String,
        length: usize,
        required: usize,
    },
    #[error("dataset failed validation: {0}")]
    InvalidData(String),
    #[error("zero value in ratio mode for series `{series}` at timestamp {timestamp}")]
    ZeroDivision { series: String, timestamp: i64 },
    #[error("last known value is zero in ratio mode (series `{series}`, anchor {timestamp})")]
    ZeroAnchor { series: String, timestamp: i64 },
    #[error("calendar features requested on integer-ordinal timestamps")]
    OrdinalTimestamps,
    #[error("series `{0}` was not seen at fit time")]
    UnknownSeries(String),
    #[error("missing inverse anchor: {0}")]
    MissingAnchor(String),
    #[error("invalid pipeline: {0}")]
    InvalidPipeline(String),
    #[error("normal equations are singular (rank-deficient features with lambda = 0); use lambda > 0")]
    SingularSystem,
    #[error("too few samples: {samples} rows, need at least {required}")]
    TooFewSamples { samples: usize, required: usize },
    #[error("feature window holds {available} lags but the model needs {required}")]
    InsufficientLags { available: usize, required: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid model spec: {0}")]
    InvalidModelSpec(String),
    #[error("multivariate mode requires aligned series")]
    NotAligned,
    #[error("invalid strategy spec: {0}")]
    InvalidStrategySpec(String),
    #[error("series `{series}` supplies {available} points, forecasting needs {required}")]
    InsufficientHistory {
        series: String,
        available: usize,
        required: usize,
    },
    #[error("future covariate `{column}` missing for series `{series}` at timestamp {timestamp}")]
    MissingCovariates {
        series: String,
        column: String,
        timestamp: i64,
    },
    #[error("series too short for {folds} folds: shortest has {length} points, need {required}")]
    TooShortForFolds {
        folds: usize,
        length: usize,
        required: usize,
    },
    #[error("series too short for {windows} backtest windows: shortest has {length} points, need {required}")]
    TooShortForBacktest {
        windows: usize,
        length: usize,
        required: usize,
    },
    #[error("length mismatch: {left} predictions vs {right} observations")]
    LengthMismatch { left: usize, right: usize },
    #[error("comparison group {0} has fewer than two cells")]
    DegenerateGroup(String),
    #[error("config schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("config constraint violated: {0}")]
    Constraint(String),
    #[error("no runnable cells in the sweep grid")]
    NoRunnableCells,
    #[error("report contains no completed cells")]
    EmptyReport,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io { .. } => ErrorKind::Io,
            Schema { .. }
            | Constraint(_)
            | InvalidPipeline(_)
            | InvalidModelSpec(_)
            | InvalidStrategySpec(_) => ErrorKind::Config,
            Parse { .. }
            | MissingColumn(_)
            | EmptyDataset
            | DuplicateKey { .. }
            | SeriesTooShort { .. }
            | InvalidData(_)
            | ZeroDivision { .. }
            | ZeroAnchor { .. }
            | OrdinalTimestamps
            | UnknownSeries(_)
            | NotAligned
            | InsufficientHistory { .. }
            | MissingCovariates { .. }
            | TooShortForFolds { .. }
            | TooShortForBacktest { .. }
            | LengthMismatch { .. }
            | EmptyReport => ErrorKind::Data,
            MissingAnchor(_)
            | SingularSystem
            | TooFewSamples { .. }
            | InsufficientLags { .. }
            | DimensionMismatch { .. }
            | DegenerateGroup(_) => ErrorKind::Model,
            NoRunnableCells => ErrorKind::NoRunnableCells,
        }
    }

    /// Stable machine-readable name, used for sweep skip reasons.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            Io { .. } => "Io",
            Parse { .. } => "ParseError",
            MissingColumn(_) => "MissingColumn",
            EmptyDataset => "EmptyDataset",
            DuplicateKey { .. } => "DuplicateKey",
            SeriesTooShort { .. } => "SeriesTooShort",
            InvalidData(_) => "InvalidData",
            ZeroDivision { .. } => "ZeroDivision",
            ZeroAnchor { .. } => "ZeroAnchor",
            OrdinalTimestamps => "OrdinalTimestamps",
            UnknownSeries(_) => "UnknownSeries",
            MissingAnchor(_) => "MissingAnchor",
            InvalidPipeline(_) => "InvalidPipeline",
            SingularSystem => "SingularSystem",
            TooFewSamples { .. } => "TooFewSamples",
            InsufficientLags { .. } => "InsufficientLags",
            DimensionMismatch { .. } => "DimensionMismatch",
            InvalidModelSpec(_) => "InvalidModelSpec",
            NotAligned => "NotAligned",
            InvalidStrategySpec(_) => "InvalidStrategySpec",
            InsufficientHistory { .. } => "InsufficientHistory",
            MissingCovariates { .. } => "MissingCovariates",
            TooShortForFolds { .. } => "TooShortForFolds",
            TooShortForBacktest { .. } => "TooShortForBacktest",
            LengthMismatch { .. } => "LengthMismatch",
            DegenerateGroup(_) => "DegenerateGroup",
            Schema { .. } => "SchemaError",
            Constraint(_) => "ConstraintError",
            NoRunnableCells => "NoRunnableCells",
            EmptyReport => "EmptyReport",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
