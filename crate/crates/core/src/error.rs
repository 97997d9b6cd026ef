use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single rejected row of an annotation or listing table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the source file, header included.
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}: {reason}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        reason: String,
    },
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("intensity {value} does not fit in {bits} bits")]
    IntensityOutOfRange { value: u16, bits: u8 },
    #[error("invalid category table: {0}")]
    InvalidCategoryTable(String),
    #[error("segment table and id map disagree: {0}")]
    OverlapViolation(String),
    #[error("unknown category {0}")]
    UnknownCategory(u32),
    #[error("segment {id} declares area {declared} but covers {actual} pixels")]
    AreaMismatch { id: u32, declared: u64, actual: u64 },
    #[error("segment {id} has confidence {value} outside [0, 1]")]
    InvalidConfidence { id: u32, value: f64 },
    #[error("invalid box ({xmin}, {ymin}, {xmax}, {ymax})")]
    InvalidBox {
        xmin: u32,
        ymin: u32,
        xmax: u32,
        ymax: u32,
    },
    #[error("box ({xmin}, {ymin}, {xmax}, {ymax}) exceeds image {width}x{height}")]
    BoxOutOfBounds {
        xmin: u32,
        ymin: u32,
        xmax: u32,
        ymax: u32,
        width: usize,
        height: usize,
    },

    #[error("sigma must be positive and finite, got {0}")]
    NonPositiveSigma(f64),
    #[error("region has a single distinct intensity level")]
    DegenerateRegion,
    #[error("region of {0} pixels is too large for exact thresholding")]
    RegionTooLarge(u64),
    #[error("at least 3 distinct points are required, got {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    CollinearPoints,
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("invalid synthesis config: {0}")]
    InvalidConfig(String),

    #[error("IoU threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("ground truth and prediction use different category tables")]
    CategoryTableMismatch,
    #[error("prediction segment {id} has no confidence")]
    MissingConfidence { id: u32 },

    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("threshold grid must be strictly increasing")]
    UnsortedGrid,
    #[error("need at least {needed} items or groups for {k} folds, got {available}")]
    TooFewItems {
        k: usize,
        needed: usize,
        available: usize,
    },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("duplicate item id {0:?}")]
    DuplicateItem(String),
    #[error("records were computed at different IoU thresholds: {0} vs {1}")]
    MixedThresholds(f64, f64),
    #[error("aggregation needs at least 2 fold records, got {0}")]
    TooFewFolds(usize),

    #[error("{path}: decode error: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{path}: unsupported format: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },
    #[error("segment id {0} does not fit in 24 bits")]
    IdOverflow(u32),
    #[error("{path}: sidecar mismatch: {message}")]
    SidecarMismatch { path: PathBuf, message: String },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: {} malformed row(s):\n{}", .rows.len(), format_rows(.rows))]
    MalformedRow { path: PathBuf, rows: Vec<RowError> },
    #[error("nothing to report")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn format_rows(rows: &[RowError]) -> String {
    rows.iter()
        .map(|r| format!("  {r}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
