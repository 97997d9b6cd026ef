//! Panoptic segmentation evaluation for lesion detection: box-to-mask
//! synthesis, segment matching, PQ/AP/Dice metrics, threshold sweeps and
//! cross-validation bookkeeping.

pub mod error;
pub mod experiment;
pub mod imgproc;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod synthesis;
pub mod types;

pub use error::{Error, Result, RowError};
pub use experiment::{
    aggregate, default_grid, kfold_split, sweep, FoldPlan, MetricSummary, Summary, SweepResult,
};
pub use matching::{iou, match_segments, DatasetOverlaps, ImageOverlaps, MatchConfig, MatchReport};
pub use metrics::{average_precision, dice, evaluate, panoptic_quality, EvalConfig};
pub use synthesis::{build_panoptic, SynthesisConfig, Synthesized, Warning, WarningKind};
pub use types::{
    BinaryMask, BitDepth, BoxAnnotation, Category, CategoryTable, ClassMetrics, FloatImage,
    GrayImage, MetricName, MetricsRecord, PanopticMap, Segment,
};
