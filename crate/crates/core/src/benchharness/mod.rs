//! Benchmark runs over a question set, human ratings, and report rendering.

mod dataset;
mod ratings;
mod report;
mod runner;

use thiserror::Error;

pub use dataset::{
    bundled_dataset, load_dataset, parse_dataset, BenchmarkDataset, BenchmarkItem, QuestionGroup,
    BUNDLED_DATASET_JSON, STRICT_ITEMS_PER_GROUP,
};
pub use ratings::HumanRating;
pub use report::{
    CellSummary, EvaluationReport, ModelLabel, RatingSummary, ReportFormat, ReportMetadata,
    LATENCY_DEFINITION,
};
pub use runner::{run_benchmark, BenchOptions, BenchmarkRun, RunRecord};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("dataset has no items")]
    DatasetEmpty,
    #[error("no models selected")]
    NoModels,
    #[error("unknown model: {0}")]
    UnknownModel(String),
    #[error("dataset parse error: {0}")]
    Parse(String),
    #[error("strict mode needs 4 items per group, got clinical={clinical} visual={visual} general={general}")]
    StrictShapeViolation {
        clinical: usize,
        visual: usize,
        general: usize,
    },
    #[error("duplicate item id: {0}")]
    DuplicateItemId(String),
    #[error("unknown record: {0}")]
    UnknownRecord(String),
    #[error("{field} must be within 0..=100, got {value}")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("run has no records")]
    NoRecords,
    #[error("invalid benchmark options: {0}")]
    InvalidOptions(String),
    #[error("run persistence failed: {0}")]
    Persistence(String),
}
