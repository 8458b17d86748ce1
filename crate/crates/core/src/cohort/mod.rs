//! Flat-file ingestion, the extraction pipeline, linear-time joins and
//! treatment-naive detection.

mod extracts;
mod join;
mod key;
mod naive;
mod pipeline;

pub use extracts::{ExtractTable, Extracts};
pub use join::{sorted_merge_join, JoinResult};
pub use key::{KeyComponent, PatientKey};
pub use naive::{default_headings, detect_naive, DrugLexicon, DEFAULT_HEADINGS};
pub use pipeline::{
    default_pipeline, format_pipeline, parse_pipeline, run_filter_pipeline, CmpOp, FilterStep, FilterTrace,
    PipelineContext, PipelineOutput, Predicate, StepKind, TraceRow, MANDATORY_EXTRACTS,
};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinSide {
    Ids,
    Values,
}

impl std::fmt::Display for JoinSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            JoinSide::Ids => "ids",
            JoinSide::Values => "values",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CohortError {
    #[error("unsorted {side} input at element {index}")]
    UnsortedInput { side: JoinSide, index: usize },
    #[error("unknown set reference: {0}")]
    UnknownSetReference(String),
    #[error("stay {icustay_id}: predicate on `{field}` failed ({reason})")]
    PredicateFailure { icustay_id: u64, field: String, reason: String },
    #[error("pipeline line {line}: {message}")]
    PipelineSyntax { line: usize, message: String },
    #[error("extract `{extract}` lacks column `{column}`")]
    MissingColumn { extract: String, column: String },
    #[error("extract `{extract}` line {line}: bad {column} value `{value}`")]
    BadValue { extract: String, line: usize, column: String, value: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
}
