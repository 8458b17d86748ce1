//! Adjusted outcome models (A, B, C) and per-stratum outcome tests.

mod models;
mod stratified;

pub use models::{
    fit_model_a, fit_model_b, fit_model_c, model_a_spec, model_b_spec, outcome_models_csv, split_by_median,
    EvidenceBand, OutcomeModelId, OutcomeModelReport, SubsetSplit, TermReport, SIGNIFICANCE,
};
pub use stratified::{stratified_outcome_tests, stratified_tests_csv, OutcomeKind, StratumTest};

use thiserror::Error;

use crate::regress::RegressError;
use crate::stats::StatsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OutcomeError {
    #[error("split variable x{0} is constant")]
    ConstantVariable(usize),
    #[error("split variable x{0} has missing values")]
    MissingValues(usize),
    #[error("{got} scores for {expected} patients")]
    ScoreCount { expected: usize, got: usize },
    #[error("fit did not converge")]
    NotConverged,
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
