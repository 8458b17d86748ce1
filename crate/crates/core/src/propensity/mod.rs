//! Propensity scores, quintile stratification, covariate balance and the
//! refinement loop.

mod balance;
mod model;
mod refine;
mod strata;
mod table;

pub use balance::{assess_balance, covariate_balance, BalanceReport, CovariateBalance, BALANCE_VARS};
pub use model::{
    candidate_vars, fit_propensity_model, keys, select_propensity_model, stratify_group, treatment_design,
    PropensityModel,
};
pub use refine::{refine_model, Attempt, AttemptForm, RefineOptions, Refinement};
pub use strata::{
    propensity_scores, score_from_eta, stratify, stratify_quintiles, stratum_sizes, Stratification, SCORE_FLOOR,
};
pub use table::{strata_outcome_table, strata_table_csv, ArmOutcomes, StratumRow};

use thiserror::Error;

use crate::regress::RegressError;
use crate::stats::StatsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropensityError {
    #[error("score model did not converge")]
    NotConverged,
    #[error("{n} patients cannot fill {strata} strata")]
    TooFewPatients { n: usize, strata: usize },
    #[error("scores and patients differ in number")]
    LengthMismatch,
    #[error("non-finite propensity score")]
    NonFiniteScore,
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
