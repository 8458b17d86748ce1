//! Logistic and linear regression, Wald tests and stepwise selection.

mod design;
mod linear;
mod logistic;
mod model;
mod stepwise;
mod table;
mod wald;

pub use linear::{fit_linear, LinearFit};
pub use logistic::{fit_logistic, linear_predictor, predict_probability, LogitFit, LogitOptions};
pub use model::{ModelSpec, ModelTerm};
pub use stepwise::{stepwise_select, StepEntry, StepwiseOptions, StepwiseResult};
pub use table::{Table, Var};
pub use wald::{coefficient_p_values, CoefficientTest, Fit};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegressError {
    #[error("design matrix is rank deficient at term `{term}`")]
    RankDeficient { term: String },
    #[error("variable {0} not present in table")]
    MissingVariable(Var),
    #[error("column length {got} does not match table length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("duplicate model term `{0}`")]
    DuplicateTerm(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("non-finite value in column `{0}`")]
    NonFinite(String),
    #[error("fit did not converge")]
    NotConverged,
    #[error("outcome must be coded 0/1")]
    NonBinaryOutcome,
    #[error("{n} rows are too few for {p} parameters")]
    TooFewRows { n: usize, p: usize },
    #[error("no candidate covariates")]
    EmptyCandidates,
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
}
