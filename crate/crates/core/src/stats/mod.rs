//! Statistical kernel: summaries, ANOVA F-ratios, chi-squared and t tests,
//! and the tail probabilities behind them.

mod anova;
pub mod special;
mod summary;
mod tail;

use thiserror::Error;

pub use anova::{
    one_way_anova, two_way_anova_2xk, AnovaResult, AnovaWarning, Degeneracy, OneWayAnova, TwoWaySums,
};
pub use summary::{five_number_summary, mean, median, quantile_sorted, sample_variance, FiveNumber};
pub use tail::{critical_value, tail_probability, Distribution};
pub use tests::{chi_squared_2x2, t_test_two_sample, TTestVariant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("invalid degrees of freedom {0}")]
    InvalidDof(f64),
    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("{n} observations are too few for {groups} groups")]
    TooFewObservations { n: usize, groups: usize },
    #[error("input slices differ in length")]
    LengthMismatch,
    #[error("label {0} outside the declared range")]
    LabelOutOfRange(usize),
    #[error("every subclass lacks one treatment arm")]
    AllCellsEmptyForTreatment,
    #[error("a 2x2 table marginal is zero")]
    ZeroMarginal,
    #[error("zero variance in both samples")]
    ZeroVariance,
}

/// A test statistic with its p-value and degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub df1: f64,
    /// Denominator degrees of freedom for F statistics.
    pub df2: Option<f64>,
}
