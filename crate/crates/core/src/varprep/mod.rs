//! Daily downsampling of timelines, decision timepoints and assembly of
//! the 58-covariate study rows.

mod assemble;
mod group;
mod record;
mod series;

pub use assemble::{
    assemble_study_group, load_records, Assembly, AssemblyPolicy, Rejection, ELIXHAUSER_FLAGS, TIMELINE_EXTRACTS,
};
pub use group::{is_binary, variable_name, StudyGroup, StudyRow, BINARY_VARS, LOS, MORTALITY, TREATMENT};
pub use record::{compute_variables, fluid_features, PatientRecord};
pub use series::{
    daily_median, daily_sum, day_of, decision_timepoint, fluids_ratio, DailySeries, TimelineSeries, TimepointPolicy,
    Timepoints,
};

use thiserror::Error;

use crate::cohort::{CohortError, PatientKey};

/// Number of study covariates, x1..x58.
pub const NUM_VARS: usize = 58;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarprepError {
    #[error("invalid sample at offset {offset_hours} h: {value}")]
    InvalidSample { offset_hours: f64, value: f64 },
    #[error("day {0} is missing")]
    MissingDay(u32),
    #[error("fluid outputs sum to zero")]
    ZeroDenominator,
    #[error("duplicate patient {0}")]
    DuplicateKey(PatientKey),
    #[error("extract `{extract}` has several rows for {key}")]
    DuplicateRow { extract: String, key: PatientKey },
    #[error("patient {key}: x{var} = {value} is not -1/+1")]
    BadBinary { key: PatientKey, var: usize, value: f64 },
    #[error("stay {0} has no complete key in the stays extract")]
    UnknownStay(u64),
    #[error("joining `{extract}`: {source}")]
    Join { extract: String, source: CohortError },
    #[error(transparent)]
    Cohort(#[from] CohortError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}
