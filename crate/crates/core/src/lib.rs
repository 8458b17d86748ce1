pub mod cohort;
pub mod evoml;
pub mod linalg;
pub mod outcome;
pub mod propensity;
pub mod regress;
pub mod report;
pub mod run;
pub mod stats;
pub mod synth;
pub mod varprep;
