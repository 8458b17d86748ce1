//! Seeded synthetic cohorts with planted ground truth.
//!
//! A generated cohort exists at two levels: the flat extract files the
//! cohort stage ingests, and the study group those files should produce.
//! The generator computes the latter directly from its planned daily
//! values, so it serves as an oracle for the whole ingestion path.

mod generate;
mod manifest;
mod render;

pub use generate::{generate_patients, generate_study_group, Patient, Truth};
pub use manifest::Manifest;
pub use render::{synth_generate, SynthOutput};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Cohort(#[from] crate::cohort::CohortError),
    #[error(transparent)]
    Varprep(#[from] crate::varprep::VarprepError),
    #[error(transparent)]
    Propensity(#[from] crate::propensity::PropensityError),
    #[error("io: {0}")]
    Io(String),
}

/// Treatment assignment: logit = alpha + sum(beta * z), where z is the
/// covariate standardized over the generated cohort and alpha is solved
/// so that the expected prevalence equals `prevalence`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentSpec {
    pub prevalence: f64,
    pub drivers: Vec<(usize, f64)>,
}

/// Mortality: logit = alpha + sum(gamma * z) + treatment * d
/// + saps_interaction * d * (x5 - center), with d the 0/1 treatment
/// indicator and alpha solved for `prevalence`.
#[derive(Debug, Clone, PartialEq)]
pub struct MortalitySpec {
    pub prevalence: f64,
    pub terms: Vec<(usize, f64)>,
    pub treatment: f64,
    pub saps_interaction: f64,
    /// Defaults to the cohort mean of x5.
    pub interaction_center: Option<f64>,
}

/// LOS after the decision point, in days:
/// mean + sum(b * z) + treatment * d + shift[quintile] * d + noise.
/// Quintiles are those of the true propensity score.
#[derive(Debug, Clone, PartialEq)]
pub struct LosSpec {
    pub mean: f64,
    pub terms: Vec<(usize, f64)>,
    pub treatment: f64,
    pub quintile_shifts: [f64; 5],
    pub noise_sd: f64,
}

/// Per-stay probabilities of failing each eligibility criterion, in
/// pipeline order, plus data gaps that reject a stay during assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionSpec {
    pub missing_ids: f64,
    pub readmission: f64,
    pub short_stay: f64,
    pub minor: f64,
    pub no_sepsis: f64,
    pub comfort_only: f64,
    pub no_summary: f64,
    pub not_naive: f64,
    pub missing_extract: f64,
    /// Stays whose SAPS timeline lacks day 3.
    pub saps_gap: f64,
}

impl ExclusionSpec {
    pub fn none() -> Self {
        ExclusionSpec {
            missing_ids: 0.0,
            readmission: 0.0,
            short_stay: 0.0,
            minor: 0.0,
            no_sepsis: 0.0,
            comfort_only: 0.0,
            no_summary: 0.0,
            not_naive: 0.0,
            missing_extract: 0.0,
            saps_gap: 0.0,
        }
    }

    fn rates(&self) -> [f64; 10] {
        [
            self.missing_ids,
            self.readmission,
            self.short_stay,
            self.minor,
            self.no_sepsis,
            self.comfort_only,
            self.no_summary,
            self.not_naive,
            self.missing_extract,
            self.saps_gap,
        ]
    }
}

impl Default for ExclusionSpec {
    fn default() -> Self {
        ExclusionSpec {
            missing_ids: 0.02,
            readmission: 0.08,
            short_stay: 0.04,
            minor: 0.02,
            no_sepsis: 0.12,
            comfort_only: 0.03,
            no_summary: 0.03,
            not_naive: 0.10,
            missing_extract: 0.03,
            saps_gap: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n: usize,
    pub seed: u64,
    pub treatment: TreatmentSpec,
    pub mortality: MortalitySpec,
    pub los: LosSpec,
    /// Between-patient SD of SAPS.
    pub saps_sd: f64,
    pub exclusions: ExclusionSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 200,
            seed: 1,
            treatment: TreatmentSpec { prevalence: 0.35, drivers: vec![(6, 0.6), (16, 0.5), (41, 0.5)] },
            mortality: MortalitySpec {
                prevalence: 0.35,
                terms: vec![(6, 0.5), (11, 0.3), (2, 0.3)],
                treatment: 0.0,
                saps_interaction: -0.043,
                interaction_center: None,
            },
            los: LosSpec {
                mean: 7.4,
                terms: vec![(6, 0.8), (11, 0.5)],
                treatment: 0.0,
                quintile_shifts: [0.0; 5],
                noise_sd: 2.0,
            },
            saps_sd: 4.6,
            exclusions: ExclusionSpec::default(),
        }
    }
}

/// Covariates whose value depends on the decision day and therefore
/// cannot drive treatment assignment.
pub fn decision_dependent(i: usize) -> bool {
    matches!(i, 1 | 57 | 58) || ((5..=56).contains(&i) && !(15..=24).contains(&i) && !(45..=46).contains(&i) && {
        let base = match i {
            5..=14 => 5 + (i - 5) / 5 * 5,
            25..=44 => 25 + (i - 25) / 5 * 5,
            _ => 47 + (i - 47) / 5 * 5,
        };
        matches!(i - base, 0 | 2)
    })
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        for (name, p) in [("treatment prevalence", self.treatment.prevalence), ("mortality prevalence", self.mortality.prevalence)] {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("{name} {p} must lie in (0, 1)"));
            }
        }
        for &(v, b) in &self.treatment.drivers {
            if !(2..=56).contains(&v) || decision_dependent(v) {
                return bad(format!("x{v} cannot drive treatment"));
            }
            if !b.is_finite() {
                return bad(format!("non-finite coefficient for x{v}"));
            }
        }
        for &(v, b) in self.mortality.terms.iter().chain(&self.los.terms) {
            if !(2..=56).contains(&v) || !b.is_finite() {
                return bad(format!("bad outcome term x{v} = {b}"));
            }
        }
        if !(self.los.noise_sd >= 0.0) || !(self.saps_sd >= 0.0) || !self.los.mean.is_finite() {
            return bad("noise scales must be non-negative".into());
        }
        if self.exclusions.rates().iter().any(|r| !(0.0..1.0).contains(r)) {
            return bad("exclusion rates must lie in [0, 1)".into());
        }
        Ok(())
    }

    /// Flat `key = value` description of every planted parameter.
    pub fn describe(&self) -> String {
        use crate::report::num;
        let pairs = |v: &[(usize, f64)]| v.iter().map(|(i, b)| format!("x{i}:{}", num(*b))).collect::<Vec<_>>().join(" ");
        let e = &self.exclusions;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("n", self.n.to_string());
        kv("seed", self.seed.to_string());
        kv("saps_sd", num(self.saps_sd));
        kv("treatment.prevalence", num(self.treatment.prevalence));
        kv("treatment.drivers", pairs(&self.treatment.drivers));
        kv("mortality.prevalence", num(self.mortality.prevalence));
        kv("mortality.terms", pairs(&self.mortality.terms));
        kv("mortality.treatment", num(self.mortality.treatment));
        kv("mortality.saps_interaction", num(self.mortality.saps_interaction));
        kv("mortality.interaction_center", self.mortality.interaction_center.map_or("mean".into(), num));
        kv("los.mean", num(self.los.mean));
        kv("los.terms", pairs(&self.los.terms));
        kv("los.treatment", num(self.los.treatment));
        kv("los.quintile_shifts", self.los.quintile_shifts.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "));
        kv("los.noise_sd", num(self.los.noise_sd));
        for (name, r) in [
            "missing_ids", "readmission", "short_stay", "minor", "no_sepsis", "comfort_only", "no_summary", "not_naive",
            "missing_extract", "saps_gap",
        ]
        .iter()
        .zip(e.rates())
        {
            kv(&format!("exclusions.{name}"), num(r));
        }
        out
    }
}

pub(crate) const MAX_DECISION_DAY: u32 = 5;
