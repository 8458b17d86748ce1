use std::path::Path;

use crate::cohort::PatientKey;
use crate::report::{line, num, write};
use crate::varprep::{StudyGroup, StudyRow};

use super::generate::{Patient, Truth};
use super::{SynthError, SynthSpec};

/// Ground truth recorded alongside a synthetic cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub spec: SynthSpec,
    pub truth: Truth,
    pub original_count: usize,
    /// Expected survivors after each step of the built-in pipeline.
    pub step_survivors: Vec<usize>,
    pub expected_group: StudyGroup,
    /// Survivors varprep should reject, with the first missing covariate.
    pub rejections: Vec<(PatientKey, usize)>,
}

impl Manifest {
    pub(crate) fn new(spec: &SynthSpec, truth: Truth, patients: &[Patient], step_survivors: Vec<usize>) -> Result<Self, SynthError> {
        let survivors: Vec<&Patient> = patients.iter().filter(|p| p.eligible()).collect();
        let rows: Vec<StudyRow> = survivors.iter().filter(|p| !p.saps_gap).map(|p| p.expected_row()).collect();
        let rejections = survivors.iter().filter_map(|p| p.first_missing().map(|v| (p.key, v))).collect();
        Ok(Manifest {
            spec: spec.clone(),
            truth,
            original_count: patients.len(),
            step_survivors,
            expected_group: StudyGroup::new(rows)?,
            rejections,
        })
    }

    pub fn describe(&self) -> String {
        let t = &self.truth;
        let mut out = self.spec.describe();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("truth.treatment_alpha", num(t.treatment_alpha));
        for (v, b, m, sd) in &t.treatment_drivers {
            kv(&format!("truth.driver.x{v}"), format!("{} mean {} sd {}", num(*b), num(*m), num(*sd)));
        }
        kv("truth.mortality_alpha", num(t.mortality_alpha));
        kv("truth.interaction_center", num(t.interaction_center));
        kv("truth.realized_prevalence", num(t.realized_prevalence));
        kv("truth.realized_mortality", num(t.realized_mortality));
        kv("expected.original_count", self.original_count.to_string());
        kv("expected.study_group", self.expected_group.n().to_string());
        kv("expected.rejections", self.rejections.len().to_string());
        out
    }

    pub fn trace_csv(&self) -> String {
        let mut out = line(&["step", "surviving_count"]);
        for (i, c) in self.step_survivors.iter().enumerate() {
            out.push_str(&line(&[(i + 1).to_string(), c.to_string()]));
        }
        out
    }

    pub fn rejections_csv(&self) -> String {
        let mut out = line(&["subject_id", "hadm_id", "icustay_id", "variable"]);
        for (k, v) in &self.rejections {
            out.push_str(&line(&[k.subject_id.to_string(), k.hadm_id.to_string(), k.icustay_id.to_string(), format!("x{v}")]));
        }
        out
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir).map_err(|e| SynthError::Io(format!("{}: {e}", dir.display())))?;
        let io = |e: std::io::Error| SynthError::Io(e.to_string());
        write(&dir.join("manifest.txt"), &self.describe()).map_err(io)?;
        write(&dir.join("expected_trace.csv"), &self.trace_csv()).map_err(io)?;
        write(&dir.join("expected_studygroup.csv"), &self.expected_group.to_csv()).map_err(io)?;
        write(&dir.join("expected_rejections.csv"), &self.rejections_csv()).map_err(io)?;
        Ok(())
    }
}
