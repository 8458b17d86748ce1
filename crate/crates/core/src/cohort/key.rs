use std::fmt;

/// Identifier triple of one ICU stay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatientKey {
    pub subject_id: u64,
    pub hadm_id: u64,
    pub icustay_id: u64,
}

impl PatientKey {
    /// `None` unless all three components are strictly positive.
    pub fn new(subject_id: u64, hadm_id: u64, icustay_id: u64) -> Option<Self> {
        (subject_id > 0 && hadm_id > 0 && icustay_id > 0).then_some(PatientKey { subject_id, hadm_id, icustay_id })
    }

    pub fn component(&self, c: KeyComponent) -> u64 {
        match c {
            KeyComponent::Subject => self.subject_id,
            KeyComponent::Hadm => self.hadm_id,
            KeyComponent::Icustay => self.icustay_id,
        }
    }
}

impl fmt::Display for PatientKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.subject_id, self.hadm_id, self.icustay_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KeyComponent {
    Subject,
    Hadm,
    #[default]
    Icustay,
}

impl KeyComponent {
    pub fn column(&self) -> &'static str {
        match self {
            KeyComponent::Subject => "subject_id",
            KeyComponent::Hadm => "hadm_id",
            KeyComponent::Icustay => "icustay_id",
        }
    }
}
