use std::collections::{BTreeMap, BTreeSet};

use crate::cohort::{sorted_merge_join, ExtractTable, Extracts, KeyComponent, PatientKey};

use super::record::{compute_variables, PatientRecord};
use super::series::{TimelineSeries, TimepointPolicy};
use super::{StudyGroup, StudyRow, VarprepError, NUM_VARS};

pub const TIMELINE_EXTRACTS: &[&str] = &["saps", "sofa", "creatinine", "abp", "map", "fluids_in", "fluids_out"];

pub const ELIXHAUSER_FLAGS: [&str; 9] = [
    "chf",
    "arrhythmia",
    "valvular",
    "hypertension",
    "diabetes_uncomplicated",
    "diabetes_complicated",
    "renal_failure",
    "liver_disease",
    "obesity",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyPolicy {
    pub timepoints: TimepointPolicy,
    /// Covariates (1-based) whose absence rejects a patient.
    pub mandatory: Vec<usize>,
}

impl Default for AssemblyPolicy {
    fn default() -> Self {
        AssemblyPolicy { timepoints: TimepointPolicy::default(), mandatory: (1..=NUM_VARS).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub key: PatientKey,
    /// First missing mandatory covariate.
    pub variable: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub group: StudyGroup,
    pub rejected: Vec<Rejection>,
}

/// Joins `table` to `ids` (ascending icustay id) and returns the matched
/// row indices per id.
fn join_rows(ids: &[PatientKey], table: &ExtractTable) -> Result<Vec<Option<Vec<usize>>>, VarprepError> {
    let values = table.keyed_rows(KeyComponent::Icustay)?;
    let joined = sorted_merge_join(ids, &values, KeyComponent::Icustay).map_err(|e| VarprepError::Join {
        extract: table.name.clone(),
        source: e,
    })?;
    Ok(joined.groups.into_iter().map(|(_, rows)| rows).collect())
}

fn single<'a>(table: &ExtractTable, rows: &'a Option<Vec<usize>>, key: PatientKey) -> Result<Option<usize>, VarprepError> {
    match rows.as_deref() {
        None => Ok(None),
        Some([r]) => Ok(Some(*r)),
        Some(_) => Err(VarprepError::DuplicateRow { extract: table.name.clone(), key }),
    }
}

fn flag(table: &ExtractTable, row: usize, col: usize) -> Result<Option<bool>, VarprepError> {
    Ok(match table.f64_at(row, col)? {
        None => None,
        Some(v) if v == 0.0 => Some(false),
        Some(v) if v == 1.0 => Some(true),
        Some(_) => {
            return Err(VarprepError::Parse {
                line: row + 2,
                message: format!("{}: `{}` must be 0 or 1", table.name, table.header[col]),
            })
        }
    })
}

/// Per-stay records for `ids` (ascending icustay id), built with one
/// merge join per extract.
pub fn load_records(extracts: &Extracts, ids: &[PatientKey]) -> Result<Vec<PatientRecord>, VarprepError> {
    let mut recs = vec![PatientRecord::default(); ids.len()];

    let demo = extracts.get("demographics")?;
    let (ca, cg, ce) = (demo.column_index("age")?, demo.column_index("gender")?, demo.column_index("ethnicity")?);
    for (i, rows) in join_rows(ids, demo)?.iter().enumerate() {
        if let Some(r) = single(demo, rows, ids[i])? {
            recs[i].age = demo.f64_at(r, ca)?;
            let g = demo.rows[r][cg].trim().to_ascii_uppercase();
            recs[i].female = match g.as_str() {
                "" => None,
                "F" | "1" => Some(true),
                "M" | "0" => Some(false),
                _ => return Err(VarprepError::Parse { line: r + 2, message: format!("demographics: gender `{g}`") }),
            };
            let e = demo.rows[r][ce].trim().to_ascii_uppercase();
            recs[i].white = (!e.is_empty()).then(|| e.contains("WHITE"));
        }
    }

    let elix = extracts.get("elixhauser")?;
    let co = elix.column_index("overall")?;
    let cf: Vec<usize> = ELIXHAUSER_FLAGS.iter().map(|f| elix.column_index(f)).collect::<Result<_, _>>()?;
    for (i, rows) in join_rows(ids, elix)?.iter().enumerate() {
        if let Some(r) = single(elix, rows, ids[i])? {
            recs[i].elixhauser_overall = elix.f64_at(r, co)?;
            let mut flags = [false; 9];
            let mut complete = true;
            for (k, &c) in cf.iter().enumerate() {
                match flag(elix, r, c)? {
                    Some(b) => flags[k] = b,
                    None => complete = false,
                }
            }
            recs[i].elixhauser_flags = complete.then_some(flags);
        }
    }

    for name in TIMELINE_EXTRACTS {
        let t = extracts.get(name)?;
        let (ch, cv) = (t.column_index("offset_hours")?, t.column_index("value")?);
        for (i, rows) in join_rows(ids, t)?.iter().enumerate() {
            let mut samples = Vec::new();
            for &r in rows.iter().flatten() {
                if let (Some(h), Some(v)) = (t.f64_at(r, ch)?, t.f64_at(r, cv)?) {
                    samples.push((h, v));
                }
            }
            let series = TimelineSeries::new(samples)?;
            let rec = &mut recs[i];
            match *name {
                "saps" => rec.saps = series,
                "sofa" => rec.sofa = series,
                "creatinine" => rec.creatinine = series,
                "abp" => rec.abp = series,
                "map" => rec.map = series,
                "fluids_in" => rec.fluids_in = series,
                _ => rec.fluids_out = series,
            }
        }
    }

    if let Ok(diu) = extracts.get("diuretics") {
        let ch = diu.column_index("offset_hours")?;
        for (i, rows) in join_rows(ids, diu)?.iter().enumerate() {
            for &r in rows.iter().flatten() {
                if let Some(h) = diu.f64_at(r, ch)? {
                    recs[i].diuretic_doses.push(h);
                }
            }
        }
    }

    for (name, column) in [("vasopressors", "given"), ("ventilation", "ventilated")] {
        let t = extracts.get(name)?;
        let c = t.column_index(column)?;
        for (i, rows) in join_rows(ids, t)?.iter().enumerate() {
            if let Some(r) = single(t, rows, ids[i])? {
                let v = flag(t, r, c)?;
                if name == "vasopressors" {
                    recs[i].vasopressors = v;
                } else {
                    recs[i].ventilation = v;
                }
            }
        }
    }

    let out = extracts.get("outcomes")?;
    let (cm, cl) = (out.column_index("died_30d")?, out.column_index("los_hours")?);
    for (i, rows) in join_rows(ids, out)?.iter().enumerate() {
        if let Some(r) = single(out, rows, ids[i])? {
            recs[i].died_30d = flag(out, r, cm)?;
            recs[i].los_hours = out.f64_at(r, cl)?;
        }
    }
    Ok(recs)
}

/// Builds the study group for the pipeline survivors. Patients lacking a
/// mandatory covariate are rejected, naming the first one missing.
pub fn assemble_study_group(
    extracts: &Extracts,
    survivors: &BTreeSet<u64>,
    policy: &AssemblyPolicy,
) -> Result<Assembly, VarprepError> {
    let keys: BTreeMap<u64, PatientKey> = extracts.get("stays")?.patient_keys()?;
    let ids: Vec<PatientKey> = survivors
        .iter()
        .map(|id| keys.get(id).copied().ok_or(VarprepError::UnknownStay(*id)))
        .collect::<Result<_, _>>()?;
    let records = load_records(extracts, &ids)?;

    let mut mandatory = policy.mandatory.clone();
    mandatory.sort();
    mandatory.dedup();
    let mut rows = Vec::new();
    let mut rejected = Vec::new();
    for (key, rec) in ids.iter().zip(&records) {
        let vals = compute_variables(rec, &policy.timepoints);
        if let Some(&var) = mandatory.iter().find(|&&i| vals[i - 1].is_none()) {
            rejected.push(Rejection { key: *key, variable: var });
            continue;
        }
        let mut x = [f64::NAN; NUM_VARS];
        for (slot, v) in x.iter_mut().zip(vals) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        rows.push(StudyRow { key: *key, x });
    }
    rows.sort_by_key(|r| r.key);
    rejected.sort_by_key(|r| r.key);
    Ok(Assembly { group: StudyGroup::new(rows)?, rejected })
}
