use std::collections::BTreeSet;
use std::path::Path;

use crate::cohort::{ExtractTable, Extracts, MANDATORY_EXTRACTS};
use crate::report::num;
use crate::varprep::ELIXHAUSER_FLAGS;

use super::generate::{generate_patients, Patient, Truth};
use super::manifest::Manifest;
use super::{SynthError, SynthSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub extracts: Extracts,
    pub manifest: Manifest,
}

impl SynthOutput {
    /// Extract CSVs into `dir` and the manifest files into `dir/manifest`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), SynthError> {
        self.extracts.write_dir(dir)?;
        self.manifest.write_dir(&dir.join("manifest"))
    }
}

fn table(name: &str, cols: &[&str]) -> ExtractTable {
    ExtractTable::new(name, cols.iter().map(|c| c.to_string()).collect())
}

fn bit(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// Sample offsets within a day, hours.
const SLOTS: [f64; 3] = [2.5, 9.75, 17.25];

fn push_timeline(t: &mut ExtractTable, p: &Patient, daily: &[f64], spread: f64, skip_day3: bool) {
    for d in 1..=p.days() {
        if skip_day3 && d == 3 {
            continue;
        }
        let v = daily[(d - 1) as usize];
        let base = 24.0 * (d - 1) as f64;
        for (slot, value) in SLOTS.iter().zip([v - spread, v + spread, v]) {
            t.rows.push(vec![p.key.icustay_id.to_string(), num(base + slot), num(value)]);
        }
    }
}

fn push_fluids(t: &mut ExtractTable, p: &Patient, samples: &[[f64; 3]]) {
    for d in 1..=p.days() {
        let base = 24.0 * (d - 1) as f64;
        for (slot, value) in SLOTS.iter().zip(samples[(d - 1) as usize]) {
            t.rows.push(vec![p.key.icustay_id.to_string(), num(base + slot), num(value)]);
        }
    }
}

fn render(patients: &[Patient]) -> Extracts {
    let mut stays = table("stays", &["subject_id", "hadm_id", "icustay_id", "n_admissions", "full_days", "age", "sepsis", "cmo"]);
    let mut summaries = table("summaries", &["icustay_id", "text"]);
    let mut demo = table("demographics", &["icustay_id", "age", "gender", "ethnicity"]);
    let mut elix_cols = vec!["icustay_id", "overall"];
    elix_cols.extend(ELIXHAUSER_FLAGS);
    let mut elix = table("elixhauser", &elix_cols);
    let timeline = |name: &str| table(name, &["icustay_id", "offset_hours", "value"]);
    let (mut saps, mut sofa, mut creat, mut abp, mut map) =
        (timeline("saps"), timeline("sofa"), timeline("creatinine"), timeline("abp"), timeline("map"));
    let (mut fin, mut fout) = (timeline("fluids_in"), timeline("fluids_out"));
    let mut diu = table("diuretics", &["icustay_id", "offset_hours", "dose"]);
    let mut vaso = table("vasopressors", &["icustay_id", "given"]);
    let mut vent = table("ventilation", &["icustay_id", "ventilated"]);
    let mut outcomes = table("outcomes", &["icustay_id", "died_30d", "los_hours"]);

    for (i, p) in patients.iter().enumerate() {
        let id = p.key.icustay_id.to_string();
        let has = |name: &str| p.missing_extract != Some(name);
        stays.rows.push(vec![
            p.key.subject_id.to_string(),
            if p.fails[0] { String::new() } else { p.key.hadm_id.to_string() },
            id.clone(),
            if p.fails[1] { (2 + i % 2).to_string() } else { "1".into() },
            if p.fails[2] { "0".into() } else { ((p.los_hours / 24.0).floor() as u64).max(1).to_string() },
            num(p.age),
            bit(!p.fails[4]),
            bit(p.fails[5]),
        ]);
        if let Some(text) = &p.summary {
            summaries.rows.push(vec![id.clone(), text.clone()]);
        }
        if has("demographics") {
            let eth = if p.white { "WHITE".to_string() } else { super::generate::ethnicity(i) };
            demo.rows.push(vec![id.clone(), num(p.age), if p.female { "F" } else { "M" }.into(), eth]);
        }
        if has("elixhauser") {
            let mut row = vec![id.clone(), num(p.elix_overall)];
            row.extend(p.elix_flags.iter().map(|&b| bit(b)));
            elix.rows.push(row);
        }
        if has("saps") {
            push_timeline(&mut saps, p, &p.saps, 1.0, p.saps_gap);
        }
        for (name, t, daily, spread) in [
            ("sofa", &mut sofa, &p.sofa, 0.5),
            ("creatinine", &mut creat, &p.creatinine, 0.05),
            ("abp", &mut abp, &p.abp, 3.0),
            ("map", &mut map, &p.map, 2.0),
        ] {
            if has(name) {
                push_timeline(t, p, daily, spread, false);
            }
        }
        if has("fluids_in") {
            push_fluids(&mut fin, p, &p.fluids_in);
        }
        if has("fluids_out") {
            push_fluids(&mut fout, p, &p.fluids_out);
        }
        for &h in &p.doses {
            diu.rows.push(vec![id.clone(), num(h), "40".into()]);
        }
        if has("vasopressors") {
            vaso.rows.push(vec![id.clone(), bit(p.vasopressors)]);
        }
        if has("ventilation") {
            vent.rows.push(vec![id.clone(), bit(p.ventilation)]);
        }
        if has("outcomes") {
            outcomes.rows.push(vec![id.clone(), bit(p.died), num(p.los_hours)]);
        }
    }
    let mut ex = Extracts::default();
    for t in [stays, summaries, demo, elix, saps, sofa, creat, abp, map, fin, fout, diu, vaso, vent, outcomes] {
        ex.insert(t);
    }
    ex
}

/// Expected survivor counts of the built-in pipeline, computed from the
/// planted eligibility flags.
fn expected_trace(patients: &[Patient]) -> Vec<usize> {
    let set = |f: &dyn Fn(&Patient) -> bool| -> BTreeSet<u64> {
        patients.iter().filter(|p| f(p)).map(|p| p.key.icustay_id).collect()
    };
    let and = |a: &BTreeSet<u64>, b: &BTreeSet<u64>| -> BTreeSet<u64> { a.intersection(b).copied().collect() };
    let mut counts = Vec::new();
    let mut current = set(&|p| !p.fails[0]);
    counts.push(current.len());
    for k in 1..CRITERIA_EXTRACTS {
        let s = if k == 7 { set(&|p| !p.fails[6] && !p.fails[7]) } else { set(&|p| !p.fails[k]) };
        counts.push(s.len());
        current = and(&current, &s);
        counts.push(current.len());
    }
    let complete = set(&|p| MANDATORY_EXTRACTS.iter().all(|e| p.missing_extract != Some(e)));
    counts.push(and(&current, &complete).len());
    counts
}

const CRITERIA_EXTRACTS: usize = 8;

/// Extract files plus a manifest of planted parameters, expected filter
/// survivors and expected study rows.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    let (patients, truth): (Vec<Patient>, Truth) = generate_patients(spec)?;
    let extracts = render(&patients);
    let trace = expected_trace(&patients);
    let manifest = Manifest::new(spec, truth, &patients, trace)?;
    Ok(SynthOutput { extracts, manifest })
}
