use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cohort::{DrugLexicon, PatientKey, MANDATORY_EXTRACTS};
use crate::propensity::stratify;
use crate::varprep::{StudyGroup, StudyRow, TimepointPolicy, NUM_VARS};

use super::{ExclusionSpec, SynthError, SynthSpec, MAX_DECISION_DAY};

/// Eligibility criteria in pipeline order.
pub(crate) const CRITERIA: usize = 8;

/// One generated ICU stay: the planned clinical record and the study row
/// it should produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Patient {
    pub key: PatientKey,
    /// `fails[k]`: fails eligibility criterion k (ids, readmission, short
    /// stay, minor, no sepsis, comfort only, no summary, not naive).
    pub fails: [bool; CRITERIA],
    /// Mandatory extract this stay is absent from.
    pub missing_extract: Option<&'static str>,
    /// SAPS timeline lacks day 3.
    pub saps_gap: bool,
    pub age: f64,
    pub female: bool,
    pub white: bool,
    pub elix_overall: f64,
    pub elix_flags: [bool; 9],
    /// Planned daily medians, day 1 first.
    pub saps: Vec<f64>,
    pub sofa: Vec<f64>,
    pub creatinine: Vec<f64>,
    pub abp: Vec<f64>,
    pub map: Vec<f64>,
    /// Three samples per day.
    pub fluids_in: Vec<[f64; 3]>,
    pub fluids_out: Vec<[f64; 3]>,
    pub vasopressors: bool,
    pub ventilation: bool,
    pub summary: Option<String>,
    pub treated: bool,
    pub doses: Vec<f64>,
    pub t1: u32,
    pub propensity: f64,
    /// True propensity quintile, 1-based.
    pub quintile: usize,
    pub died: bool,
    pub los_hours: f64,
    /// Covariates x1..x58 with every planned value present.
    pub x_full: [f64; NUM_VARS],
}

impl Patient {
    pub fn eligible(&self) -> bool {
        !self.fails.iter().any(|&f| f) && self.missing_extract.is_none()
    }

    /// First covariate the assembly stage will find missing.
    pub fn first_missing(&self) -> Option<usize> {
        self.saps_gap.then(|| if self.t1 == 3 { 7 } else { 8 })
    }

    /// The study row varprep should build for this stay.
    pub fn expected_row(&self) -> StudyRow {
        let mut x = self.x_full;
        if self.saps_gap {
            let v = saps_five(&self.saps, self.t1, true);
            x[4..9].copy_from_slice(&v);
        }
        StudyRow { key: self.key, x }
    }

    /// Days rendered into the timelines.
    pub fn days(&self) -> u32 {
        self.t1.max(4)
    }

    pub fn decision_hours(&self) -> f64 {
        self.doses.iter().copied().reduce(f64::min).unwrap_or(24.0 * (self.t1 - 1) as f64)
    }
}

/// Planted parameters resolved against the generated cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub treatment_alpha: f64,
    /// (covariate, beta per SD, mean, SD).
    pub treatment_drivers: Vec<(usize, f64, f64, f64)>,
    pub mortality_alpha: f64,
    pub interaction_center: f64,
    pub realized_prevalence: f64,
    pub realized_mortality: f64,
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (v * f).round() / f
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn pm(b: bool) -> f64 {
    if b {
        1.0
    } else {
        -1.0
    }
}

/// Solves mean(sigmoid(a + eta)) = target for a.
fn calibrate(eta: &[f64], target: f64) -> f64 {
    if eta.is_empty() {
        return (target / (1.0 - target)).ln();
    }
    let mean_p = |a: f64| eta.iter().map(|e| sigmoid(a + e)).sum::<f64>() / eta.len() as f64;
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_p(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Mean and population SD (SD 1 for constant columns).
fn moments(col: &[f64]) -> (f64, f64) {
    let n = col.len().max(1) as f64;
    let m = col.iter().sum::<f64>() / n;
    let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, if v > 0.0 { v.sqrt() } else { 1.0 })
}

fn five(daily: &[f64], t1: u32) -> [f64; 5] {
    let get = |d: u32| daily[(d - 1) as usize];
    let mean = (1..=t1).map(get).sum::<f64>() / t1 as f64;
    [mean, get(1), get(t1), get(3), get(4)]
}

fn saps_five(daily: &[f64], t1: u32, gap: bool) -> [f64; 5] {
    if !gap {
        return five(daily, t1);
    }
    let days: Vec<u32> = (1..=t1).filter(|&d| d != 3).collect();
    let mean = days.iter().map(|&d| daily[(d - 1) as usize]).sum::<f64>() / days.len() as f64;
    let get = |d: u32| if d == 3 { f64::NAN } else { daily[(d - 1) as usize] };
    [mean, get(1), get(t1), get(3), get(4)]
}

fn day_totals(samples: &[[f64; 3]]) -> Vec<f64> {
    samples.iter().map(|s| s[0] + s[1] + s[2]).collect()
}

fn covariates(p: &Patient) -> [f64; NUM_VARS] {
    let mut x = [f64::NAN; NUM_VARS];
    let t1 = p.t1;
    x[0] = pm(p.treated);
    x[1] = p.age;
    x[2] = pm(p.female);
    x[3] = pm(p.white);
    for (base, daily) in [(5, &p.saps), (10, &p.sofa), (25, &p.creatinine), (47, &p.abp), (52, &p.map)] {
        x[base - 1..base + 4].copy_from_slice(&five(daily, t1));
    }
    x[14] = p.elix_overall;
    for k in 0..9 {
        x[15 + k] = pm(p.elix_flags[k]);
    }
    let fin = five(&day_totals(&p.fluids_in), t1);
    let fout = five(&day_totals(&p.fluids_out), t1);
    for k in 0..5 {
        x[29 + k] = fin[k];
        x[34 + k] = fout[k];
        x[39 + k] = fin[k] - fout[k];
    }
    x[44] = pm(p.vasopressors);
    x[45] = pm(p.ventilation);
    x
}

const ELIX_INTERCEPTS: [f64; 9] = [-1.5, -1.3, -2.2, -0.3, -1.2, -2.5, -1.8, -2.5, -2.5];
const DOSE_DAY_WEIGHTS: [f64; MAX_DECISION_DAY as usize] = [0.35, 0.3, 0.2, 0.1, 0.05];
const OTHER_ETHNICITIES: [&str; 3] = ["BLACK/AFRICAN AMERICAN", "HISPANIC OR LATINO", "ASIAN"];

fn summary_text(rng: &mut ChaCha8Rng, naive: bool, drugs: &[String]) -> String {
    let heading = ["Medications on Admission:", "MEDICATIONS ON ADMISSION:", "Drugs on admission:"][rng.random_range(0..3)];
    let home = if naive {
        "Aspirin 81 mg daily\nMetoprolol 25 mg twice daily".to_string()
    } else {
        let d = &drugs[rng.random_range(0..drugs.len())];
        format!("Aspirin 81 mg daily\n{d} 20 mg daily")
    };
    format!(
        "Admission Date: [**2101-1-1**]\nHistory of Present Illness:\nFever and hypotension.\n{heading}\n{home}\n\nDischarge Medications:\nFurosemide 40 mg daily\n"
    )
}

struct Raw {
    patient: Patient,
    u_treat: f64,
    u_death: f64,
    z_los: f64,
    dose_day: u32,
    dose_hours: Vec<f64>,
}

fn draw_patient(i: usize, spec: &SynthSpec, ex: &ExclusionSpec, drugs: &[String], rng: &mut ChaCha8Rng) -> Raw {
    let mut n = || rng.sample::<f64, _>(StandardNormal);
    let (sev, com) = (n(), n());
    let e: Vec<f64> = (0..10).map(|_| n()).collect();
    let rates = [
        ex.missing_ids, ex.readmission, ex.short_stay, ex.minor, ex.no_sepsis, ex.comfort_only, ex.no_summary,
        ex.not_naive,
    ];
    let mut fails = [false; CRITERIA];
    for (f, r) in fails.iter_mut().zip(rates) {
        *f = rng.random::<f64>() < r;
    }
    let missing_extract = (rng.random::<f64>() < ex.missing_extract)
        .then(|| MANDATORY_EXTRACTS[rng.random_range(0..MANDATORY_EXTRACTS.len())]);
    let saps_gap = rng.random::<f64>() < ex.saps_gap;

    let age = if fails[3] {
        rng.random_range(1..=17) as f64
    } else {
        (62.0 + 16.0 * (0.5 * com + 0.87 * e[0])).clamp(18.0, 99.0).round()
    };
    let female = rng.random::<f64>() < 0.45;
    let white = rng.random::<f64>() < 0.7;
    let elix_overall = (4.0 + 3.0 * (0.8 * com + 0.6 * e[1])).round();
    let mut elix_flags = [false; 9];
    for (f, a) in elix_flags.iter_mut().zip(ELIX_INTERCEPTS) {
        *f = rng.random::<f64>() < sigmoid(a + 0.9 * com);
    }

    let days = MAX_DECISION_DAY as usize;
    let saps_base = 15.8 + spec.saps_sd * (0.85 * sev + 0.527 * e[2]);
    let sofa_base = 8.3 + 3.0 * (0.75 * sev + 0.66 * e[3]);
    let creat_base = 1.8 * (0.4 * (0.5 * sev + 0.4 * com + 0.77 * e[4])).exp();
    let abp_base = 115.0 - 10.0 * (0.6 * sev + 0.8 * e[5]);
    let map_base = 75.0 - 7.0 * (0.6 * sev + 0.8 * e[6]);
    let fin_base = 1.7 + 0.5 * (0.6 * sev + 0.8 * e[7]);
    let fout_base = 1.5 + 0.4 * (-0.4 * sev + 0.9 * e[8]);
    let mut series = |base: f64, sd: f64, lo: f64, dec: i32| -> Vec<f64> {
        (0..days).map(|_| round_to((base + sd * rng.sample::<f64, _>(StandardNormal)).max(lo), dec)).collect()
    };
    let saps = series(saps_base, 1.0, 0.0, 1);
    let sofa = series(sofa_base, 0.8, 0.0, 1);
    let creatinine = series(creat_base, 0.15, 0.2, 2);
    let abp = series(abp_base, 5.0, 40.0, 1);
    let map = series(map_base, 4.0, 30.0, 1);
    let mut fluids = |base: f64| -> Vec<[f64; 3]> {
        (0..days)
            .map(|_| {
                let per = base.max(0.15) / 3.0;
                let mut s = [0.0; 3];
                for v in &mut s {
                    *v = round_to((per + 0.08 * rng.sample::<f64, _>(StandardNormal)).max(0.02), 3);
                }
                s
            })
            .collect()
    };
    let fluids_in = fluids(fin_base);
    let fluids_out = fluids(fout_base);
    let vasopressors = rng.random::<f64>() < sigmoid(-0.8 + 1.2 * sev);
    let ventilation = rng.random::<f64>() < sigmoid(0.2 + 1.0 * sev);
    let summary = (!fails[6]).then(|| summary_text(rng, !fails[7], drugs));

    let mut pick = rng.random::<f64>();
    let mut dose_day = MAX_DECISION_DAY;
    for (d, w) in DOSE_DAY_WEIGHTS.iter().enumerate() {
        if pick < *w {
            dose_day = d as u32 + 1;
            break;
        }
        pick -= w;
    }
    let first = 24.0 * (dose_day - 1) as f64 + round_to(rng.random_range(0.5..23.0), 2);
    let extra = rng.random_range(0..3);
    let mut dose_hours = vec![first];
    for k in 0..extra {
        dose_hours.push(round_to(first + 12.0 * (k + 1) as f64 + rng.random_range(0.0..6.0), 2));
    }
    let (u_treat, u_death, z_los) = (rng.random::<f64>(), rng.random::<f64>(), rng.sample::<f64, _>(StandardNormal));

    let id = i as u64 + 1;
    let key = PatientKey { subject_id: 10_000 + 7 * id, hadm_id: 50_000 + 3 * id, icustay_id: 200_000 + id };
    let patient = Patient {
        key,
        fails,
        missing_extract,
        saps_gap,
        age,
        female,
        white,
        elix_overall,
        elix_flags,
        saps,
        sofa,
        creatinine,
        abp,
        map,
        fluids_in,
        fluids_out,
        vasopressors,
        ventilation,
        summary,
        treated: false,
        doses: Vec::new(),
        t1: TimepointPolicy::default().default_untreated,
        propensity: 0.0,
        quintile: 0,
        died: false,
        los_hours: 0.0,
        x_full: [f64::NAN; NUM_VARS],
    };
    Raw { patient, u_treat, u_death, z_los, dose_day, dose_hours }
}

fn linear_part(xs: &[[f64; NUM_VARS]], terms: &[(usize, f64)]) -> (Vec<f64>, Vec<(usize, f64, f64, f64)>) {
    let mut eta = vec![0.0; xs.len()];
    let mut resolved = Vec::new();
    for &(v, b) in terms {
        let col: Vec<f64> = xs.iter().map(|x| x[v - 1]).collect();
        let (m, sd) = moments(&col);
        for (e, c) in eta.iter_mut().zip(&col) {
            *e += b * (c - m) / sd;
        }
        resolved.push((v, b, m, sd));
    }
    (eta, resolved)
}

/// Every generated stay, eligible or not, with planted treatment and
/// outcomes.
pub fn generate_patients(spec: &SynthSpec) -> Result<(Vec<Patient>, Truth), SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let drugs: Vec<String> = DrugLexicon::default().entries().filter(|d| d.len() > 3 && d.chars().all(|c| c.is_ascii_alphabetic())).map(capitalize).collect();
    let mut raws: Vec<Raw> = (0..spec.n).map(|i| draw_patient(i, spec, &spec.exclusions, &drugs, &mut rng)).collect();

    // treatment from decision-independent covariates
    let pre: Vec<[f64; NUM_VARS]> = raws.iter().map(|r| covariates(&r.patient)).collect();
    let (eta_t, drivers) = linear_part(&pre, &spec.treatment.drivers);
    let alpha_t = calibrate(&eta_t, spec.treatment.prevalence);
    let policy = TimepointPolicy::default();
    for (r, e) in raws.iter_mut().zip(&eta_t) {
        let p = &mut r.patient;
        p.propensity = sigmoid(alpha_t + e);
        p.treated = r.u_treat < p.propensity;
        if p.treated {
            p.t1 = r.dose_day;
            p.doses = r.dose_hours.clone();
        } else {
            p.t1 = policy.default_untreated;
        }
        p.x_full = covariates(p);
    }
    if spec.n >= 5 {
        let scores: Vec<f64> = raws.iter().map(|r| r.patient.propensity).collect();
        let keys: Vec<PatientKey> = raws.iter().map(|r| r.patient.key).collect();
        let strat = stratify(&scores, &keys, 5)?;
        for (r, q) in raws.iter_mut().zip(&strat.assignment) {
            r.patient.quintile = *q;
        }
    }

    let xs: Vec<[f64; NUM_VARS]> = raws.iter().map(|r| r.patient.x_full).collect();
    let m = &spec.mortality;
    let center = m.interaction_center.unwrap_or_else(|| moments(&xs.iter().map(|x| x[4]).collect::<Vec<_>>()).0);
    let (mut eta_m, _) = linear_part(&xs, &m.terms);
    for (e, x) in eta_m.iter_mut().zip(&xs) {
        let d = if x[0] > 0.0 { 1.0 } else { 0.0 };
        *e += m.treatment * d + m.saps_interaction * d * (x[4] - center);
    }
    let alpha_m = calibrate(&eta_m, m.prevalence);
    let (eta_l, _) = linear_part(&xs, &spec.los.terms);
    for ((r, em), el) in raws.iter_mut().zip(&eta_m).zip(&eta_l) {
        let p = &mut r.patient;
        p.died = r.u_death < sigmoid(alpha_m + em);
        let d = if p.treated { 1.0 } else { 0.0 };
        let shift = if p.quintile > 0 { spec.los.quintile_shifts[p.quintile - 1] } else { 0.0 };
        let days = spec.los.mean + el + d * (spec.los.treatment + shift) + spec.los.noise_sd * r.z_los;
        let decision = p.decision_hours();
        p.los_hours = round_to(decision + 24.0 * days.max(0.05), 2);
        p.x_full[56] = pm(p.died);
        p.x_full[57] = ((p.los_hours - decision) / 24.0).max(0.0);
    }

    let patients: Vec<Patient> = raws.into_iter().map(|r| r.patient).collect();
    let n = patients.len().max(1) as f64;
    let truth = Truth {
        treatment_alpha: alpha_t,
        treatment_drivers: drivers,
        mortality_alpha: alpha_m,
        interaction_center: center,
        realized_prevalence: patients.iter().filter(|p| p.treated).count() as f64 / n,
        realized_mortality: patients.iter().filter(|p| p.died).count() as f64 / n,
    };
    Ok((patients, truth))
}

pub(crate) fn ethnicity(i: usize) -> String {
    OTHER_ETHNICITIES[i % OTHER_ETHNICITIES.len()].to_string()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map_or(String::new(), |f| f.to_uppercase().collect::<String>() + c.as_str())
}

/// Study group of `spec.n` patients generated directly, with every stay
/// eligible and complete.
pub fn generate_study_group(spec: &SynthSpec) -> Result<(StudyGroup, Vec<Patient>, Truth), SynthError> {
    let spec = SynthSpec { exclusions: ExclusionSpec::none(), ..spec.clone() };
    let (patients, truth) = generate_patients(&spec)?;
    let group = StudyGroup::new(patients.iter().map(Patient::expected_row).collect())?;
    Ok((group, patients, truth))
}
