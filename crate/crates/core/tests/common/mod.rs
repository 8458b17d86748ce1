//! Independent oracles and planted scenarios shared by the integration
//! tests and the acceptance harness.

#![allow(dead_code)]

use std::path::PathBuf;

use obsstudy::propensity::{
    fit_propensity_model, propensity_scores, select_propensity_model, stratify_group, treatment_design,
};
use obsstudy::regress::{LogitOptions, StepwiseOptions};
use obsstudy::synth::{generate_study_group, SynthSpec};
use obsstudy::varprep::StudyGroup;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/extracts")
}

// ---------------------------------------------------------------------------
// Quadrature tail oracles. Gamma values come from exact recurrences on
// integer and half-integer arguments, so nothing is shared with the
// library's special functions.

/// ln Gamma(x) for x a positive multiple of 1/2.
pub fn ln_gamma_half(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    assert!(twice >= 1 && (2.0 * x - twice as f64).abs() < 1e-12, "ln_gamma_half({x})");
    let (mut g, mut a) = if twice % 2 == 0 { (0.0, 1.0) } else { (0.5 * std::f64::consts::PI.ln(), 0.5) };
    while a < x - 1e-9 {
        g += f64::ln(a);
        a += 1.0;
    }
    g
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over [a, b].
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, f1, fm) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            simpson(f, x0, x1, f0, fm, f1, whole, 1e-14, 40)
        })
        .sum()
}

/// Upper tail of chi-squared(k) at x, via t = u^2.
pub fn chi2_tail_oracle(k: f64, x: f64) -> f64 {
    let c = 2.0 * (-(k / 2.0) * 2f64.ln() - ln_gamma_half(k / 2.0)).exp();
    let g = move |u: f64| c * u.powf(k - 1.0) * (-u * u / 2.0).exp();
    let lo = x.max(0.0).sqrt();
    integrate(&g, lo, lo + 60.0)
}

/// Two-sided Student t(nu) tail at |t|, via x = sqrt(nu) tan(theta).
pub fn t_two_sided_oracle(nu: f64, t: f64) -> f64 {
    let c = (ln_gamma_half((nu + 1.0) / 2.0) - ln_gamma_half(nu / 2.0)).exp() / (nu * std::f64::consts::PI).sqrt();
    let g = move |th: f64| c * nu.sqrt() * th.cos().powf(nu - 1.0);
    let lo = (t.abs() / nu.sqrt()).atan();
    2.0 * integrate(&g, lo, std::f64::consts::FRAC_PI_2)
}

/// Upper tail of F(d1, d2) at f, via the beta variable b = sin^2(phi).
pub fn f_tail_oracle(d1: f64, d2: f64, f: f64) -> f64 {
    let (a, c) = (d1 / 2.0, d2 / 2.0);
    let beta = (ln_gamma_half(a) + ln_gamma_half(c) - ln_gamma_half(a + c)).exp();
    let g = move |phi: f64| 2.0 * phi.sin().powf(2.0 * a - 1.0) * phi.cos().powf(2.0 * c - 1.0) / beta;
    let b = d1 * f / (d1 * f + d2);
    integrate(&g, b.sqrt().asin(), std::f64::consts::FRAC_PI_2)
}

// ---------------------------------------------------------------------------
// Brute-force 2 x K unweighted-means ANOVA, written from the textbook
// table layout: explicit cell lists, a 2 x K matrix of cell means,
// harmonic-mean cell size, and each SS computed as its own double sum.

pub struct AnovaOracle {
    pub f_primary: f64,
    pub f_secondary: f64,
}

pub fn anova_oracle(values: &[f64], treated: &[bool], subclass: &[usize], k: usize) -> AnovaOracle {
    let mut cells: Vec<[Vec<f64>; 2]> = (0..k).map(|_| [Vec::new(), Vec::new()]).collect();
    for i in 0..values.len() {
        cells[subclass[i] - 1][usize::from(treated[i])].push(values[i]);
    }
    let cells: Vec<[Vec<f64>; 2]> = cells.into_iter().filter(|c| !c[0].is_empty() && !c[1].is_empty()).collect();
    let kk = cells.len();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    // table[r][c]: r = arm, c = subclass
    let mut table = [vec![0.0; kk], vec![0.0; kk]];
    let mut recip = 0.0;
    for (c, cell) in cells.iter().enumerate() {
        for r in 0..2 {
            table[r][c] = mean(&cell[r]);
            recip += 1.0 / cell[r].len() as f64;
        }
    }
    let nh = (2 * kk) as f64 / recip;
    let grand: f64 = table.iter().flatten().sum::<f64>() / (2 * kk) as f64;
    let mut ss_rows = 0.0;
    for row in &table {
        let rm = row.iter().sum::<f64>() / kk as f64;
        ss_rows += kk as f64 * (rm - grand).powi(2);
    }
    ss_rows *= nh;
    let mut ss_cols = 0.0;
    for c in 0..kk {
        let cm = (table[0][c] + table[1][c]) / 2.0;
        ss_cols += 2.0 * (cm - grand).powi(2);
    }
    ss_cols *= nh;
    let mut ss_cells = 0.0;
    for row in &table {
        for &m in row {
            ss_cells += (m - grand).powi(2);
        }
    }
    ss_cells *= nh;
    let ss_inter = ss_cells - ss_rows - ss_cols;
    let mut ss_within = 0.0;
    let mut n = 0usize;
    for cell in &cells {
        for arm in cell {
            let m = mean(arm);
            for x in arm {
                ss_within += (x - m).powi(2);
            }
            n += arm.len();
        }
    }
    let ms_within = ss_within / (n - 2 * kk) as f64;
    AnovaOracle { f_primary: ss_rows / ms_within, f_secondary: (ss_inter / (kk - 1) as f64) / ms_within }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

// ---------------------------------------------------------------------------
// Planted scenarios.

/// Confounded cohort for the balance criterion: the default generator,
/// treatment driven by three covariates.
pub fn balance_cohort(seed: u64) -> StudyGroup {
    let spec = SynthSpec { n: 1522, seed, ..SynthSpec::default() };
    generate_study_group(&spec).unwrap().0
}

/// Cohort where x3 drives treatment but is left out of the score model.
pub fn refinement_cohort(seed: u64, planted: bool) -> StudyGroup {
    let mut spec = SynthSpec { n: 1522, seed, ..SynthSpec::default() };
    spec.treatment.drivers = if planted { vec![(6, 0.6), (16, 0.5), (3, 0.6)] } else { vec![(6, 0.6), (16, 0.5)] };
    generate_study_group(&spec).unwrap().0
}

pub const REFINEMENT_START: &str = "x6 + x16";

/// Outcome-workflow cohort: +2.6 days LOS for treated patients and the
/// treatment x SAPS mortality interaction with no treatment main effect.
pub fn outcome_cohort(seed: u64) -> StudyGroup {
    let mut spec = SynthSpec { n: 1500, seed, saps_sd: 8.0, ..SynthSpec::default() };
    spec.treatment.prevalence = 0.5;
    spec.los.treatment = 2.6;
    generate_study_group(&spec).unwrap().0
}

/// Propensity scores of the stepwise score model, as the outcome models
/// use them.
pub fn stepwise_scores(group: &StudyGroup) -> Vec<f64> {
    let model = select_propensity_model(group, &StepwiseOptions::default()).unwrap();
    propensity_scores(&model.fit, &treatment_design(group).0).unwrap()
}

/// LOS shifted for treated patients in true quintiles 1, 3 and 5 only.
pub fn stratified_cohort(seed: u64) -> StudyGroup {
    let mut spec = SynthSpec { n: 1522, seed, ..SynthSpec::default() };
    spec.treatment.prevalence = 0.5;
    for d in &mut spec.treatment.drivers {
        d.1 *= 1.5;
    }
    spec.los.terms.clear();
    spec.los.quintile_shifts = [2.0, 0.0, 2.0, 0.0, 2.0];
    generate_study_group(&spec).unwrap().0
}

pub const STRATIFIED_SCORE_MODEL: &str = "x6 + x16 + x41";

pub fn correct_model_strata(group: &StudyGroup, spec: &str) -> obsstudy::propensity::Stratification {
    let m = fit_propensity_model(group, &spec.parse().unwrap(), &LogitOptions::default()).unwrap();
    stratify_group(group, &m.fit, 5).unwrap()
}
