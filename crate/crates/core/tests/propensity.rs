mod common;

use common::{refinement_cohort, REFINEMENT_START};
use obsstudy::cohort::PatientKey;
use obsstudy::propensity::{
    assess_balance, fit_propensity_model, keys, refine_model, score_from_eta, strata_outcome_table, stratify,
    stratify_group, stratum_sizes, AttemptForm, RefineOptions, BALANCE_VARS, SCORE_FLOOR,
};
use obsstudy::regress::LogitOptions;
use obsstudy::synth::{generate_study_group, SynthSpec};
use obsstudy::varprep::{LOS, MORTALITY, TREATMENT};
use proptest::prelude::*;

fn key(i: u64) -> PatientKey {
    PatientKey { subject_id: i, hadm_id: 10 * i, icustay_id: 100 * i }
}

#[test]
fn stratify_matches_sort_and_cut() {
    let scores: Vec<f64> = (0..23).map(|i| ((i * 37) % 23) as f64 / 23.0).collect();
    let ks: Vec<_> = (0..23).map(key).collect();
    let s = stratify(&scores, &ks, 5).unwrap();
    assert_eq!(s.sizes, vec![4, 4, 5, 5, 5]);
    let mut order: Vec<usize> = (0..23).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut pos = 0;
    for (q, &n) in s.sizes.iter().enumerate() {
        for &i in &order[pos..pos + n] {
            assert_eq!(s.assignment[i], q + 1);
        }
        pos += n;
    }
}

#[test]
fn ties_broken_by_key() {
    let scores = vec![0.5; 10];
    let ks: Vec<_> = (0..10).rev().map(key).collect();
    let s = stratify(&scores, &ks, 5).unwrap();
    // keys descend with index, so the last two rows hold the smallest keys
    assert_eq!(s.assignment, vec![5, 5, 4, 4, 3, 3, 2, 2, 1, 1]);
}

#[test]
fn stratify_rejects_bad_input() {
    let ks: Vec<_> = (0..3).map(key).collect();
    assert!(stratify(&[0.1, 0.2, 0.3], &ks, 5).is_err());
    assert!(stratify(&[0.1, f64::NAN, 0.3], &ks, 2).is_err());
    assert!(stratify(&[0.1, 0.2], &ks, 2).is_err());
}

#[test]
fn score_transform() {
    for eta in [-30.0, -2.0, 0.0, 1.5, 40.0] {
        let p = score_from_eta(eta);
        let want = (1.0 / (1.0 + f64::exp(-eta))).clamp(SCORE_FLOOR, 1.0 - SCORE_FLOOR);
        assert!((p - want).abs() < 1e-15);
    }
    assert_eq!(score_from_eta(-800.0), SCORE_FLOOR);
}

#[test]
fn outcome_table_matches_counts() {
    let g = generate_study_group(&SynthSpec { n: 300, seed: 4, ..SynthSpec::default() }).unwrap().0;
    let m = fit_propensity_model(&g, &"x6 + x16".parse().unwrap(), &LogitOptions::default()).unwrap();
    let s = stratify_group(&g, &m.fit, 5).unwrap();
    let rows = strata_outcome_table(&g, &s);
    assert_eq!(rows.len(), 5);
    for row in &rows {
        let mut n = [0usize; 2];
        let mut deaths = [0usize; 2];
        let mut los = [0.0; 2];
        for (i, r) in g.rows().iter().enumerate() {
            if s.assignment[i] != row.stratum {
                continue;
            }
            let arm = usize::from(r.get(TREATMENT) > 0.0);
            n[arm] += 1;
            deaths[arm] += usize::from(r.get(MORTALITY) > 0.0);
            los[arm] += r.get(LOS);
        }
        assert_eq!((row.treated.n, row.untreated.n), (n[1], n[0]));
        assert_eq!((row.treated.deaths, row.untreated.deaths), (deaths[1], deaths[0]));
        if n[1] > 0 {
            assert!((row.treated.mean_los.unwrap() - los[1] / n[1] as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn balance_report_covers_covariates() {
    let g = generate_study_group(&SynthSpec { n: 400, seed: 2, ..SynthSpec::default() }).unwrap().0;
    let m = fit_propensity_model(&g, &"x6 + x16 + x41".parse().unwrap(), &LogitOptions::default()).unwrap();
    let s = stratify_group(&g, &m.fit, 5).unwrap();
    let b = assess_balance(&g, &s).unwrap();
    assert_eq!(b.covariates.len(), BALANCE_VARS.count());
    // a covariate in the score model loses most of its imbalance
    let x6 = b.get(6).unwrap();
    assert!(x6.f_pre > 10.0 && x6.f_primary < x6.f_pre / 4.0);
    assert!(b.to_csv().lines().count() == b.covariates.len() + 1);
}

#[test]
fn refinement_adds_planted_confounder() {
    let g = refinement_cohort(3, true);
    let spec = REFINEMENT_START.parse().unwrap();
    let m = fit_propensity_model(&g, &spec, &LogitOptions::default()).unwrap();
    let s = stratify_group(&g, &m.fit, 5).unwrap();
    let r = refine_model(&g, &spec, &s, &RefineOptions::default()).unwrap();
    let x3 = r.accepted().find(|a| a.var == 3).expect("x3 accepted");
    assert_eq!(x3.form, AttemptForm::Main);
    assert!(x3.f_after.unwrap() < x3.f_before);
    assert!(r.spec.to_string().contains("x3"));
    assert_eq!(r.strat.assignment.len(), g.n());
}

#[test]
fn refinement_log_consistent() {
    let g = refinement_cohort(5, false);
    let spec = REFINEMENT_START.parse().unwrap();
    let m = fit_propensity_model(&g, &spec, &LogitOptions::default()).unwrap();
    let s = stratify_group(&g, &m.fit, 5).unwrap();
    let r = refine_model(&g, &spec, &s, &RefineOptions::default()).unwrap();
    for a in &r.log {
        if a.accepted {
            assert!(a.f_after.unwrap() < a.f_before);
        }
    }
    assert_eq!(r.log_csv().lines().count(), r.log.len() + 1);
    assert_eq!(keys(&g).len(), g.n());
}

proptest! {
    #[test]
    fn stratification_invariants(scores in prop::collection::vec(0.0f64..1.0, 5..200), k in 1usize..8) {
        prop_assume!(scores.len() >= k);
        let ks: Vec<_> = (0..scores.len() as u64).map(key).collect();
        let s = stratify(&scores, &ks, k).unwrap();
        prop_assert_eq!(s.sizes.iter().sum::<usize>(), scores.len());
        prop_assert_eq!(&s.sizes, &stratum_sizes(scores.len(), k));
        let (lo, hi) = (*s.sizes.iter().min().unwrap(), *s.sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        for w in s.ranges.windows(2) {
            prop_assert!(w[0].1 <= w[1].0);
        }
        for (i, &q) in s.assignment.iter().enumerate() {
            prop_assert!(scores[i] >= s.ranges[q - 1].0 && scores[i] <= s.ranges[q - 1].1);
        }
    }

    #[test]
    fn stratification_ignores_row_order(scores in prop::collection::vec(0.0f64..1.0, 10..80), rot in 0usize..10) {
        let ks: Vec<_> = (0..scores.len() as u64).map(key).collect();
        let a = stratify(&scores, &ks, 5).unwrap();
        let r = rot % scores.len();
        let mut s2 = scores.clone();
        let mut k2 = ks.clone();
        s2.rotate_left(r);
        k2.rotate_left(r);
        let b = stratify(&s2, &k2, 5).unwrap();
        for i in 0..scores.len() {
            prop_assert_eq!(a.assignment[(i + r) % scores.len()], b.assignment[i]);
        }
    }

    #[test]
    fn scores_inside_unit_interval(eta in -1000.0f64..1000.0) {
        let p = score_from_eta(eta);
        prop_assert!(p > 0.0 && p < 1.0);
    }
}
