use std::collections::BTreeMap;
use std::path::PathBuf;

use obsstudy::cohort::{default_pipeline, run_filter_pipeline, Extracts, PipelineContext};
use obsstudy::synth::{generate_study_group, synth_generate, ExclusionSpec, SynthSpec};
use obsstudy::varprep::{
    assemble_study_group, compute_variables, daily_median, daily_sum, decision_timepoint, fluids_ratio,
    AssemblyPolicy, DailySeries, PatientRecord, StudyGroup, TimelineSeries, TimepointPolicy, VarprepError,
    BINARY_VARS,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/extracts")
}

fn fixture_group() -> StudyGroup {
    let ex = Extracts::read_dir(&fixture_dir()).unwrap();
    let out = run_filter_pipeline(&ex, &default_pipeline(), &PipelineContext::default()).unwrap();
    assemble_study_group(&ex, &out.survivors, &AssemblyPolicy::default()).unwrap().group
}

fn random_samples(rng: &mut ChaCha8Rng, n: usize, days: u32) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| (rng.random_range(0.0..24.0 * days as f64), (rng.random_range(-50.0..50.0f64) * 4.0).round() / 4.0))
        .collect()
}

fn oracle_by_day(samples: &[(f64, f64)]) -> BTreeMap<u32, Vec<f64>> {
    let mut m: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for &(h, v) in samples {
        let mut d = 1;
        while h >= 24.0 * d as f64 {
            d += 1;
        }
        m.entry(d).or_default().push(v);
    }
    m
}

#[test]
fn daily_median_matches_sort_and_pick() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let s = random_samples(&mut rng, 500, 7);
        let got = daily_median(&TimelineSeries::new(s.clone()).unwrap());
        let want = oracle_by_day(&s);
        assert_eq!(got.days().count(), want.len());
        for (d, mut v) in want {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let m = if v.len() % 2 == 1 { v[v.len() / 2] } else { (v[v.len() / 2 - 1] + v[v.len() / 2]) / 2.0 };
            assert_eq!(got.get(d), Some(m), "day {d}");
        }
    }
}

#[test]
fn daily_sum_matches_accumulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let s = random_samples(&mut rng, 300, 6);
        let got = daily_sum(&TimelineSeries::new(s.clone()).unwrap());
        for (d, v) in oracle_by_day(&s) {
            let want: f64 = v.iter().sum();
            assert!((got.get(d).unwrap() - want).abs() < 1e-9);
        }
    }
    assert!(daily_sum(&TimelineSeries::default()).is_empty());
}

#[test]
fn fluids_ratio_matches_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let days = 6u32;
        let ins: BTreeMap<u32, f64> = (1..=days).map(|d| (d, rng.random_range(0.1..5.0))).collect();
        let outs: BTreeMap<u32, f64> = (1..=days).map(|d| (d, rng.random_range(0.1..5.0))).collect();
        let (i, o) = (DailySeries::from_map(ins.clone()), DailySeries::from_map(outs.clone()));
        for t in 2..=days {
            let want = (ins[&(t - 1)] + ins[&t]) / (outs[&(t - 1)] + outs[&t]);
            assert_eq!(fluids_ratio(&i, &o, t).unwrap(), want);
        }
    }
}

#[test]
fn fluids_ratio_errors() {
    let i = DailySeries::from_map([(1, 1.0), (2, 1.0)].into());
    let zero = DailySeries::from_map([(1, 0.0), (2, 0.0)].into());
    let gap = DailySeries::from_map([(2, 1.0)].into());
    assert_eq!(fluids_ratio(&i, &zero, 2), Err(VarprepError::ZeroDenominator));
    assert_eq!(fluids_ratio(&i, &gap, 2), Err(VarprepError::MissingDay(1)));
    assert_eq!(fluids_ratio(&i, &i, 2), Ok(1.0));
}

#[test]
fn decision_timepoint_defaults() {
    assert_eq!(decision_timepoint(Some(2), 4), 2);
    assert_eq!(decision_timepoint(None, 4), 4);
    assert_eq!(decision_timepoint(None, 5), 5);
    assert_eq!(TimepointPolicy::default().timepoints(None).t1, 4);
}

#[test]
fn fixture_rows_satisfy_invariants() {
    let g = fixture_group();
    assert!(g.n() > 50);
    assert_eq!(g.n(), g.n_treated() + g.n_untreated());
    for r in g.rows() {
        for k in 0..5 {
            let bal = r.get(40 + k);
            assert!((bal - (r.get(30 + k) - r.get(35 + k))).abs() < 1e-9);
        }
        for &b in BINARY_VARS {
            assert!(r.get(b) == 1.0 || r.get(b) == -1.0);
        }
        assert!(r.get(58) >= 0.0);
    }
    let keys: Vec<_> = g.rows().iter().map(|r| r.key).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(keys, sorted);
}

#[test]
fn studygroup_csv_roundtrip() {
    let g = fixture_group();
    let again = StudyGroup::parse_csv(&g.to_csv()).unwrap();
    assert_eq!(again.to_csv(), g.to_csv());
    assert_eq!(again.n(), g.n());
}

#[test]
fn planted_patients_match_field_by_field() {
    let spec = SynthSpec { n: 50, seed: 5, exclusions: ExclusionSpec::none(), ..SynthSpec::default() };
    let (expected, _, _) = generate_study_group(&spec).unwrap();
    let out = synth_generate(&spec).unwrap();
    let pipe = run_filter_pipeline(&out.extracts, &default_pipeline(), &PipelineContext::default()).unwrap();
    let got = assemble_study_group(&out.extracts, &pipe.survivors, &AssemblyPolicy::default()).unwrap();
    assert!(got.rejected.is_empty());
    assert_eq!(got.group.n(), expected.n());
    for (a, b) in got.group.rows().iter().zip(expected.rows()) {
        assert_eq!(a.key, b.key);
        for i in 1..=58 {
            assert!((a.get(i) - b.get(i)).abs() < 1e-9, "{} x{i}: {} vs {}", a.key, a.get(i), b.get(i));
        }
    }
}

#[test]
fn mandatory_list_controls_rejection() {
    let rec = PatientRecord { age: Some(70.0), ..Default::default() };
    let x = compute_variables(&rec, &TimepointPolicy::default());
    assert_eq!(x[1], Some(70.0));
    assert_eq!(x[4], None);
}

proptest! {
    #[test]
    fn averaging_window_within_daily_range(
        vals in prop::collection::vec(0.0f64..40.0, 6),
        first_dose_day in prop::option::of(1u32..=5),
    ) {
        let samples: Vec<(f64, f64)> = vals.iter().enumerate().map(|(d, &v)| (24.0 * d as f64 + 5.0, v)).collect();
        let doses = first_dose_day.map(|d| vec![24.0 * (d - 1) as f64 + 1.0]).unwrap_or_default();
        let rec = PatientRecord { saps: TimelineSeries::new(samples).unwrap(), diuretic_doses: doses, ..Default::default() };
        let policy = TimepointPolicy::default();
        let t1 = rec.timepoints(&policy).t1 as usize;
        let x = compute_variables(&rec, &policy);
        let window = &vals[..t1.min(vals.len())];
        let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let x5 = x[4].unwrap();
        prop_assert!(x5 >= lo - 1e-12 && x5 <= hi + 1e-12);
    }

    #[test]
    fn downsampling_daily_series_is_identity(vals in prop::collection::vec(-100.0f64..100.0, 1..10)) {
        let s = TimelineSeries::new(vals.iter().enumerate().map(|(d, &v)| (24.0 * d as f64, v)).collect()).unwrap();
        let m = daily_median(&s);
        for (d, &v) in vals.iter().enumerate() {
            prop_assert_eq!(m.get(d as u32 + 1), Some(v));
        }
    }

    #[test]
    fn daily_median_ignores_sample_order(mut s in prop::collection::vec((0.0f64..120.0, -10.0f64..10.0), 0..60), seed in 0u64..100) {
        let a = daily_median(&TimelineSeries::new(s.clone()).unwrap());
        use rand::seq::SliceRandom;
        s.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = daily_median(&TimelineSeries::new(s).unwrap());
        prop_assert_eq!(a, b);
    }
}
