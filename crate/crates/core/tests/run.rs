mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::fixture_dir;
use obsstudy::run::{run_all, ErrorKind, RunConfig, Stage};

fn config(out: &Path) -> RunConfig {
    RunConfig { extracts_dir: fixture_dir(), out_dir: out.to_path_buf(), ..RunConfig::default() }
}

fn bundle(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn trace_counts(text: &str) -> Vec<(String, String)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let h = r.headers().unwrap().clone();
    let step = h.iter().position(|c| c == "step").unwrap();
    let surv = h.iter().position(|c| c == "surviving" || c == "surviving_count").unwrap();
    r.records().map(|rec| rec.unwrap()).map(|rec| (rec[step].to_string(), rec[surv].to_string())).collect()
}

#[test]
fn run_all_reproduces_manifest_and_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = run_all(&config(a.path())).unwrap();
    run_all(&config(b.path())).unwrap();

    let manifest = fixture_dir().join("manifest");
    let read = |p: &Path| std::fs::read_to_string(p).unwrap();
    assert_eq!(trace_counts(&read(&a.path().join("filter_trace.csv"))), trace_counts(&read(&manifest.join("expected_trace.csv"))));
    assert_eq!(read(&a.path().join("studygroup.csv")), read(&manifest.join("expected_studygroup.csv")));
    assert_eq!(read(&a.path().join("rejections.csv")), read(&manifest.join("expected_rejections.csv")));

    let (ba, bb) = (bundle(a.path()), bundle(b.path()));
    assert_eq!(ba.keys().collect::<Vec<_>>(), bb.keys().collect::<Vec<_>>());
    for (name, bytes) in &ba {
        assert!(bytes == &bb[name], "{name} differs between runs");
    }
    for name in ["strata.csv", "balance.csv", "outcome_models.csv", "gp_summary.csv", "counterfactual.csv", "run_summary.txt"] {
        assert!(ba.contains_key(name), "{name} missing");
    }
    assert_eq!(out.files.len(), ba.len());
    let ml = out.ml.unwrap();
    assert_eq!(ml.runs.len(), ml.groups.len() * 2 * RunConfig::default().gp_runs);
}

#[test]
fn later_stages_reuse_earlier_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.set("stages", "cohort,varprep,propensity").unwrap();
    run_all(&cfg).unwrap();
    let before = bundle(dir.path());
    assert!(!before.contains_key("outcome_models.csv"));

    cfg.set("stages", "outcome").unwrap();
    cfg.extracts_dir = dir.path().join("absent");
    let out = run_all(&cfg).unwrap();
    assert!(out.cohort.is_none() && out.propensity.is_none());
    let after = bundle(dir.path());
    assert!(after.contains_key("outcome_models.csv"));
    for name in ["strata.csv", "studygroup.csv", "filter_trace.csv"] {
        assert_eq!(before[name], after[name], "{name} rewritten");
    }
}

#[test]
fn missing_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.extracts_dir = dir.path().join("nowhere");
    let e = run_all(&cfg).unwrap_err();
    assert_eq!((e.kind, e.exit_code()), (ErrorKind::Data, 3));
    assert_eq!(e.stage, Some(Stage::Cohort));

    cfg.set("stages", "propensity").unwrap();
    let e = run_all(&cfg).unwrap_err();
    assert_eq!((e.kind, e.stage), (ErrorKind::Data, Some(Stage::Propensity)));
}

#[test]
fn config_errors() {
    let mut cfg = RunConfig::default();
    assert_eq!(cfg.set("no_such_key", "1").unwrap_err().exit_code(), 2);
    assert!(cfg.set("strata", "zero").is_err());
    let e = RunConfig::parse_text("strata = 5\nbogus = 1\n").unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
    let cfg = RunConfig::parse_text("# comment\nseed = 9\nstages = ml, cohort\n").unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.stages, vec![Stage::Cohort, Stage::Ml]);
    assert!(RunConfig::parse_text(&cfg.describe()).is_ok());
}
