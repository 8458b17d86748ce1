use obsstudy::cohort::{default_pipeline, run_filter_pipeline, Extracts, PipelineContext};
use obsstudy::synth::{generate_study_group, synth_generate, SynthSpec};
use obsstudy::varprep::{assemble_study_group, AssemblyPolicy};

fn roundtrip(spec: &SynthSpec) {
    let out = synth_generate(spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    out.write_dir(dir.path()).unwrap();
    let extracts = Extracts::read_dir(dir.path()).unwrap();
    let run = run_filter_pipeline(&extracts, &default_pipeline(), &PipelineContext::default()).unwrap();
    assert_eq!(run.trace.original_count, out.manifest.original_count);
    assert_eq!(run.trace.counts(), out.manifest.step_survivors);
    let asm = assemble_study_group(&extracts, &run.survivors, &AssemblyPolicy::default()).unwrap();
    let rejected: Vec<_> = asm.rejected.iter().map(|r| (r.key, r.variable)).collect();
    assert_eq!(rejected, out.manifest.rejections);
    let expected = &out.manifest.expected_group;
    assert_eq!(asm.group.n(), expected.n());
    for (got, want) in asm.group.rows().iter().zip(expected.rows()) {
        assert_eq!(got.key, want.key);
        for i in 1..=58 {
            let (g, w) = (got.get(i), want.get(i));
            assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{} x{i}: {g} vs {w}", got.key);
        }
    }
}

#[test]
fn extracts_reproduce_the_planned_study_group() {
    for seed in 1..=5 {
        roundtrip(&SynthSpec { n: 300, seed, ..SynthSpec::default() });
    }
}

#[test]
fn empty_spec() {
    let out = synth_generate(&SynthSpec { n: 0, ..SynthSpec::default() }).unwrap();
    assert_eq!(out.manifest.expected_group.n(), 0);
    assert!(out.manifest.step_survivors.iter().all(|&c| c == 0));
    assert!(out.extracts.get("stays").unwrap().rows.is_empty());
}

#[test]
fn same_seed_same_bytes() {
    let spec = SynthSpec { n: 120, seed: 9, ..SynthSpec::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    synth_generate(&spec).unwrap().write_dir(a.path()).unwrap();
    synth_generate(&spec).unwrap().write_dir(b.path()).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in names {
        let pa = a.path().join(&name);
        if pa.is_file() {
            assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(b.path().join(&name)).unwrap(), "{name:?}");
        }
    }
    for f in ["manifest.txt", "expected_studygroup.csv", "expected_trace.csv"] {
        let p = |d: &std::path::Path| std::fs::read(d.join("manifest").join(f)).unwrap();
        assert_eq!(p(a.path()), p(b.path()));
    }
}

#[test]
fn prevalence_target_is_met() {
    for seed in 0..5 {
        let mut spec = SynthSpec { n: 1500, seed, ..SynthSpec::default() };
        spec.treatment.prevalence = 0.12;
        let (group, _, _) = generate_study_group(&spec).unwrap();
        let p = group.n_treated() as f64 / group.n() as f64;
        assert!((p - 0.12).abs() <= 0.03, "seed {seed}: {p}");
    }
}

#[test]
fn realistic_marginals() {
    let (group, _, truth) = generate_study_group(&SynthSpec { n: 3000, seed: 4, ..SynthSpec::default() }).unwrap();
    let mean = |i: usize| group.column(i).iter().sum::<f64>() / group.n() as f64;
    assert!((mean(6) - 15.8).abs() < 0.5);
    assert!((mean(58) - 7.4).abs() < 0.7, "{}", mean(58));
    assert!((truth.realized_mortality - 0.35).abs() < 0.04);
}
