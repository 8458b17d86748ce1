use crate::evoml::{
    classification_metrics, gp_evolve, kmeans_cluster, mean_absolute_error, simulate_counterfactual, standardize,
    train_test_split, ClassMetrics, CounterfactualRow, CounterfactualSummary, EvomlError, GpRun, KMeansResult, Task,
};
use crate::outcome::split_by_median;
use crate::report::{line, num, opt};
use crate::stats::median;
use crate::varprep::{variable_name, StudyGroup, LOS, MORTALITY, TREATMENT};

use super::{write_file, RunConfig, RunError, Stage};

/// Clinical-condition covariates used for clustering.
pub const CLUSTER_VARS: [usize; 5] = [2, 3, 6, 11, 15];

/// Number of best models per group carried into the simulation.
pub const BEST_MODELS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GpRecord {
    pub group: String,
    pub task: Task,
    pub run: usize,
    pub seed: u64,
    pub gp: GpRun,
    pub n_train: usize,
    /// Metrics over the whole group, then the training and test parts.
    pub all: Evaluation,
    pub train: Evaluation,
    pub test: Evaluation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluation {
    Class(ClassMetrics),
    Mae { n: usize, mae: f64 },
}

impl Evaluation {
    /// Higher is better.
    fn score(&self) -> f64 {
        match self {
            Evaluation::Class(m) => m.success_rate,
            Evaluation::Mae { mae, .. } => -mae,
        }
    }

    fn cells(&self) -> Vec<String> {
        match self {
            Evaluation::Class(m) => vec![
                m.n.to_string(),
                num(m.success_rate),
                m.tp.to_string(),
                m.tn.to_string(),
                m.fp.to_string(),
                m.fn_.to_string(),
                opt(m.sensitivity_ppv),
                opt(m.specificity_npv),
                opt(m.sensitivity_std),
                opt(m.specificity_std),
                String::new(),
            ],
            Evaluation::Mae { n, mae } => {
                let mut v = vec![n.to_string()];
                v.extend(std::iter::repeat_n(String::new(), 9));
                v.push(num(*mae));
                v
            }
        }
    }
}

const METRIC_HEADER: [&str; 11] = [
    "n", "success_rate", "tp", "tn", "fp", "fn", "sensitivity_ppv", "specificity_npv", "sensitivity_std",
    "specificity_std", "mae",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualRecord {
    pub group: String,
    pub task: Task,
    pub rank: usize,
    pub run: usize,
    pub rows: Vec<CounterfactualRow>,
    pub summary: CounterfactualSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlOutput {
    pub features: Vec<usize>,
    pub clusters: KMeansResult,
    pub groups: Vec<(String, Vec<usize>)>,
    pub runs: Vec<GpRecord>,
    pub counterfactuals: Vec<CounterfactualRecord>,
    pub notes: Vec<String>,
}

impl MlOutput {
    pub fn summary_lines(&self) -> String {
        let mut s = format!(
            "kmeans_features = {} (z-scored)\n",
            CLUSTER_VARS.map(|v| format!("x{v}")).join(",")
        );
        s.push_str(&format!("cluster_sizes = {}\n", join(&self.clusters.sizes())));
        s.push_str(&format!("gp_features = {}\n", self.features.iter().map(|v| format!("x{v}")).collect::<Vec<_>>().join(",")));
        for (g, rows) in &self.groups {
            s.push_str(&format!("group {g} = {} patients\n", rows.len()));
        }
        for c in &self.counterfactuals {
            s.push_str(&format!(
                "simulated {} {} model {}: treated {} untreated {} differing {}/{}\n",
                c.group,
                task_name(c.task),
                c.rank,
                num(c.summary.treated),
                num(c.summary.untreated),
                c.summary.differing,
                c.summary.n
            ));
        }
        for n in &self.notes {
            s.push_str(&format!("note = {n}\n"));
        }
        s
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn task_name(t: Task) -> &'static str {
    match t {
        Task::Classify => "mortality",
        Task::Regress => "los",
    }
}

fn evo_err(e: EvomlError) -> RunError {
    match e {
        EvomlError::InvalidConfig(m) => RunError::config(m),
        other => RunError::data(Stage::Ml, other.to_string()),
    }
}

/// Covariates x1..x56 observed for every patient.
pub fn gp_features(group: &StudyGroup) -> Vec<usize> {
    (1..=56).filter(|&i| group.rows().iter().all(|r| r.get(i).is_finite())).collect()
}

fn run_seed(base: u64, group: usize, task: usize, run: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(((group * 2 + task) * 1000 + run) as u64)
}

fn evaluate(task: Task, tree: &crate::evoml::Tree, rows: &[Vec<f64>], targets: &[f64]) -> Evaluation {
    match task {
        Task::Classify => Evaluation::Class(classification_metrics(tree, rows, targets)),
        Task::Regress => Evaluation::Mae {
            n: rows.len(),
            mae: if rows.is_empty() { f64::NAN } else { mean_absolute_error(tree, rows, targets) },
        },
    }
}

fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Which parts of the ml stage to run; clustering always runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MlOptions {
    pub tasks: Vec<Task>,
    pub simulate: bool,
}

impl Default for MlOptions {
    fn default() -> Self {
        MlOptions { tasks: vec![Task::Classify, Task::Regress], simulate: true }
    }
}

/// K-means clustering, then GP runs per group and task on 70/30 splits,
/// then the paired-patient simulation with each group's best models.
pub fn ml_stage(cfg: &RunConfig, group: &StudyGroup, opts: &MlOptions) -> Result<MlOutput, RunError> {
    let stage = Stage::Ml;
    let n = group.n();
    let points: Vec<Vec<f64>> = group.rows().iter().map(|r| CLUSTER_VARS.iter().map(|&v| r.get(v)).collect()).collect();
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(RunError::data(stage, "clustering covariates have missing values"));
    }
    let clusters = kmeans_cluster(&standardize(&points), cfg.kmeans_k, cfg.kmeans_seed.unwrap_or(cfg.seed)).map_err(evo_err)?;

    let mut notes = Vec::new();
    let mut groups: Vec<(String, Vec<usize>)> = vec![("dataset".into(), (0..n).collect())];
    for c in 0..clusters.k {
        let rows = (0..n).filter(|&i| clusters.assignment[i] == c).collect();
        groups.push((format!("cluster{}", c + 1), rows));
    }
    match split_by_median(group, cfg.split_variable) {
        Ok(split) => {
            groups.push(("less_sick".into(), split.less_sick));
            groups.push(("sicker".into(), split.sicker));
        }
        Err(e) => notes.push(format!("less sick / sicker groups skipped: {e}")),
    }

    let features = gp_features(group);
    let treatment_feature = features.iter().position(|&v| v == TREATMENT);
    let rows: Vec<Vec<f64>> = group.rows().iter().map(|r| features.iter().map(|&v| r.get(v)).collect()).collect();
    let labels = group.column(MORTALITY);
    let los = group.column(LOS);

    let mut runs = Vec::new();
    let mut counterfactuals = Vec::new();
    for (gi, (name, idx)) in groups.iter().enumerate() {
        if idx.is_empty() {
            notes.push(format!("group {name} is empty"));
            continue;
        }
        let g_rows = pick(&rows, idx);
        for (ti, task) in [Task::Classify, Task::Regress].into_iter().enumerate() {
            if !opts.tasks.contains(&task) {
                continue;
            }
            let targets = pick(if task == Task::Classify { &labels } else { &los }, idx);
            if targets.iter().any(|v| !v.is_finite()) {
                notes.push(format!("group {name}: {} outcome has missing values", task_name(task)));
                continue;
            }
            let mut group_runs = Vec::new();
            for run in 0..cfg.gp_runs {
                let seed = run_seed(cfg.seed, gi, ti, run);
                let (train, test) = train_test_split(idx.len(), cfg.gp_train_fraction, seed);
                let gp_cfg = crate::evoml::GpConfig { seed, ..cfg.gp.clone() };
                let (tr_rows, tr_y) = (pick(&g_rows, &train), pick(&targets, &train));
                let gp = gp_evolve(&gp_cfg, &tr_rows, &tr_y, task).map_err(evo_err)?;
                let all = evaluate(task, &gp.best.tree, &g_rows, &targets);
                let train_eval = evaluate(task, &gp.best.tree, &tr_rows, &tr_y);
                let test_eval = evaluate(task, &gp.best.tree, &pick(&g_rows, &test), &pick(&targets, &test));
                group_runs.push(GpRecord {
                    group: name.clone(),
                    task,
                    run: run + 1,
                    seed,
                    gp,
                    n_train: train.len(),
                    all,
                    train: train_eval,
                    test: test_eval,
                });
            }
            let mut order: Vec<usize> = (0..group_runs.len()).collect();
            order.sort_by(|&a, &b| group_runs[b].all.score().total_cmp(&group_runs[a].all.score()).then(a.cmp(&b)));
            if let Some(tf) = treatment_feature.filter(|_| opts.simulate) {
                for (rank, &i) in order.iter().take(BEST_MODELS).enumerate() {
                    let rec = &group_runs[i];
                    let (cf_rows, summary) = simulate_counterfactual(&rec.gp.best.tree, &g_rows, tf, task);
                    counterfactuals.push(CounterfactualRecord {
                        group: name.clone(),
                        task,
                        rank: rank + 1,
                        run: rec.run,
                        rows: cf_rows,
                        summary,
                    });
                }
            }
            runs.extend(group_runs);
        }
    }
    if opts.simulate && treatment_feature.is_none() {
        notes.push("treatment is not a GP feature; simulation skipped".into());
    }

    let out = MlOutput { features, clusters, groups, runs, counterfactuals, notes };
    write_outputs(cfg, group, &points, &out, opts)?;
    Ok(out)
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    (m, sd)
}

fn write_outputs(
    cfg: &RunConfig,
    group: &StudyGroup,
    points: &[Vec<f64>],
    out: &MlOutput,
    opts: &MlOptions,
) -> Result<(), RunError> {
    let stage = Stage::Ml;
    let dir = &cfg.out_dir;

    let mut s = line(&["subject_id", "hadm_id", "icustay_id", "cluster"]);
    for (r, &c) in group.rows().iter().zip(&out.clusters.assignment) {
        s.push_str(&line(&[
            r.key.subject_id.to_string(),
            r.key.hadm_id.to_string(),
            r.key.icustay_id.to_string(),
            (c + 1).to_string(),
        ]));
    }
    write_file(stage, &dir.join("clusters.csv"), &s)?;

    let mut header = vec!["cluster".to_string(), "n".into(), "n_treated".into(), "n_untreated".into()];
    for v in CLUSTER_VARS {
        let name = variable_name(v);
        header.extend([format!("mean_{name}"), format!("sd_{name}"), format!("median_{name}"), format!("centroid_z_{name}")]);
    }
    let mut s = line(&header);
    for c in 0..out.clusters.k {
        let members: Vec<usize> = (0..group.n()).filter(|&i| out.clusters.assignment[i] == c).collect();
        let treated = members.iter().filter(|&&i| group.rows()[i].treated()).count();
        let mut row = vec![(c + 1).to_string(), members.len().to_string(), treated.to_string(), (members.len() - treated).to_string()];
        for (j, _) in CLUSTER_VARS.iter().enumerate() {
            let vals: Vec<f64> = members.iter().map(|&i| points[i][j]).collect();
            let (m, sd) = mean_sd(&vals);
            row.extend([num(m), num(sd), crate::report::opt(median(&vals)), num(out.clusters.centroids[c][j])]);
        }
        s.push_str(&line(&row));
    }
    write_file(stage, &dir.join("cluster_summary.csv"), &s)?;
    if opts.tasks.is_empty() {
        return Ok(());
    }

    let mut s = line(&["group", "task", "run", "generation", "best_fitness"]);
    for r in &out.runs {
        for (g, f) in r.gp.trace.iter().enumerate() {
            s.push_str(&line(&[r.group.clone(), task_name(r.task).into(), r.run.to_string(), g.to_string(), num(*f)]));
        }
    }
    write_file(stage, &dir.join("gp_run.csv"), &s)?;

    let mut header: Vec<String> = ["group", "task", "run", "seed", "subset"].map(String::from).to_vec();
    header.extend(METRIC_HEADER.map(String::from));
    header.extend(["depth", "size", "expression"].map(String::from));
    let names: Vec<String> = out.features.iter().map(|v| format!("x{v}")).collect();
    let mut s = line(&header);
    for r in &out.runs {
        for (subset, e) in [("all", &r.all), ("train", &r.train), ("test", &r.test)] {
            let mut row = vec![r.group.clone(), task_name(r.task).into(), r.run.to_string(), r.seed.to_string(), subset.into()];
            row.extend(e.cells());
            row.extend([r.gp.best.tree.depth().to_string(), r.gp.best.tree.len().to_string(), r.gp.best.tree.render(&names)]);
            s.push_str(&line(&row));
        }
    }
    write_file(stage, &dir.join("gp_metrics.csv"), &s)?;

    let mut header: Vec<String> = ["group", "task", "runs"].map(String::from).to_vec();
    header.extend(METRIC_HEADER.map(|h| format!("median_{h}")));
    let mut s = line(&header);
    for (name, _) in &out.groups {
        for task in [Task::Classify, Task::Regress] {
            let evals: Vec<Evaluation> = out.runs.iter().filter(|r| &r.group == name && r.task == task).map(|r| r.all).collect();
            if evals.is_empty() {
                continue;
            }
            let med = |f: &dyn Fn(&Evaluation) -> Option<f64>| {
                let v: Vec<f64> = evals.iter().filter_map(f).collect();
                crate::report::opt(median(&v))
            };
            let class = |g: fn(&ClassMetrics) -> Option<f64>| {
                move |e: &Evaluation| match e {
                    Evaluation::Class(m) => g(m),
                    Evaluation::Mae { .. } => None,
                }
            };
            let mut row = vec![name.clone(), task_name(task).into(), evals.len().to_string()];
            row.push(med(&|e: &Evaluation| Some(match e {
                Evaluation::Class(m) => m.n as f64,
                Evaluation::Mae { n, .. } => *n as f64,
            })));
            row.push(med(&class(|m| Some(m.success_rate))));
            row.push(med(&class(|m| Some(m.tp as f64))));
            row.push(med(&class(|m| Some(m.tn as f64))));
            row.push(med(&class(|m| Some(m.fp as f64))));
            row.push(med(&class(|m| Some(m.fn_ as f64))));
            row.push(med(&class(|m| m.sensitivity_ppv)));
            row.push(med(&class(|m| m.specificity_npv)));
            row.push(med(&class(|m| m.sensitivity_std)));
            row.push(med(&class(|m| m.specificity_std)));
            row.push(med(&|e: &Evaluation| match e {
                Evaluation::Mae { mae, .. } => Some(*mae),
                Evaluation::Class(_) => None,
            }));
            s.push_str(&line(&row));
        }
    }
    write_file(stage, &dir.join("gp_summary.csv"), &s)?;
    if !opts.simulate {
        return Ok(());
    }

    let mut s = line(&["group", "task", "model", "run", "n", "treated", "untreated", "differing"]);
    let mut p = line(&["group", "task", "model", "subject_id", "hadm_id", "icustay_id", "treated", "untreated"]);
    for c in &out.counterfactuals {
        s.push_str(&line(&[
            c.group.clone(),
            task_name(c.task).into(),
            c.rank.to_string(),
            c.run.to_string(),
            c.summary.n.to_string(),
            num(c.summary.treated),
            num(c.summary.untreated),
            c.summary.differing.to_string(),
        ]));
        let idx = &out.groups.iter().find(|(g, _)| g == &c.group).expect("group").1;
        for (&i, row) in idx.iter().zip(&c.rows) {
            let k = group.rows()[i].key;
            p.push_str(&line(&[
                c.group.clone(),
                task_name(c.task).into(),
                c.rank.to_string(),
                k.subject_id.to_string(),
                k.hadm_id.to_string(),
                k.icustay_id.to_string(),
                num(row.treated),
                num(row.untreated),
            ]));
        }
    }
    write_file(stage, &dir.join("counterfactual.csv"), &s)?;
    write_file(stage, &dir.join("counterfactual_patients.csv"), &p)?;
    Ok(())
}
