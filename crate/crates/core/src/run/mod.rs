//! End-to-end orchestration: cohort, varprep, propensity, outcome and ml
//! stages writing one report bundle into the output directory.

mod config;
mod ml;

pub use config::{RunConfig, Stage, KEYS};
pub use ml::{gp_features, ml_stage, CounterfactualRecord, Evaluation, GpRecord, MlOptions, MlOutput, BEST_MODELS, CLUSTER_VARS};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use crate::cohort::{
    default_pipeline, parse_pipeline, run_filter_pipeline, CohortError, DrugLexicon, Extracts, PatientKey,
    PipelineContext, PipelineOutput,
};
use crate::outcome::{
    fit_model_a, fit_model_b, fit_model_c, outcome_models_csv, split_by_median, stratified_outcome_tests,
    stratified_tests_csv, OutcomeError, OutcomeKind, OutcomeModelReport, StratumTest, SIGNIFICANCE,
};
use crate::propensity::{
    assess_balance, refine_model, select_propensity_model, strata_outcome_table, strata_table_csv,
    stratify_group, BalanceReport, PropensityError, PropensityModel, RefineOptions, Refinement, Stratification,
};
use crate::regress::{coefficient_p_values, LogitOptions, RegressError, StepwiseOptions};
use crate::report::{line, num};
use crate::stats::StatsError;
use crate::varprep::{assemble_study_group, Assembly, AssemblyPolicy, StudyGroup, TimepointPolicy, VarprepError};

/// Failure class, mapped to the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub stage: Option<Stage>,
    pub kind: ErrorKind,
    pub message: String,
}

impl RunError {
    pub fn config(message: impl Into<String>) -> Self {
        RunError { stage: None, kind: ErrorKind::Config, message: message.into() }
    }

    pub fn data(stage: Stage, message: impl Into<String>) -> Self {
        RunError { stage: Some(stage), kind: ErrorKind::Data, message: message.into() }
    }

    pub fn numeric(stage: Stage, message: impl Into<String>) -> Self {
        RunError { stage: Some(stage), kind: ErrorKind::Numeric, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    fn at(mut self, stage: Stage) -> Self {
        self.stage.get_or_insert(stage);
        self
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(s) => write!(f, "{s} stage: {}", self.message),
            None => write!(f, "configuration: {}", self.message),
        }
    }
}

impl std::error::Error for RunError {}

fn stats_kind(_: &StatsError) -> ErrorKind {
    ErrorKind::Numeric
}

fn regress_kind(e: &RegressError) -> ErrorKind {
    match e {
        RegressError::Parse(_) | RegressError::DuplicateTerm(_) => ErrorKind::Config,
        RegressError::MissingVariable(_)
        | RegressError::LengthMismatch { .. }
        | RegressError::NonBinaryOutcome
        | RegressError::TooFewRows { .. }
        | RegressError::EmptyCandidates => ErrorKind::Data,
        RegressError::RankDeficient { .. } | RegressError::NonFinite(_) | RegressError::NotConverged => {
            ErrorKind::Numeric
        }
        RegressError::Stats(s) => stats_kind(s),
    }
}

impl From<(Stage, CohortError)> for RunError {
    fn from((stage, e): (Stage, CohortError)) -> Self {
        let kind = match e {
            CohortError::PipelineSyntax { .. } | CohortError::UnknownSetReference(_) => ErrorKind::Config,
            _ => ErrorKind::Data,
        };
        RunError { stage: Some(stage), kind, message: e.to_string() }
    }
}

impl From<(Stage, VarprepError)> for RunError {
    fn from((stage, e): (Stage, VarprepError)) -> Self {
        RunError { stage: Some(stage), kind: ErrorKind::Data, message: e.to_string() }
    }
}

impl From<(Stage, PropensityError)> for RunError {
    fn from((stage, e): (Stage, PropensityError)) -> Self {
        let kind = match &e {
            PropensityError::TooFewPatients { .. } | PropensityError::LengthMismatch => ErrorKind::Data,
            PropensityError::NotConverged | PropensityError::NonFiniteScore => ErrorKind::Numeric,
            PropensityError::Regress(r) => regress_kind(r),
            PropensityError::Stats(s) => stats_kind(s),
        };
        RunError { stage: Some(stage), kind, message: e.to_string() }
    }
}

impl From<(Stage, OutcomeError)> for RunError {
    fn from((stage, e): (Stage, OutcomeError)) -> Self {
        let kind = match &e {
            OutcomeError::ConstantVariable(_) | OutcomeError::MissingValues(_) | OutcomeError::ScoreCount { .. } => {
                ErrorKind::Data
            }
            OutcomeError::NotConverged => ErrorKind::Numeric,
            OutcomeError::Regress(r) => regress_kind(r),
            OutcomeError::Stats(s) => stats_kind(s),
        };
        RunError { stage: Some(stage), kind, message: e.to_string() }
    }
}

fn io_err(stage: Stage, path: &Path, e: impl fmt::Display) -> RunError {
    RunError::data(stage, format!("{}: {e}", path.display()))
}

pub(crate) fn write_file(stage: Stage, path: &Path, text: &str) -> Result<(), RunError> {
    crate::report::write(path, text).map_err(|e| io_err(stage, path, e))
}

fn read_file(stage: Stage, path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| io_err(stage, path, e))
}

/// Reads the extract directory, failing early when it is absent.
pub fn load_extracts(cfg: &RunConfig) -> Result<Extracts, RunError> {
    let dir = &cfg.extracts_dir;
    if !dir.is_dir() {
        return Err(RunError::data(Stage::Cohort, format!("extracts directory `{}` does not exist", dir.display())));
    }
    Extracts::read_dir(dir).map_err(|e| (Stage::Cohort, e).into())
}

pub fn pipeline_context(cfg: &RunConfig) -> Result<PipelineContext, RunError> {
    let mut ctx = PipelineContext::default();
    if let Some(path) = &cfg.lexicon_file {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
        ctx.lexicon = DrugLexicon::parse(&text)
            .ok_or_else(|| RunError::config(format!("lexicon `{}` has no entries", path.display())))?;
    }
    Ok(ctx)
}

/// Filter pipeline over the extracts; writes `filter_trace.csv` and
/// `survivors.csv`.
pub fn cohort_stage(cfg: &RunConfig, extracts: &Extracts) -> Result<PipelineOutput, RunError> {
    let stage = Stage::Cohort;
    let steps = match &cfg.pipeline_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
            parse_pipeline(&text).map_err(|e| RunError::config(e.to_string()))?
        }
        None => default_pipeline(),
    };
    let out = run_filter_pipeline(extracts, &steps, &pipeline_context(cfg)?).map_err(|e| RunError::from((stage, e)))?;
    write_file(stage, &cfg.out_dir.join("filter_trace.csv"), &out.trace.to_csv())?;
    let mut s = String::from("icustay_id\n");
    for id in &out.survivors {
        s.push_str(&format!("{id}\n"));
    }
    write_file(stage, &cfg.out_dir.join("survivors.csv"), &s)?;
    Ok(out)
}

pub fn read_survivors(cfg: &RunConfig) -> Result<BTreeSet<u64>, RunError> {
    let stage = Stage::Varprep;
    let path = cfg.out_dir.join("survivors.csv");
    let text = read_file(stage, &path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("icustay_id") {
        return Err(RunError::data(stage, format!("{}: expected header `icustay_id`", path.display())));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| RunError::data(stage, format!("{} line {}: bad id `{l}`", path.display(), i + 2)))
        })
        .collect()
}

pub fn assembly_policy(cfg: &RunConfig) -> AssemblyPolicy {
    AssemblyPolicy {
        timepoints: TimepointPolicy { default_untreated: cfg.default_untreated_day, t2: cfg.t2, t3: cfg.t3 },
        mandatory: cfg.mandatory.clone(),
    }
}

/// Study-group assembly; writes `studygroup.csv` and `rejections.csv`.
pub fn varprep_stage(cfg: &RunConfig, extracts: &Extracts, survivors: &BTreeSet<u64>) -> Result<Assembly, RunError> {
    let stage = Stage::Varprep;
    let asm = assemble_study_group(extracts, survivors, &assembly_policy(cfg)).map_err(|e| RunError::from((stage, e)))?;
    write_file(stage, &cfg.out_dir.join("studygroup.csv"), &asm.group.to_csv())?;
    let mut rej = line(&["subject_id", "hadm_id", "icustay_id", "variable"]);
    for r in &asm.rejected {
        rej.push_str(&line(&[
            r.key.subject_id.to_string(),
            r.key.hadm_id.to_string(),
            r.key.icustay_id.to_string(),
            format!("x{}", r.variable),
        ]));
    }
    write_file(stage, &cfg.out_dir.join("rejections.csv"), &rej)?;
    Ok(asm)
}

pub fn read_study_group(cfg: &RunConfig, stage: Stage) -> Result<StudyGroup, RunError> {
    let path = cfg.out_dir.join("studygroup.csv");
    let text = read_file(stage, &path)?;
    StudyGroup::parse_csv(&text).map_err(|e| RunError::data(stage, format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropensityOutput {
    pub initial: PropensityModel,
    pub initial_balance: BalanceReport,
    pub refinement: Refinement,
    pub balance: BalanceReport,
}

impl PropensityOutput {
    pub fn strat(&self) -> &Stratification {
        &self.refinement.strat
    }
}

fn model_text(initial: &PropensityModel, refined: Option<&Refinement>) -> Result<String, RunError> {
    let mut s = String::new();
    s.push_str(&format!("initial_model = {}\n", initial.spec));
    let fit = match refined {
        Some(r) => {
            s.push_str(&format!("final_model = {}\n", r.spec));
            &r.fit
        }
        None => &initial.fit,
    };
    s.push_str(&format!("log_likelihood = {}\n", num(fit.log_likelihood)));
    s.push_str(&format!("iterations = {}\n", fit.iterations));
    s.push_str(&format!("converged = {}\n", fit.converged));
    if let Some(sw) = &initial.stepwise {
        for w in &sw.warnings {
            s.push_str(&format!("warning = {w}\n"));
        }
    }
    let p = coefficient_p_values(fit).map_err(|e| RunError::from((Stage::Propensity, PropensityError::from(e))))?;
    s.push('\n');
    s.push_str(&line(&["term", "beta", "se", "z", "p"]));
    for c in &p {
        s.push_str(&line(&[
            c.term.to_string(),
            num(c.estimate),
            num(c.standard_error),
            num(c.test.statistic),
            num(c.test.p_value),
        ]));
    }
    Ok(s)
}

fn stepwise_log_csv(model: &PropensityModel) -> String {
    let mut s = line(&["step", "phase", "term", "lr_statistic", "p", "log_likelihood"]);
    if let Some(sw) = &model.stepwise {
        for (i, e) in sw.entries.iter().enumerate() {
            s.push_str(&line(&[
                (i + 1).to_string(),
                e.phase.to_string(),
                e.term.to_string(),
                num(e.lr_statistic),
                num(e.p_value),
                num(e.log_likelihood),
            ]));
        }
    }
    s
}

/// How far the propensity stage goes; each step includes the earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PropensityStep {
    Fit,
    Stratify,
    Balance,
    Refine,
}

/// Runs the propensity stage up to `step`, writing that step's files.
/// Returns the full output only when refinement ran.
pub fn propensity_steps(
    cfg: &RunConfig,
    group: &StudyGroup,
    step: PropensityStep,
) -> Result<Option<PropensityOutput>, RunError> {
    let stage = Stage::Propensity;
    let e = |e: PropensityError| RunError::from((stage, e));
    let dir = &cfg.out_dir;
    let logit = LogitOptions::default();
    let opts = StepwiseOptions { p_enter: cfg.p_enter, interactions: cfg.stepwise_interactions, logit };
    let initial = select_propensity_model(group, &opts).map_err(e)?;
    write_file(stage, &dir.join("stepwise_log.csv"), &stepwise_log_csv(&initial))?;
    if step == PropensityStep::Fit {
        write_file(stage, &dir.join("propensity_model.txt"), &model_text(&initial, None)?)?;
        return Ok(None);
    }
    let strat = stratify_group(group, &initial.fit, cfg.strata).map_err(e)?;
    if step == PropensityStep::Stratify {
        write_file(stage, &dir.join("propensity_model.txt"), &model_text(&initial, None)?)?;
        write_file(stage, &dir.join("strata.csv"), &strat.to_csv(group))?;
        write_file(stage, &dir.join("quintile_table.csv"), &strata_table_csv(&strata_outcome_table(group, &strat)))?;
        return Ok(None);
    }
    let initial_balance = assess_balance(group, &strat).map_err(e)?;
    if step == PropensityStep::Balance {
        write_file(stage, &dir.join("propensity_model.txt"), &model_text(&initial, None)?)?;
        write_file(stage, &dir.join("strata.csv"), &strat.to_csv(group))?;
        write_file(stage, &dir.join("quintile_table.csv"), &strata_table_csv(&strata_outcome_table(group, &strat)))?;
        write_file(stage, &dir.join("balance.csv"), &initial_balance.to_csv())?;
        write_file(stage, &dir.join("balance_summary.csv"), &initial_balance.summary_csv())?;
        return Ok(None);
    }
    let ropts = RefineOptions {
        fraction: cfg.refine_fraction,
        max_passes: cfg.refine_max_passes,
        large_f_alpha: cfg.refine_large_f_alpha,
        strata: cfg.strata,
        logit,
    };
    let refinement = refine_model(group, &initial.spec, &strat, &ropts).map_err(e)?;
    let balance = assess_balance(group, &refinement.strat).map_err(e)?;
    let out = PropensityOutput { initial, initial_balance, refinement, balance };

    write_file(stage, &dir.join("propensity_model.txt"), &model_text(&out.initial, Some(&out.refinement))?)?;
    write_file(stage, &dir.join("strata.csv"), &out.strat().to_csv(group))?;
    write_file(stage, &dir.join("balance_initial.csv"), &out.initial_balance.to_csv())?;
    write_file(stage, &dir.join("balance.csv"), &out.balance.to_csv())?;
    write_file(stage, &dir.join("balance_summary.csv"), &out.balance.summary_csv())?;
    write_file(stage, &dir.join("refinement_log.csv"), &out.refinement.log_csv())?;
    write_file(stage, &dir.join("quintile_table.csv"), &strata_table_csv(&strata_outcome_table(group, out.strat())))?;
    Ok(Some(out))
}

/// Score model selection, stratification, balance and refinement.
pub fn propensity_stage(cfg: &RunConfig, group: &StudyGroup) -> Result<PropensityOutput, RunError> {
    Ok(propensity_steps(cfg, group, PropensityStep::Refine)?.expect("refinement ran"))
}

/// Stratification written by an earlier propensity run, aligned to `group`.
pub fn read_stratification(cfg: &RunConfig, group: &StudyGroup, stage: Stage) -> Result<Stratification, RunError> {
    let path = cfg.out_dir.join("strata.csv");
    let bad = |m: String| RunError::data(stage, format!("{}: {m}", path.display()));
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| io_err(stage, &path, e))?;
    let mut by_key: BTreeMap<PatientKey, (f64, usize)> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let get = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let id = |c: usize| get(c).parse::<u64>().map_err(|_| bad(format!("line {}: bad id", i + 2)));
        let key = PatientKey::new(id(0)?, id(1)?, id(2)?).ok_or_else(|| bad(format!("line {}: bad key", i + 2)))?;
        let score = get(3).parse::<f64>().map_err(|_| bad(format!("line {}: bad score", i + 2)))?;
        let q = get(4).parse::<usize>().map_err(|_| bad(format!("line {}: bad stratum", i + 2)))?;
        by_key.insert(key, (score, q));
    }
    let mut scores = Vec::with_capacity(group.n());
    let mut assignment = Vec::with_capacity(group.n());
    for r in group.rows() {
        let &(s, q) = by_key.get(&r.key).ok_or_else(|| bad(format!("patient {} has no stratum", r.key)))?;
        scores.push(s);
        assignment.push(q);
    }
    if by_key.len() != group.n() {
        return Err(bad(format!("{} strata rows for {} patients", by_key.len(), group.n())));
    }
    let k = assignment.iter().copied().max().unwrap_or(0);
    if assignment.contains(&0) {
        return Err(bad("strata are numbered from 1".into()));
    }
    let mut sizes = vec![0; k];
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); k];
    for (&s, &q) in scores.iter().zip(&assignment) {
        sizes[q - 1] += 1;
        ranges[q - 1].0 = ranges[q - 1].0.min(s);
        ranges[q - 1].1 = ranges[q - 1].1.max(s);
    }
    Ok(Stratification { scores, assignment, ranges, sizes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeOutput {
    pub reports: Vec<OutcomeModelReport>,
    /// Model C halves that could not be fitted, with the reason.
    pub failures: Vec<(String, String)>,
    pub tests: Vec<StratumTest>,
}

/// Models A, B and C plus the per-stratum tests.
pub fn outcome_stage(cfg: &RunConfig, group: &StudyGroup, strat: &Stratification) -> Result<OutcomeOutput, RunError> {
    let stage = Stage::Outcome;
    let e = |e: OutcomeError| RunError::from((stage, e));
    let scores = &strat.scores;
    let (a_mort, a_los) = fit_model_a(group, scores).map_err(e)?;
    let b = fit_model_b(group, scores).map_err(e)?;
    let mut reports = vec![a_mort, a_los, b];
    let mut failures = Vec::new();
    let split = split_by_median(group, cfg.split_variable).map_err(e)?;
    let (less, sicker) = fit_model_c(group, scores, &split);
    for (name, r) in [("C.LessSick", less), ("C.Sicker", sicker)] {
        match r {
            Ok(r) => reports.push(r),
            Err(err) => failures.push((name.to_string(), err.to_string())),
        }
    }
    let mut tests = stratified_outcome_tests(group, strat, OutcomeKind::Mortality, cfg.ttest, cfg.yates);
    tests.extend(stratified_outcome_tests(group, strat, OutcomeKind::Los, cfg.ttest, cfg.yates));

    let dir = &cfg.out_dir;
    write_file(stage, &dir.join("outcome_models.csv"), &outcome_models_csv(&reports))?;
    write_file(stage, &dir.join("stratified_tests.csv"), &stratified_tests_csv(&tests))?;
    let mut f = line(&["model", "reason"]);
    for (m, r) in &failures {
        f.push_str(&line(&[m, r]));
    }
    write_file(stage, &dir.join("outcome_failures.csv"), &f)?;
    Ok(OutcomeOutput { reports, failures, tests })
}

/// Everything a full run produced, for callers that want more than files.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub stages: Vec<Stage>,
    pub cohort: Option<PipelineOutput>,
    pub assembly: Option<Assembly>,
    pub propensity: Option<PropensityOutput>,
    pub outcome: Option<OutcomeOutput>,
    pub ml: Option<MlOutput>,
    pub files: Vec<PathBuf>,
}

fn summary_text(cfg: &RunConfig, out: &RunOutput) -> String {
    let mut s = String::from("[config]\n");
    for l in cfg.describe().lines().filter(|l| !l.starts_with("extracts_dir") && !l.starts_with("out_dir")) {
        s.push_str(l);
        s.push('\n');
    }
    if let Some(c) = &out.cohort {
        s.push_str("\n[cohort]\n");
        s.push_str(&format!("original_stays = {}\n", c.trace.original_count));
        s.push_str(&format!("survivors = {}\n", c.survivors.len()));
    }
    if let Some(a) = &out.assembly {
        s.push_str("\n[varprep]\n");
        s.push_str(&format!("patients = {}\n", a.group.n()));
        s.push_str(&format!("treated = {}\n", a.group.n_treated()));
        s.push_str(&format!("untreated = {}\n", a.group.n_untreated()));
        s.push_str(&format!("rejected = {}\n", a.rejected.len()));
    }
    if let Some(p) = &out.propensity {
        s.push_str("\n[propensity]\n");
        s.push_str(&format!("initial_model = {}\n", p.initial.spec));
        s.push_str(&format!("final_model = {}\n", p.refinement.spec));
        s.push_str(&format!("refinement_accepted = {}\n", p.refinement.accepted().count()));
        let med = |b: &BalanceReport| {
            (b.summary_pre.as_ref().map(|f| f.median), b.summary_primary.as_ref().map(|f| f.median))
        };
        let (pre, post) = med(&p.balance);
        s.push_str(&format!("median_F_pre = {}\n", crate::report::opt(pre)));
        s.push_str(&format!("median_F_primary = {}\n", crate::report::opt(post)));
        s.push_str(&format!("strata_sizes = {}\n", p.strat().sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(",")));
    }
    if let Some(o) = &out.outcome {
        s.push_str("\n[outcome]\n");
        for r in &o.reports {
            if let Some(t) = r.term(&r.decision_term) {
                s.push_str(&format!("{} {} p = {} ({})\n", r.id, t.term, num(t.p_value), t.band));
            }
        }
        for (m, reason) in &o.failures {
            s.push_str(&format!("{m} failed: {reason}\n"));
        }
        for kind in [OutcomeKind::Mortality, OutcomeKind::Los] {
            let sig: Vec<String> = o
                .tests
                .iter()
                .filter(|t| t.kind == kind && t.significant(SIGNIFICANCE))
                .map(|t| t.stratum.to_string())
                .collect();
            s.push_str(&format!("{kind}_significant_strata = {}\n", sig.join(",")));
        }
    }
    if let Some(m) = &out.ml {
        s.push_str("\n[ml]\n");
        s.push_str(&m.summary_lines());
    }
    s
}

/// Runs the configured stages in order. Stages that are not run supply
/// their outputs from files an earlier run left in the output directory.
pub fn run_all(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let run = |s: Stage| cfg.stages.contains(&s);
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| RunError::data(cfg.stages.first().copied().unwrap_or(Stage::Cohort), format!("{}: {e}", cfg.out_dir.display())))?;
    let mut out = RunOutput { stages: cfg.stages.clone(), ..Default::default() };

    let extracts = if run(Stage::Cohort) || run(Stage::Varprep) { Some(load_extracts(cfg)?) } else { None };
    let mut survivors = None;
    if run(Stage::Cohort) {
        let c = cohort_stage(cfg, extracts.as_ref().unwrap())?;
        survivors = Some(c.survivors.clone());
        out.cohort = Some(c);
    }
    let mut group = None;
    if run(Stage::Varprep) {
        let surv = match survivors {
            Some(s) => s,
            None => read_survivors(cfg)?,
        };
        let asm = varprep_stage(cfg, extracts.as_ref().unwrap(), &surv).map_err(|e| e.at(Stage::Varprep))?;
        group = Some(asm.group.clone());
        out.assembly = Some(asm);
    }
    let needs_group = run(Stage::Propensity) || run(Stage::Outcome) || run(Stage::Ml);
    if group.is_none() && needs_group {
        let first = *cfg.stages.iter().find(|s| **s >= Stage::Propensity).unwrap();
        group = Some(read_study_group(cfg, first)?);
    }
    let mut strat = None;
    if run(Stage::Propensity) {
        let p = propensity_stage(cfg, group.as_ref().unwrap())?;
        strat = Some(p.strat().clone());
        out.propensity = Some(p);
    }
    if run(Stage::Outcome) {
        let g = group.as_ref().unwrap();
        let st = match strat {
            Some(s) => s,
            None => read_stratification(cfg, g, Stage::Outcome)?,
        };
        out.outcome = Some(outcome_stage(cfg, g, &st)?);
    }
    if run(Stage::Ml) {
        out.ml = Some(ml_stage(cfg, group.as_ref().unwrap(), &MlOptions::default())?);
    }
    write_file(Stage::Ml, &cfg.out_dir.join("run_summary.txt"), &summary_text(cfg, &out))
        .map_err(|e| RunError { stage: None, ..e })?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&cfg.out_dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_file()).collect())
        .unwrap_or_default();
    files.sort();
    out.files = files;
    Ok(out)
}
