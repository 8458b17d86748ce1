use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use obsstudy::evoml::Task;
use obsstudy::run::{
    cohort_stage, load_extracts, ml_stage, outcome_stage, propensity_steps, read_stratification, read_study_group,
    read_survivors, run_all, varprep_stage, MlOptions, PropensityStep, RunConfig, RunError, Stage,
};
use obsstudy::synth::{synth_generate, ExclusionSpec, SynthSpec};

#[derive(Parser, Debug)]
#[command(name = "obsstudy", version, about = "Propensity-score observational study pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extract directory.
    #[arg(long, global = true)]
    extracts: Option<PathBuf>,
    /// Comma-separated stages for run-all, or `all`.
    #[arg(long, global = true)]
    stages: Option<String>,
    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic cohort with its ground-truth manifest.
    Synth {
        /// Number of generated stays.
        #[arg(long)]
        n: Option<usize>,
        /// Keep every generated patient eligible.
        #[arg(long)]
        no_exclusions: bool,
    },
    /// Cohort filter pipeline.
    Cohort {
        #[command(subcommand)]
        action: RunOnly,
    },
    /// Study-group assembly.
    Varprep {
        #[command(subcommand)]
        action: RunOnly,
    },
    /// Propensity score model and stratification.
    Propensity {
        #[command(subcommand)]
        action: PropensityAction,
    },
    /// Outcome models and stratified tests.
    Outcome {
        #[command(subcommand)]
        action: RunOnly,
    },
    /// Clustering, genetic programming and simulation.
    Ml {
        #[command(subcommand)]
        action: MlAction,
    },
    /// Every configured stage in order.
    RunAll,
    /// Print the effective configuration.
    Config,
}

#[derive(Subcommand, Debug)]
enum RunOnly {
    Run,
}

#[derive(Subcommand, Debug)]
enum PropensityAction {
    Fit,
    Stratify,
    Balance,
    Refine,
}

#[derive(Subcommand, Debug)]
enum MlAction {
    Kmeans,
    GpClassify,
    GpRegress,
    Simulate,
}

fn load_config(g: &Global) -> Result<RunConfig, RunError> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for kv in &g.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| RunError::config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k, v)?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(o) = &g.out {
        cfg.out_dir = o.clone();
    }
    if let Some(e) = &g.extracts {
        cfg.extracts_dir = e.clone();
    }
    if let Some(s) = &g.stages {
        cfg.set("stages", s)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare(cfg: &RunConfig, stage: Stage) -> Result<(), RunError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| RunError::data(stage, format!("{}: {e}", cfg.out_dir.display())))
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let cfg = load_config(&cli.global)?;
    match cli.command {
        Command::Config => print!("{}", cfg.describe()),
        Command::Synth { n, no_exclusions } => {
            let mut spec = SynthSpec { n: n.unwrap_or(cfg.synth_n), seed: cfg.seed, ..SynthSpec::default() };
            if no_exclusions {
                spec.exclusions = ExclusionSpec::none();
            }
            let dir = cli.global.out.clone().unwrap_or_else(|| cfg.extracts_dir.clone());
            let out = synth_generate(&spec).map_err(|e| RunError::config(e.to_string()))?;
            out.write_dir(&dir).map_err(|e| RunError::data(Stage::Cohort, e.to_string()))?;
            println!("wrote {} stays to {}", out.manifest.original_count, dir.display());
        }
        Command::Cohort { action: RunOnly::Run } => {
            prepare(&cfg, Stage::Cohort)?;
            let out = cohort_stage(&cfg, &load_extracts(&cfg)?)?;
            println!("{} of {} stays survive", out.survivors.len(), out.trace.original_count);
        }
        Command::Varprep { action: RunOnly::Run } => {
            prepare(&cfg, Stage::Varprep)?;
            let survivors = read_survivors(&cfg)?;
            let extracts = load_extracts(&cfg).map_err(|e| RunError { stage: Some(Stage::Varprep), ..e })?;
            let asm = varprep_stage(&cfg, &extracts, &survivors)?;
            println!("{} patients, {} rejected", asm.group.n(), asm.rejected.len());
        }
        Command::Propensity { action } => {
            prepare(&cfg, Stage::Propensity)?;
            let group = read_study_group(&cfg, Stage::Propensity)?;
            let step = match action {
                PropensityAction::Fit => PropensityStep::Fit,
                PropensityAction::Stratify => PropensityStep::Stratify,
                PropensityAction::Balance => PropensityStep::Balance,
                PropensityAction::Refine => PropensityStep::Refine,
            };
            if let Some(out) = propensity_steps(&cfg, &group, step)? {
                println!("final model: {}", out.refinement.spec);
            }
        }
        Command::Outcome { action: RunOnly::Run } => {
            prepare(&cfg, Stage::Outcome)?;
            let group = read_study_group(&cfg, Stage::Outcome)?;
            let strat = read_stratification(&cfg, &group, Stage::Outcome)?;
            let out = outcome_stage(&cfg, &group, &strat)?;
            println!("{} models fitted, {} failed", out.reports.len(), out.failures.len());
        }
        Command::Ml { action } => {
            prepare(&cfg, Stage::Ml)?;
            let group = read_study_group(&cfg, Stage::Ml)?;
            let opts = match action {
                MlAction::Kmeans => MlOptions { tasks: vec![], simulate: false },
                MlAction::GpClassify => MlOptions { tasks: vec![Task::Classify], simulate: false },
                MlAction::GpRegress => MlOptions { tasks: vec![Task::Regress], simulate: false },
                MlAction::Simulate => MlOptions::default(),
            };
            let out = ml_stage(&cfg, &group, &opts)?;
            println!("{} clusters, {} GP runs", out.clusters.k, out.runs.len());
        }
        Command::RunAll => {
            let out = run_all(&cfg)?;
            println!("{} report files in {}", out.files.len(), cfg.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
