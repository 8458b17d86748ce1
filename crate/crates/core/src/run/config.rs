use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::evoml::GpConfig;
use crate::stats::TTestVariant;
use crate::varprep::NUM_VARS;

use super::RunError;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Cohort,
    Varprep,
    Propensity,
    Outcome,
    Ml,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Cohort, Stage::Varprep, Stage::Propensity, Stage::Outcome, Stage::Ml];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Cohort => "cohort",
            Stage::Varprep => "varprep",
            Stage::Propensity => "propensity",
            Stage::Outcome => "outcome",
            Stage::Ml => "ml",
        })
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.to_string() == s.trim())
            .ok_or_else(|| format!("unknown stage `{}`", s.trim()))
    }
}

/// Every option of a run. Defaults follow the documented analysis choices.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub extracts_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Custom pipeline text; the built-in sixteen steps when absent.
    pub pipeline_file: Option<PathBuf>,
    /// Drug lexicon, one name per line; the built-in list when absent.
    pub lexicon_file: Option<PathBuf>,
    pub stages: Vec<Stage>,
    pub default_untreated_day: u32,
    pub t2: u32,
    pub t3: u32,
    pub mandatory: Vec<usize>,
    pub p_enter: f64,
    pub stepwise_interactions: bool,
    pub strata: usize,
    pub refine_fraction: f64,
    pub refine_max_passes: usize,
    pub refine_large_f_alpha: f64,
    pub ttest: TTestVariant,
    pub yates: bool,
    pub split_variable: usize,
    pub kmeans_k: usize,
    /// Falls back to `seed` when unset.
    pub kmeans_seed: Option<u64>,
    pub gp: GpConfig,
    pub gp_runs: usize,
    pub gp_train_fraction: f64,
    pub seed: u64,
    pub synth_n: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            extracts_dir: PathBuf::from("extracts"),
            out_dir: PathBuf::from("out"),
            pipeline_file: None,
            lexicon_file: None,
            stages: Stage::ALL.to_vec(),
            default_untreated_day: 4,
            t2: 3,
            t3: 4,
            mandatory: (1..=NUM_VARS).collect(),
            p_enter: 0.05,
            stepwise_interactions: true,
            strata: 5,
            refine_fraction: 0.25,
            refine_max_passes: 1,
            refine_large_f_alpha: 0.05,
            ttest: TTestVariant::Welch,
            yates: false,
            split_variable: 6,
            kmeans_k: 4,
            kmeans_seed: None,
            gp: GpConfig::default(),
            gp_runs: 10,
            gp_train_fraction: 0.7,
            seed: 1,
            synth_n: 200,
        }
    }
}

/// Documented keys, in the order `describe` prints them.
pub const KEYS: &[&str] = &[
    "extracts_dir",
    "out_dir",
    "pipeline_file",
    "lexicon_file",
    "stages",
    "default_untreated_day",
    "t2",
    "t3",
    "mandatory",
    "p_enter",
    "stepwise_interactions",
    "strata",
    "refine_fraction",
    "refine_max_passes",
    "refine_large_f_alpha",
    "ttest",
    "yates",
    "split_variable",
    "kmeans_k",
    "kmeans_seed",
    "gp_population",
    "gp_generations",
    "gp_p_reproduction",
    "gp_p_crossover",
    "gp_p_mutation",
    "gp_max_depth",
    "gp_init_depth",
    "gp_tournament",
    "gp_runs",
    "gp_train_fraction",
    "seed",
    "synth_n",
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, RunError> {
    v.parse().map_err(|_| RunError::config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, RunError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(RunError::config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn list<T>(s: &str, f: impl Fn(&str) -> Result<T, RunError>) -> Result<Vec<T>, RunError> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(f).collect()
}

impl RunConfig {
    /// Applies one `key = value` setting; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), RunError> {
        let v = value.trim();
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key.trim() {
            "extracts_dir" => self.extracts_dir = PathBuf::from(v),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "pipeline_file" => self.pipeline_file = opt_path(v),
            "lexicon_file" => self.lexicon_file = opt_path(v),
            "stages" => {
                let mut s = if v == "all" { Stage::ALL.to_vec() } else { list(v, |t| t.parse().map_err(RunError::config))? };
                s.sort();
                s.dedup();
                self.stages = s;
            }
            "default_untreated_day" => self.default_untreated_day = parse(key, v)?,
            "t2" => self.t2 = parse(key, v)?,
            "t3" => self.t3 = parse(key, v)?,
            "mandatory" => {
                self.mandatory = if v == "all" { (1..=NUM_VARS).collect() } else { list(v, |t| parse(key, t.trim_start_matches('x')))? }
            }
            "p_enter" => self.p_enter = parse(key, v)?,
            "stepwise_interactions" => self.stepwise_interactions = parse_bool(key, v)?,
            "strata" => self.strata = parse(key, v)?,
            "refine_fraction" => self.refine_fraction = parse(key, v)?,
            "refine_max_passes" => self.refine_max_passes = parse(key, v)?,
            "refine_large_f_alpha" => self.refine_large_f_alpha = parse(key, v)?,
            "ttest" => self.ttest = v.parse().map_err(RunError::config)?,
            "yates" => self.yates = parse_bool(key, v)?,
            "split_variable" => self.split_variable = parse(key, v.trim_start_matches('x'))?,
            "kmeans_k" => self.kmeans_k = parse(key, v)?,
            "kmeans_seed" => self.kmeans_seed = if v.is_empty() { None } else { Some(parse(key, v)?) },
            "gp_population" => self.gp.population_size = parse(key, v)?,
            "gp_generations" => self.gp.generations = parse(key, v)?,
            "gp_p_reproduction" => self.gp.p_reproduction = parse(key, v)?,
            "gp_p_crossover" => self.gp.p_crossover = parse(key, v)?,
            "gp_p_mutation" => self.gp.p_mutation = parse(key, v)?,
            "gp_max_depth" => self.gp.max_depth = parse(key, v)?,
            "gp_init_depth" => self.gp.init_depth = parse(key, v)?,
            "gp_tournament" => self.gp.tournament_size = parse(key, v)?,
            "gp_runs" => self.gp_runs = parse(key, v)?,
            "gp_train_fraction" => self.gp_train_fraction = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "synth_n" => self.synth_n = parse(key, v)?,
            other => return Err(RunError::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self, RunError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), RunError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| RunError::config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k, v).map_err(|e| RunError::config(format!("line {}: {}", n + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::config(m));
        if self.strata < 2 {
            return bad("strata must be at least 2".into());
        }
        if !(self.p_enter > 0.0 && self.p_enter < 1.0) {
            return bad("p_enter must lie in (0, 1)".into());
        }
        if !(self.refine_fraction > 0.0 && self.refine_fraction <= 1.0) {
            return bad("refine_fraction must lie in (0, 1]".into());
        }
        if !(0.0..1.0).contains(&self.refine_large_f_alpha) {
            return bad("refine_large_f_alpha must lie in [0, 1)".into());
        }
        if let Some(&m) = self.mandatory.iter().find(|&&m| m == 0 || m > NUM_VARS) {
            return bad(format!("mandatory variable x{m} out of range"));
        }
        if !(2..=56).contains(&self.split_variable) {
            return bad(format!("split_variable x{} must be a covariate x2..x56", self.split_variable));
        }
        if self.default_untreated_day == 0 || self.t2 == 0 || self.t3 == 0 {
            return bad("timepoint days start at 1".into());
        }
        if self.kmeans_k == 0 {
            return bad("kmeans_k must be at least 1".into());
        }
        if !(self.gp_train_fraction > 0.0 && self.gp_train_fraction <= 1.0) {
            return bad("gp_train_fraction must lie in (0, 1]".into());
        }
        self.gp.validate().map_err(|e| RunError::config(e.to_string()))
    }

    /// Effective settings as `key = value` lines.
    pub fn describe(&self) -> String {
        use crate::report::num;
        let path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let join = |v: Vec<String>| v.join(",");
        let vals: BTreeMap<&str, String> = [
            ("extracts_dir", self.extracts_dir.display().to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("pipeline_file", path(&self.pipeline_file)),
            ("lexicon_file", path(&self.lexicon_file)),
            ("stages", join(self.stages.iter().map(Stage::to_string).collect())),
            ("default_untreated_day", self.default_untreated_day.to_string()),
            ("t2", self.t2.to_string()),
            ("t3", self.t3.to_string()),
            ("mandatory", join(self.mandatory.iter().map(usize::to_string).collect())),
            ("p_enter", num(self.p_enter)),
            ("stepwise_interactions", self.stepwise_interactions.to_string()),
            ("strata", self.strata.to_string()),
            ("refine_fraction", num(self.refine_fraction)),
            ("refine_max_passes", self.refine_max_passes.to_string()),
            ("refine_large_f_alpha", num(self.refine_large_f_alpha)),
            ("ttest", format!("{:?}", self.ttest).to_lowercase()),
            ("yates", self.yates.to_string()),
            ("split_variable", self.split_variable.to_string()),
            ("kmeans_k", self.kmeans_k.to_string()),
            ("kmeans_seed", self.kmeans_seed.map_or(String::new(), |s| s.to_string())),
            ("gp_population", self.gp.population_size.to_string()),
            ("gp_generations", self.gp.generations.to_string()),
            ("gp_p_reproduction", num(self.gp.p_reproduction)),
            ("gp_p_crossover", num(self.gp.p_crossover)),
            ("gp_p_mutation", num(self.gp.p_mutation)),
            ("gp_max_depth", self.gp.max_depth.to_string()),
            ("gp_init_depth", self.gp.init_depth.to_string()),
            ("gp_tournament", self.gp.tournament_size.to_string()),
            ("gp_runs", self.gp_runs.to_string()),
            ("gp_train_fraction", num(self.gp_train_fraction)),
            ("seed", self.seed.to_string()),
            ("synth_n", self.synth_n.to_string()),
        ]
        .into_iter()
        .collect();
        KEYS.iter().map(|k| format!("{k} = {}\n", vals[k])).collect()
    }
}
