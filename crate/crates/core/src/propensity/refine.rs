use crate::regress::{fit_logistic, LogitFit, LogitOptions, ModelSpec, ModelTerm, RegressError, Var};
use crate::stats::{critical_value, Distribution};
use crate::varprep::{is_binary, StudyGroup};

use super::balance::{assess_balance, covariate_balance, BALANCE_VARS};
use super::model::{stratify_group, treatment_design};
use super::{PropensityError, Stratification};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Share of excluded covariates (ranked by F) that become candidates.
    pub fraction: f64,
    pub max_passes: usize,
    /// A candidate's F must exceed the F(1, df) critical value at this
    /// level to be tried; 0 tries every candidate.
    pub large_f_alpha: f64,
    pub strata: usize,
    pub logit: LogitOptions,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { fraction: 0.25, max_passes: 1, large_f_alpha: 0.05, strata: 5, logit: LogitOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptForm {
    Main,
    Square,
    Interaction(usize),
}

impl std::fmt::Display for AttemptForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AttemptForm::Main => write!(f, "main"),
            AttemptForm::Square => write!(f, "square"),
            AttemptForm::Interaction(j) => write!(f, "interaction(x{j})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attempt {
    pub pass: usize,
    pub var: usize,
    pub form: AttemptForm,
    pub f_before: f64,
    /// Absent when the refit failed or the candidate was not tried.
    pub f_after: Option<f64>,
    pub accepted: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub spec: ModelSpec,
    pub fit: LogitFit,
    pub strat: Stratification,
    pub log: Vec<Attempt>,
}

impl Refinement {
    pub fn accepted(&self) -> impl Iterator<Item = &Attempt> {
        self.log.iter().filter(|a| a.accepted)
    }

    pub fn log_csv(&self) -> String {
        use crate::report::{line, num, opt};
        let mut out = line(&["pass", "covariate", "form", "F_before", "F_after", "accepted", "note"]);
        for a in &self.log {
            out.push_str(&line(&[
                a.pass.to_string(),
                format!("x{}", a.var),
                a.form.to_string(),
                num(a.f_before),
                opt(a.f_after),
                a.accepted.to_string(),
                a.note.clone(),
            ]));
        }
        out
    }
}

fn mentions(spec: &ModelSpec, v: Var) -> bool {
    spec.terms().iter().any(|t| t.vars().contains(&v))
}

fn term_for(var: usize, form: AttemptForm) -> ModelTerm {
    match form {
        AttemptForm::Main => ModelTerm::Main(Var::X(var)),
        AttemptForm::Square => ModelTerm::Square(Var::X(var)),
        AttemptForm::Interaction(j) => ModelTerm::product(Var::X(var), Var::X(j)),
    }
}

/// Adds excluded covariates whose own treatment F drops when they enter
/// the score model. Candidates are the top `fraction` of excluded
/// covariates by F; each tries its main effect, then its square, then
/// products with in-model main effects, keeping the first that helps.
pub fn refine_model(
    group: &StudyGroup,
    spec: &ModelSpec,
    strat: &Stratification,
    opts: &RefineOptions,
) -> Result<Refinement, PropensityError> {
    let (table, y) = treatment_design(group);
    let mut fit = fit_logistic(&table, spec, &y, &opts.logit)?;
    if !fit.converged {
        return Err(PropensityError::NotConverged);
    }
    let mut spec = spec.clone();
    let mut strat = strat.clone();
    let mut log = Vec::new();

    for pass in 1..=opts.max_passes.max(1) {
        let balance = assess_balance(group, &strat)?;
        let mut excluded: Vec<(usize, f64)> = BALANCE_VARS
            .filter(|&v| table.has(Var::X(v)) && !mentions(&spec, Var::X(v)))
            .map(|v| (v, balance.get(v).map_or(f64::NAN, |b| b.f_primary)))
            .collect();
        excluded.sort_by(|a, b| {
            let fa = if a.1.is_nan() { f64::NEG_INFINITY } else { a.1 };
            let fb = if b.1.is_nan() { f64::NEG_INFINITY } else { b.1 };
            fb.total_cmp(&fa).then(a.0.cmp(&b.0))
        });
        let take = (opts.fraction * excluded.len() as f64).ceil() as usize;
        let threshold = if opts.large_f_alpha > 0.0 {
            let df2 = group.n().saturating_sub(2 * strat.strata()).max(1) as f64;
            critical_value(Distribution::F(1.0, df2), opts.large_f_alpha)?
        } else {
            f64::NEG_INFINITY
        };

        let mut any = false;
        for &(var, _) in excluded.iter().take(take) {
            let f_before = covariate_balance(group, &strat, var)?.f_primary;
            if !(f_before > threshold) {
                log.push(Attempt {
                    pass,
                    var,
                    form: AttemptForm::Main,
                    f_before,
                    f_after: None,
                    accepted: false,
                    note: format!("not tried: F below {}", crate::report::num(threshold)),
                });
                continue;
            }
            let mut forms = vec![AttemptForm::Main];
            if !is_binary(var) {
                forms.push(AttemptForm::Square);
            }
            forms.extend(spec.main_vars().into_iter().filter_map(|v| match v {
                Var::X(j) if j != var => Some(AttemptForm::Interaction(j)),
                _ => None,
            }));
            for form in forms {
                let term = term_for(var, form);
                let Ok(trial_spec) = spec.with_term(term) else { continue };
                let trial = match fit_logistic(&table, &trial_spec, &y, &opts.logit) {
                    Ok(f) if f.converged => f,
                    Ok(_) => {
                        log.push(Attempt { pass, var, form, f_before, f_after: None, accepted: false, note: "fit did not converge".into() });
                        continue;
                    }
                    Err(RegressError::RankDeficient { term }) => {
                        log.push(Attempt {
                            pass,
                            var,
                            form,
                            f_before,
                            f_after: None,
                            accepted: false,
                            note: format!("rank deficient at {term}"),
                        });
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                let trial_strat = stratify_group(group, &trial, opts.strata)?;
                let f_after = covariate_balance(group, &trial_strat, var)?.f_primary;
                let accepted = f_after < f_before;
                log.push(Attempt { pass, var, form, f_before, f_after: Some(f_after), accepted, note: String::new() });
                if accepted {
                    spec = trial_spec;
                    fit = trial;
                    strat = trial_strat;
                    any = true;
                    break;
                }
            }
        }
        if !any {
            break;
        }
    }
    Ok(Refinement { spec, fit, strat, log })
}
