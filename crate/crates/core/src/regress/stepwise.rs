use crate::stats::{tail_probability, Distribution};

use super::{fit_logistic, LogitFit, LogitOptions, ModelSpec, ModelTerm, RegressError, Table, Var};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepwiseOptions {
    /// Entry threshold on the likelihood-ratio p-value.
    pub p_enter: f64,
    /// Run the second phase over squares and pairwise products.
    pub interactions: bool,
    pub logit: LogitOptions,
}

impl Default for StepwiseOptions {
    fn default() -> Self {
        StepwiseOptions { p_enter: 0.05, interactions: true, logit: LogitOptions::default() }
    }
}

/// One accepted entry.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEntry {
    pub phase: u8,
    pub term: ModelTerm,
    pub lr_statistic: f64,
    pub p_value: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepwiseResult {
    pub spec: ModelSpec,
    pub fit: LogitFit,
    pub entries: Vec<StepEntry>,
    pub warnings: Vec<String>,
}

fn is_binary(col: &[f64]) -> bool {
    col.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Forward selection of `terms` into `fit` until no candidate enters.
fn forward(
    table: &Table,
    outcome: &[f64],
    mut fit: LogitFit,
    terms: &[ModelTerm],
    phase: u8,
    opts: &StepwiseOptions,
    entries: &mut Vec<StepEntry>,
    warnings: &mut Vec<String>,
) -> Result<LogitFit, RegressError> {
    let mut skipped: Vec<ModelTerm> = Vec::new();
    loop {
        let mut best: Option<(f64, LogitFit)> = None;
        for term in terms {
            if fit.spec.contains(term) || skipped.contains(term) {
                continue;
            }
            let spec = fit.spec.with_term(*term)?;
            let trial = match fit_logistic(table, &spec, outcome, &opts.logit) {
                Ok(f) if f.converged => f,
                Ok(_) => {
                    warnings.push(format!("skipped {term}: fit did not converge"));
                    skipped.push(*term);
                    continue;
                }
                Err(RegressError::RankDeficient { .. }) => {
                    warnings.push(format!("skipped {term}: design becomes rank deficient"));
                    skipped.push(*term);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let lr = 2.0 * (trial.log_likelihood - fit.log_likelihood);
            if best.as_ref().is_none_or(|(b, _)| lr > *b) {
                best = Some((lr, trial));
            }
        }
        let Some((lr, trial)) = best else { return Ok(fit) };
        let lr = lr.max(0.0);
        let p = tail_probability(Distribution::ChiSquared(1.0), lr)?;
        if !(p < opts.p_enter) || trial.log_likelihood <= fit.log_likelihood {
            return Ok(fit);
        }
        let term = *trial.spec.terms().last().unwrap();
        entries.push(StepEntry {
            phase,
            term,
            lr_statistic: lr,
            p_value: p,
            log_likelihood: trial.log_likelihood,
        });
        fit = trial;
    }
}

/// Two-phase forward stepwise logistic selection: main effects from
/// `candidates`, then squares and pairwise products of the selected ones.
/// Squares of 0/1 columns are not considered.
pub fn stepwise_select(
    table: &Table,
    candidates: &[Var],
    outcome: &[f64],
    opts: &StepwiseOptions,
) -> Result<StepwiseResult, RegressError> {
    if candidates.is_empty() {
        return Err(RegressError::EmptyCandidates);
    }
    let mut vars = candidates.to_vec();
    vars.sort();
    vars.dedup();
    let mut entries = Vec::new();
    let mut warnings = Vec::new();

    let base = fit_logistic(table, &ModelSpec::intercept_only(), outcome, &opts.logit)?;
    let mains: Vec<ModelTerm> = vars.iter().map(|&v| ModelTerm::Main(v)).collect();
    let mut fit = forward(table, outcome, base, &mains, 1, opts, &mut entries, &mut warnings)?;

    if opts.interactions {
        let mut selected = fit.spec.main_vars();
        selected.sort();
        let mut products = Vec::new();
        for (a, &vi) in selected.iter().enumerate() {
            if !is_binary(table.column(vi)?) {
                products.push(ModelTerm::Square(vi));
            }
            for &vj in &selected[a + 1..] {
                products.push(ModelTerm::Interaction(vi, vj));
            }
        }
        fit = forward(table, outcome, fit, &products, 2, opts, &mut entries, &mut warnings)?;
    }

    Ok(StepwiseResult { spec: fit.spec.clone(), fit, entries, warnings })
}
