use std::fmt;

use crate::regress::{
    coefficient_p_values, fit_linear, fit_logistic, CoefficientTest, LogitOptions, ModelSpec, ModelTerm, Table, Var,
};
use crate::stats::median;
use crate::varprep::{StudyGroup, LOS, MORTALITY};

use super::OutcomeError;

pub const SIGNIFICANCE: f64 = 0.05;

/// Strength-of-evidence label for a p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvidenceBand {
    Absent,
    Weak,
    Moderate,
    Strong,
    VeryStrong,
}

impl EvidenceBand {
    pub fn from_p(p: f64) -> Self {
        if p < 0.001 {
            EvidenceBand::VeryStrong
        } else if p <= 0.01 {
            EvidenceBand::Strong
        } else if p <= 0.05 {
            EvidenceBand::Moderate
        } else if p <= 0.1 {
            EvidenceBand::Weak
        } else {
            EvidenceBand::Absent
        }
    }
}

impl fmt::Display for EvidenceBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvidenceBand::Absent => "absent",
            EvidenceBand::Weak => "weak",
            EvidenceBand::Moderate => "moderate",
            EvidenceBand::Strong => "strong",
            EvidenceBand::VeryStrong => "very strong",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeModelId {
    AMortality,
    ALos,
    B,
    CLessSick,
    CSicker,
}

impl fmt::Display for OutcomeModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeModelId::AMortality => "A.Mortality",
            OutcomeModelId::ALos => "A.LOS",
            OutcomeModelId::B => "B",
            OutcomeModelId::CLessSick => "C.LessSick",
            OutcomeModelId::CSicker => "C.Sicker",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermReport {
    pub term: ModelTerm,
    pub beta: f64,
    pub standard_error: f64,
    pub p_value: f64,
    pub band: EvidenceBand,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModelReport {
    pub id: OutcomeModelId,
    pub n: usize,
    pub terms: Vec<TermReport>,
    /// Log-likelihood for logistic models.
    pub log_likelihood: Option<f64>,
    /// The term whose significance is the model's headline decision.
    pub decision_term: ModelTerm,
}

impl OutcomeModelReport {
    pub fn term(&self, t: &ModelTerm) -> Option<&TermReport> {
        self.terms.iter().find(|r| r.term == *t)
    }

    /// Null hypothesis for the decision term rejected at 0.05.
    pub fn decision(&self) -> bool {
        self.term(&self.decision_term).is_some_and(|t| t.significant)
    }
}

const MODEL_A_VARS: [usize; 6] = [1, 2, 3, 5, 10, 15];

pub fn model_a_spec() -> ModelSpec {
    let mut terms: Vec<ModelTerm> = MODEL_A_VARS.iter().map(|&i| ModelTerm::Main(Var::X(i))).collect();
    terms.push(ModelTerm::Main(Var::Score));
    ModelSpec::new(terms).expect("distinct terms")
}

pub fn model_b_spec() -> ModelSpec {
    model_a_spec().with_term(cross_term()).expect("distinct terms")
}

fn treatment_term() -> ModelTerm {
    ModelTerm::Main(Var::X(1))
}

fn cross_term() -> ModelTerm {
    ModelTerm::Interaction(Var::X(1), Var::X(5))
}

fn design(group: &StudyGroup, scores: &[f64]) -> Result<Table, OutcomeError> {
    if scores.len() != group.n() {
        return Err(OutcomeError::ScoreCount { expected: group.n(), got: scores.len() });
    }
    let mut t = group.model_table();
    t.insert(Var::Score, scores.to_vec())?;
    Ok(t)
}

fn report(
    id: OutcomeModelId,
    n: usize,
    tests: Vec<CoefficientTest>,
    log_likelihood: Option<f64>,
    decision_term: ModelTerm,
) -> OutcomeModelReport {
    let terms = tests
        .into_iter()
        .map(|c| TermReport {
            term: c.term,
            beta: c.estimate,
            standard_error: c.standard_error,
            p_value: c.test.p_value,
            band: EvidenceBand::from_p(c.test.p_value),
            significant: c.test.p_value < SIGNIFICANCE,
        })
        .collect();
    OutcomeModelReport { id, n, terms, log_likelihood, decision_term }
}

fn mortality_model(
    id: OutcomeModelId,
    table: &Table,
    spec: &ModelSpec,
    y: &[f64],
    decision: ModelTerm,
) -> Result<OutcomeModelReport, OutcomeError> {
    let fit = fit_logistic(table, spec, y, &LogitOptions::default())?;
    if !fit.converged {
        return Err(OutcomeError::NotConverged);
    }
    Ok(report(id, table.n_rows(), coefficient_p_values(&fit)?, Some(fit.log_likelihood), decision))
}

/// Mortality (logistic) and LOS (linear) on treatment, health condition
/// and the propensity score.
pub fn fit_model_a(
    group: &StudyGroup,
    scores: &[f64],
) -> Result<(OutcomeModelReport, OutcomeModelReport), OutcomeError> {
    let table = design(group, scores)?;
    let spec = model_a_spec();
    let mort = mortality_model(OutcomeModelId::AMortality, &table, &spec, &group.model_column(MORTALITY), treatment_term())?;
    let lin = fit_linear(&table, &spec, &group.column(LOS))?;
    let los = report(OutcomeModelId::ALos, table.n_rows(), coefficient_p_values(&lin)?, None, treatment_term());
    Ok((mort, los))
}

/// Mortality with the treatment x SAPS cross term added.
pub fn fit_model_b(group: &StudyGroup, scores: &[f64]) -> Result<OutcomeModelReport, OutcomeError> {
    let table = design(group, scores)?;
    mortality_model(OutcomeModelId::B, &table, &model_b_spec(), &group.model_column(MORTALITY), cross_term())
}

/// Rows below the median of a health-condition variable versus the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSplit {
    pub variable: usize,
    pub threshold: f64,
    pub less_sick: Vec<usize>,
    pub sicker: Vec<usize>,
}

/// Splits at the median of covariate `var`; ties at the median go to the
/// sicker subset.
pub fn split_by_median(group: &StudyGroup, var: usize) -> Result<SubsetSplit, OutcomeError> {
    let col = group.column(var);
    if col.iter().any(|v| v.is_nan()) {
        return Err(OutcomeError::MissingValues(var));
    }
    let first = col.first().copied().unwrap_or(0.0);
    if col.iter().all(|&v| v == first) {
        return Err(OutcomeError::ConstantVariable(var));
    }
    let threshold = median(&col).expect("non-empty");
    let (less_sick, sicker) = (0..col.len()).partition(|&i| col[i] < threshold);
    Ok(SubsetSplit { variable: var, threshold, less_sick, sicker })
}

/// Model B refit separately on each half of the split.
pub fn fit_model_c(
    group: &StudyGroup,
    scores: &[f64],
    split: &SubsetSplit,
) -> (Result<OutcomeModelReport, OutcomeError>, Result<OutcomeModelReport, OutcomeError>) {
    let fit = |rows: &[usize], id| {
        if scores.len() != group.n() {
            return Err(OutcomeError::ScoreCount { expected: group.n(), got: scores.len() });
        }
        let sub = group.subset(rows);
        let sub_scores: Vec<f64> = rows.iter().map(|&i| scores[i]).collect();
        let table = design(&sub, &sub_scores)?;
        mortality_model(id, &table, &model_b_spec(), &sub.model_column(MORTALITY), cross_term())
    };
    (fit(&split.less_sick, OutcomeModelId::CLessSick), fit(&split.sicker, OutcomeModelId::CSicker))
}

pub fn outcome_models_csv(reports: &[OutcomeModelReport]) -> String {
    use crate::report::{line, num};
    let mut out = line(&["model", "n", "term", "beta", "se", "p", "band", "significant", "decision_term"]);
    for r in reports {
        for t in &r.terms {
            out.push_str(&line(&[
                r.id.to_string(),
                r.n.to_string(),
                t.term.to_string(),
                num(t.beta),
                num(t.standard_error),
                num(t.p_value),
                t.band.to_string(),
                t.significant.to_string(),
                (t.term == r.decision_term).to_string(),
            ]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        assert_eq!(EvidenceBand::from_p(0.2), EvidenceBand::Absent);
        assert_eq!(EvidenceBand::from_p(0.1), EvidenceBand::Weak);
        assert_eq!(EvidenceBand::from_p(0.05), EvidenceBand::Moderate);
        assert_eq!(EvidenceBand::from_p(0.01), EvidenceBand::Strong);
        assert_eq!(EvidenceBand::from_p(0.001), EvidenceBand::Strong);
        assert_eq!(EvidenceBand::from_p(0.000_999), EvidenceBand::VeryStrong);
    }

    #[test]
    fn specs() {
        assert_eq!(model_a_spec().to_string(), "1 + x1 + x2 + x3 + x5 + x10 + x15 + V1");
        assert_eq!(model_b_spec().to_string(), "1 + x1 + x2 + x3 + x5 + x10 + x15 + V1 + x1*x5");
    }
}
