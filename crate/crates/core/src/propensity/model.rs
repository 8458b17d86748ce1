use crate::cohort::PatientKey;
use crate::regress::{fit_logistic, stepwise_select, LogitFit, ModelSpec, StepwiseOptions, StepwiseResult, Table, Var};
use crate::varprep::{StudyGroup, TREATMENT};

use super::balance::BALANCE_VARS;
use super::{propensity_scores, stratify, PropensityError, Stratification};

/// Model-coded covariates plus the 0/1 treatment indicator.
pub fn treatment_design(group: &StudyGroup) -> (Table, Vec<f64>) {
    (group.model_table(), group.model_column(TREATMENT))
}

pub fn keys(group: &StudyGroup) -> Vec<PatientKey> {
    group.rows().iter().map(|r| r.key).collect()
}

/// Covariates eligible for the score model: x2..x56 without missing values.
pub fn candidate_vars(table: &Table) -> Vec<Var> {
    BALANCE_VARS.map(Var::X).filter(|&v| table.has(v)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropensityModel {
    pub spec: ModelSpec,
    pub fit: LogitFit,
    pub stepwise: Option<StepwiseResult>,
}

/// Two-phase stepwise score model over every eligible covariate.
pub fn select_propensity_model(group: &StudyGroup, opts: &StepwiseOptions) -> Result<PropensityModel, PropensityError> {
    let (table, y) = treatment_design(group);
    let res = stepwise_select(&table, &candidate_vars(&table), &y, opts)?;
    Ok(PropensityModel { spec: res.spec.clone(), fit: res.fit.clone(), stepwise: Some(res) })
}

/// Score model with a fixed term list.
pub fn fit_propensity_model(
    group: &StudyGroup,
    spec: &ModelSpec,
    opts: &crate::regress::LogitOptions,
) -> Result<PropensityModel, PropensityError> {
    let (table, y) = treatment_design(group);
    let fit = fit_logistic(&table, spec, &y, opts)?;
    if !fit.converged {
        return Err(PropensityError::NotConverged);
    }
    Ok(PropensityModel { spec: spec.clone(), fit, stepwise: None })
}

/// Scores and `k`-stratum assignment for a fitted model.
pub fn stratify_group(group: &StudyGroup, fit: &LogitFit, k: usize) -> Result<Stratification, PropensityError> {
    let scores = propensity_scores(fit, &group.model_table())?;
    stratify(&scores, &keys(group), k)
}

impl Stratification {
    pub fn to_csv(&self, group: &StudyGroup) -> String {
        use crate::report::{line, num};
        let mut out = line(&["subject_id", "hadm_id", "icustay_id", "score", "quintile"]);
        for (i, r) in group.rows().iter().enumerate() {
            out.push_str(&line(&[
                r.key.subject_id.to_string(),
                r.key.hadm_id.to_string(),
                r.key.icustay_id.to_string(),
                num(self.scores[i]),
                self.assignment[i].to_string(),
            ]));
        }
        out
    }
}
