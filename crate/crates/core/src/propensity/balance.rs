use crate::stats::{five_number_summary, one_way_anova, two_way_anova_2xk, FiveNumber};
use crate::varprep::StudyGroup;

use super::{PropensityError, Stratification};

/// Covariates assessed for balance: everything except treatment and the
/// two outcomes.
pub const BALANCE_VARS: std::ops::RangeInclusive<usize> = 2..=56;

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateBalance {
    pub var: usize,
    /// One-way treated vs untreated F before stratification.
    pub f_pre: f64,
    pub p_pre: f64,
    /// Treatment main effect F within strata.
    pub f_primary: f64,
    pub p_primary: f64,
    /// Treatment x stratum interaction F.
    pub f_secondary: f64,
    pub p_secondary: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub covariates: Vec<CovariateBalance>,
    pub summary_pre: Option<FiveNumber>,
    pub summary_primary: Option<FiveNumber>,
    pub summary_secondary: Option<FiveNumber>,
}

impl BalanceReport {
    pub fn get(&self, var: usize) -> Option<&CovariateBalance> {
        self.covariates.iter().find(|c| c.var == var)
    }

    pub fn to_csv(&self) -> String {
        use crate::report::{line, num};
        let mut out = line(&[
            "covariate", "name", "F_pre", "p_pre", "F_primary", "p_primary", "F_secondary", "p_secondary", "warnings",
        ]);
        for c in &self.covariates {
            out.push_str(&line(&[
                format!("x{}", c.var),
                crate::varprep::variable_name(c.var),
                num(c.f_pre),
                num(c.p_pre),
                num(c.f_primary),
                num(c.p_primary),
                num(c.f_secondary),
                num(c.p_secondary),
                c.warnings.join("; "),
            ]));
        }
        out
    }

    /// Five-number summaries of the three F columns.
    pub fn summary_csv(&self) -> String {
        use crate::report::{line, num};
        let mut out = line(&["statistic", "min", "q1", "median", "q3", "max"]);
        for (name, s) in [
            ("F_pre", &self.summary_pre),
            ("F_primary", &self.summary_primary),
            ("F_secondary", &self.summary_secondary),
        ] {
            let cells = match s {
                Some(f) => [f.min, f.q1, f.median, f.q3, f.max].map(num).to_vec(),
                None => vec![String::new(); 5],
            };
            let mut row = vec![name.to_string()];
            row.extend(cells);
            out.push_str(&line(&row));
        }
        out
    }
}

fn summary(values: impl Iterator<Item = f64>) -> Option<FiveNumber> {
    let v: Vec<f64> = values.filter(|x| !x.is_nan()).collect();
    five_number_summary(&v).ok()
}

/// Pre- and post-stratification balance of a single covariate.
pub fn covariate_balance(
    group: &StudyGroup,
    strat: &Stratification,
    var: usize,
) -> Result<CovariateBalance, PropensityError> {
    if strat.assignment.len() != group.n() {
        return Err(PropensityError::LengthMismatch);
    }
    let treated = group.treatment();
    let values = group.column(var);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    let mut warnings = Vec::new();
    if keep.len() < values.len() {
        warnings.push(format!("{} missing values ignored", values.len() - keep.len()));
    }
    let v: Vec<f64> = keep.iter().map(|&i| values[i]).collect();
    let t: Vec<bool> = keep.iter().map(|&i| treated[i]).collect();
    let s: Vec<usize> = keep.iter().map(|&i| strat.assignment[i]).collect();

    let arms: [Vec<f64>; 2] = [
        v.iter().zip(&t).filter(|(_, &t)| !t).map(|(x, _)| *x).collect(),
        v.iter().zip(&t).filter(|(_, &t)| t).map(|(x, _)| *x).collect(),
    ];
    let (f_pre, p_pre) = match one_way_anova(&arms) {
        Ok(r) => {
            if let Some(d) = r.degenerate {
                warnings.push(format!("pre-stratification F {d:?}"));
            }
            (r.f, r.p_value)
        }
        Err(e) => {
            warnings.push(format!("pre-stratification F unavailable: {e}"));
            (f64::NAN, f64::NAN)
        }
    };
    let (f_primary, p_primary, f_secondary, p_secondary) = match two_way_anova_2xk(&v, &t, &s, strat.strata()) {
        Ok(r) => {
            warnings.extend(r.warnings.iter().map(|w| w.to_string()));
            (r.f_primary, r.p_primary, r.f_secondary, r.p_secondary)
        }
        Err(e) => {
            warnings.push(format!("two-way F unavailable: {e}"));
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        }
    };
    Ok(CovariateBalance { var, f_pre, p_pre, f_primary, p_primary, f_secondary, p_secondary, warnings })
}

/// Balance of every covariate x2..x56 under `strat`.
pub fn assess_balance(group: &StudyGroup, strat: &Stratification) -> Result<BalanceReport, PropensityError> {
    let covariates: Vec<CovariateBalance> =
        BALANCE_VARS.map(|v| covariate_balance(group, strat, v)).collect::<Result<_, _>>()?;
    Ok(BalanceReport {
        summary_pre: summary(covariates.iter().map(|c| c.f_pre)),
        summary_primary: summary(covariates.iter().map(|c| c.f_primary)),
        summary_secondary: summary(covariates.iter().map(|c| c.f_secondary)),
        covariates,
    })
}
