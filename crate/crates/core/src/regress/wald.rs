use crate::stats::{tail_probability, Distribution, TestResult};

use super::{LinearFit, LogitFit, ModelTerm, RegressError};

/// A fitted model whose coefficients can be Wald-tested.
#[derive(Debug, Clone, Copy)]
pub enum Fit<'a> {
    Logit(&'a LogitFit),
    Linear(&'a LinearFit),
}

impl<'a> From<&'a LogitFit> for Fit<'a> {
    fn from(f: &'a LogitFit) -> Self {
        Fit::Logit(f)
    }
}

impl<'a> From<&'a LinearFit> for Fit<'a> {
    fn from(f: &'a LinearFit) -> Self {
        Fit::Linear(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTest {
    pub term: ModelTerm,
    pub estimate: f64,
    pub standard_error: f64,
    pub test: TestResult,
}

/// Two-sided Wald test per coefficient: normal reference for logistic
/// fits, t with n - p degrees of freedom for linear fits.
pub fn coefficient_p_values<'a>(fit: impl Into<Fit<'a>>) -> Result<Vec<CoefficientTest>, RegressError> {
    let (spec, coef, se, dist) = match fit.into() {
        Fit::Logit(f) => {
            if !f.converged {
                return Err(RegressError::NotConverged);
            }
            (&f.spec, &f.coefficients, &f.standard_errors, Distribution::Normal)
        }
        Fit::Linear(f) => {
            let dof = f.n.saturating_sub(f.spec.len());
            if dof == 0 {
                return Err(RegressError::TooFewRows { n: f.n, p: f.spec.len() });
            }
            (&f.spec, &f.coefficients, &f.standard_errors, Distribution::StudentT(dof as f64))
        }
    };
    spec.terms()
        .iter()
        .zip(coef.iter().zip(se))
        .map(|(term, (&b, &s))| {
            let stat = if b == 0.0 {
                0.0
            } else if s > 0.0 {
                b / s
            } else {
                f64::INFINITY.copysign(b)
            };
            let df1 = match dist {
                Distribution::StudentT(d) => d,
                _ => f64::INFINITY,
            };
            Ok(CoefficientTest {
                term: *term,
                estimate: b,
                standard_error: s,
                test: TestResult { statistic: stat, p_value: tail_probability(dist, stat)?, df1, df2: None },
            })
        })
        .collect()
}
