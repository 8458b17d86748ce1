use crate::linalg::Qr;

use super::design::Design;
use super::{ModelSpec, RegressError, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub spec: ModelSpec,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// Residual sum of squares over n - p.
    pub residual_variance: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl LinearFit {
    pub fn coefficient(&self, term: &super::ModelTerm) -> Option<f64> {
        self.spec.position(term).map(|i| self.coefficients[i])
    }
}

/// Ordinary least squares of `outcome` on `spec`.
pub fn fit_linear(table: &Table, spec: &ModelSpec, outcome: &[f64]) -> Result<LinearFit, RegressError> {
    if outcome.len() != table.n_rows() {
        return Err(RegressError::LengthMismatch { expected: table.n_rows(), got: outcome.len() });
    }
    if outcome.iter().any(|y| !y.is_finite()) {
        return Err(RegressError::NonFinite("outcome".into()));
    }
    let design = Design::build(table, spec)?;
    let (n, p) = (design.n(), design.p());
    let qr = Qr::new(&design.scaled, true);
    let beta_scaled = qr.solve_least_squares(outcome);

    let fitted: Vec<f64> = (0..n)
        .map(|i| design.scaled.iter().zip(&beta_scaled).map(|(c, b)| c[i] * b).sum())
        .collect();
    let rss: f64 = outcome.iter().zip(&fitted).map(|(y, f)| (y - f).powi(2)).sum();
    let ybar = outcome.iter().sum::<f64>() / n as f64;
    let tss: f64 = outcome.iter().map(|y| (y - ybar).powi(2)).sum();
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    let residual_variance = if n > p { rss / (n - p) as f64 } else { 0.0 };

    let mut cov = qr.xtx_inverse();
    cov.data.iter_mut().for_each(|v| *v *= residual_variance);
    let (coefficients, standard_errors) = design.to_original(&beta_scaled, &cov);

    Ok(LinearFit { spec: spec.clone(), coefficients, standard_errors, residual_variance, r_squared, n })
}

#[cfg(test)]
mod tests {
    use super::super::Var;
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2.0 + 3.0 * x).collect();
        let t = Table::new(10).with(Var::X(1), x).unwrap();
        let fit = fit_linear(&t, &ModelSpec::from_mains([Var::X(1)]).unwrap(), &y).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_outcome() {
        let x: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let t = Table::new(10).with(Var::X(1), x).unwrap();
        let fit = fit_linear(&t, &ModelSpec::from_mains([Var::X(1)]).unwrap(), &[4.0; 10]).unwrap();
        assert!(fit.coefficients[1].abs() < 1e-12);
        assert_eq!(fit.r_squared, 0.0);
        assert!(fit.residual_variance >= 0.0);
    }
}
