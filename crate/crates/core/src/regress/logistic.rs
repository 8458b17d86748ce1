use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve, Square};

use super::design::Design;
use super::{ModelSpec, RegressError, Table};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitOptions {
    /// Convergence threshold on max |score| for the standardized design.
    pub gradient_tol: f64,
    pub max_iterations: usize,
    /// Standardized coefficient magnitude treated as divergence.
    pub separation_bound: f64,
}

impl Default for LogitOptions {
    fn default() -> Self {
        LogitOptions { gradient_tol: 1e-8, max_iterations: 50, separation_bound: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    pub spec: ModelSpec,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub separated: bool,
    /// Max |score| in original units at the returned coefficients.
    pub max_score: f64,
    pub n: usize,
}

impl LogitFit {
    pub fn coefficient(&self, term: &super::ModelTerm) -> Option<f64> {
        self.spec.position(term).map(|i| self.coefficients[i])
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn eta(cols: &[Vec<f64>], beta: &[f64]) -> Vec<f64> {
    let n = cols[0].len();
    let mut out = vec![0.0; n];
    for (c, b) in cols.iter().zip(beta) {
        for (o, x) in out.iter_mut().zip(c) {
            *o += b * x;
        }
    }
    out
}

fn log_likelihood(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter().zip(y).map(|(e, y)| y * e - softplus(*e)).sum()
}

fn score(cols: &[Vec<f64>], eta: &[f64], y: &[f64]) -> Vec<f64> {
    let resid: Vec<f64> = eta.iter().zip(y).map(|(e, y)| y - sigmoid(*e)).collect();
    cols.iter().map(|c| c.iter().zip(&resid).map(|(x, r)| x * r).sum()).collect()
}

fn information(cols: &[Vec<f64>], eta: &[f64]) -> Square {
    let p = cols.len();
    let w: Vec<f64> = eta.iter().map(|e| {
        let s = sigmoid(*e);
        s * (1.0 - s)
    }).collect();
    let mut info = Square::zeros(p);
    for a in 0..p {
        for b in a..p {
            let v: f64 = cols[a].iter().zip(&cols[b]).zip(&w).map(|((x, z), w)| x * z * w).sum();
            info[(a, b)] = v;
            info[(b, a)] = v;
        }
    }
    info
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximum-likelihood logistic regression of `outcome` (0/1) on `spec`.
pub fn fit_logistic(
    table: &Table,
    spec: &ModelSpec,
    outcome: &[f64],
    opts: &LogitOptions,
) -> Result<LogitFit, RegressError> {
    if outcome.len() != table.n_rows() {
        return Err(RegressError::LengthMismatch { expected: table.n_rows(), got: outcome.len() });
    }
    if outcome.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(RegressError::NonBinaryOutcome);
    }
    let design = Design::build(table, spec)?;
    let z = &design.scaled;
    let p = design.p();

    let mut beta = vec![0.0; p];
    let mut e = eta(z, &beta);
    let mut ll = log_likelihood(&e, outcome);
    let mut grad = score(z, &e, outcome);
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if max_abs(&grad) < opts.gradient_tol {
            converged = true;
            break;
        }
        let info = information(z, &e);
        let Some(l) = cholesky(&info) else {
            separated = max_abs(&beta) > opts.separation_bound;
            break;
        };
        let step = cholesky_solve(&l, &grad);
        iterations += 1;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let te = eta(z, &trial);
            let tll = log_likelihood(&te, outcome);
            if tll >= ll - 1e-12 * ll.abs() {
                beta = trial;
                e = te;
                ll = tll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        grad = score(z, &e, outcome);
        if !accepted {
            converged = max_abs(&grad) < opts.gradient_tol;
            break;
        }
        if max_abs(&beta) > opts.separation_bound && max_abs(&grad) >= opts.gradient_tol {
            separated = true;
            break;
        }
    }
    if !converged && !separated && max_abs(&grad) < opts.gradient_tol {
        converged = true;
    }

    let (coefficients, standard_errors) = match cholesky(&information(z, &e)) {
        Some(l) => design.to_original(&beta, &cholesky_inverse(&l)),
        None => {
            let a = design.unscale();
            (a.mul_vec(&beta), vec![f64::NAN; p])
        }
    };
    let raw_eta = eta(&design.raw, &coefficients);
    let max_score = max_abs(&score(&design.raw, &raw_eta, outcome));

    Ok(LogitFit {
        spec: spec.clone(),
        coefficients,
        standard_errors,
        log_likelihood: ll,
        iterations,
        converged: converged && !separated,
        separated,
        max_score,
        n: design.n(),
    })
}

/// Linear predictor of a fit evaluated on the rows of `table`.
pub fn linear_predictor(fit: &LogitFit, table: &Table) -> Result<Vec<f64>, RegressError> {
    let mut out = vec![0.0; table.n_rows()];
    for (term, b) in fit.spec.terms().iter().zip(&fit.coefficients) {
        for (o, x) in out.iter_mut().zip(term.column(table)?) {
            *o += b * x;
        }
    }
    Ok(out)
}

/// Fitted probabilities on the rows of `table`.
pub fn predict_probability(fit: &LogitFit, table: &Table) -> Result<Vec<f64>, RegressError> {
    Ok(linear_predictor(fit, table)?.into_iter().map(sigmoid).collect())
}
