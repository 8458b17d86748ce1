//! Design-matrix construction with internal standardization.
//!
//! Every non-intercept column is centered and scaled to unit (population)
//! standard deviation before fitting. Coefficients and their covariance are
//! mapped back to original units by the affine map in [`Design::unscale`].

use crate::linalg::{Qr, Square};

use super::{ModelSpec, RegressError, Table};

pub(crate) const RANK_TOL: f64 = 1e-10;

pub(crate) struct Design {
    pub raw: Vec<Vec<f64>>,
    pub scaled: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Design {
    pub fn build(table: &Table, spec: &ModelSpec) -> Result<Design, RegressError> {
        let n = table.n_rows();
        if n == 0 {
            return Err(RegressError::TooFewRows { n, p: spec.len() });
        }
        let mut raw = Vec::with_capacity(spec.len());
        let mut scaled = Vec::with_capacity(spec.len());
        let mut means = Vec::with_capacity(spec.len());
        let mut sds = Vec::with_capacity(spec.len());
        for (j, term) in spec.terms().iter().enumerate() {
            let col = term.column(table)?;
            if col.iter().any(|x| !x.is_finite()) {
                return Err(RegressError::NonFinite(term.to_string()));
            }
            if j == 0 {
                scaled.push(col.clone());
                means.push(0.0);
                sds.push(1.0);
            } else {
                let m = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
                let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
                scaled.push(col.iter().map(|x| (x - m) / sd).collect());
                means.push(m);
                sds.push(sd);
            }
            raw.push(col);
        }
        let design = Design { raw, scaled, means, sds };
        design.check_rank(spec)?;
        Ok(design)
    }

    /// Pivoted-QR rank check on the standardized columns. On deficiency
    /// the reported term is the first one (in spec order) whose inclusion
    /// makes the leading block of columns deficient.
    fn check_rank(&self, spec: &ModelSpec) -> Result<(), RegressError> {
        let p = self.scaled.len();
        let n = self.scaled[0].len();
        if n < p {
            return Err(RegressError::TooFewRows { n, p });
        }
        let qr = Qr::new(&self.scaled, true);
        if qr.rank(RANK_TOL) == p {
            return Ok(());
        }
        let max_pivot = qr.diag_abs().into_iter().fold(0.0, f64::max);
        let threshold = RANK_TOL * max_pivot;
        for j in 1..p {
            let prefix = Qr::new(&self.scaled[..=j], true);
            if prefix.diag_abs().iter().any(|&d| d <= threshold) {
                return Err(RegressError::RankDeficient { term: spec.terms()[j].to_string() });
            }
        }
        Err(RegressError::RankDeficient { term: spec.terms()[p - 1].to_string() })
    }

    pub fn n(&self) -> usize {
        self.scaled[0].len()
    }

    pub fn p(&self) -> usize {
        self.scaled.len()
    }

    /// Linear map A with beta_original = A * beta_scaled.
    pub fn unscale(&self) -> Square {
        let p = self.p();
        let mut a = Square::zeros(p);
        a[(0, 0)] = 1.0;
        for j in 1..p {
            a[(j, j)] = 1.0 / self.sds[j];
            a[(0, j)] = -self.means[j] / self.sds[j];
        }
        a
    }

    /// Maps scaled coefficients and covariance to original units.
    pub fn to_original(&self, beta_scaled: &[f64], cov_scaled: &Square) -> (Vec<f64>, Vec<f64>) {
        let a = self.unscale();
        let beta = a.mul_vec(beta_scaled);
        let cov = a.mul(cov_scaled).mul(&a.transpose());
        let se = cov.diagonal().into_iter().map(|v| v.max(0.0).sqrt()).collect();
        (beta, se)
    }
}
