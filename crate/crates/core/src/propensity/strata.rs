use crate::cohort::PatientKey;
use crate::regress::{linear_predictor, LogitFit, Table};

use super::PropensityError;

pub const SCORE_FLOOR: f64 = 1e-12;

/// Logistic transform of the fit's linear predictor, clamped away from 0
/// and 1.
pub fn propensity_scores(fit: &LogitFit, table: &Table) -> Result<Vec<f64>, PropensityError> {
    if !fit.converged {
        return Err(PropensityError::NotConverged);
    }
    Ok(linear_predictor(fit, table)?.into_iter().map(score_from_eta).collect())
}

pub fn score_from_eta(eta: f64) -> f64 {
    let p = if eta >= 0.0 { 1.0 / (1.0 + (-eta).exp()) } else { eta.exp() / (1.0 + eta.exp()) };
    p.clamp(SCORE_FLOOR, 1.0 - SCORE_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stratification {
    pub scores: Vec<f64>,
    /// Stratum per patient, 1-based, in input order.
    pub assignment: Vec<usize>,
    /// [min, max] score per stratum.
    pub ranges: Vec<(f64, f64)>,
    pub sizes: Vec<usize>,
}

impl Stratification {
    pub fn strata(&self) -> usize {
        self.sizes.len()
    }
}

/// Block sizes for `n` patients over `k` strata; the remainder goes to the
/// highest strata.
pub fn stratum_sizes(n: usize, k: usize) -> Vec<usize> {
    let (base, rem) = (n / k, n % k);
    (0..k).map(|s| base + usize::from(s >= k - rem)).collect()
}

/// Ranks patients by (score, key) and cuts `k` contiguous blocks.
pub fn stratify(scores: &[f64], keys: &[PatientKey], k: usize) -> Result<Stratification, PropensityError> {
    let n = scores.len();
    if keys.len() != n {
        return Err(PropensityError::LengthMismatch);
    }
    if k == 0 || n < k {
        return Err(PropensityError::TooFewPatients { n, strata: k });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(PropensityError::NonFiniteScore);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(keys[a].cmp(&keys[b])));
    let sizes = stratum_sizes(n, k);
    let mut assignment = vec![0; n];
    let mut ranges = Vec::with_capacity(k);
    let mut pos = 0;
    for (s, &size) in sizes.iter().enumerate() {
        let block = &order[pos..pos + size];
        for &i in block {
            assignment[i] = s + 1;
        }
        ranges.push((scores[block[0]], scores[block[size - 1]]));
        pos += size;
    }
    Ok(Stratification { scores: scores.to_vec(), assignment, ranges, sizes })
}

pub fn stratify_quintiles(scores: &[f64], keys: &[PatientKey]) -> Result<Stratification, PropensityError> {
    stratify(scores, keys, 5)
}
