//! Upper-tail (F, chi-squared, normal) and two-sided (Student t) probabilities.

use super::special::{beta_inc, erfc, gamma_q};
use super::StatsError;

/// Reference distribution for a test statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// F(d1, d2); upper tail.
    F(f64, f64),
    /// Chi-squared with d degrees of freedom; upper tail.
    ChiSquared(f64),
    /// Student t with d degrees of freedom; two-sided.
    StudentT(f64),
    /// Standard normal; two-sided.
    Normal,
}

/// Tail probability of `statistic` under `dist`, clamped to [0, 1].
///
/// Infinite statistics are accepted and give a p-value of 0 (upper tail
/// at +inf).
pub fn tail_probability(dist: Distribution, statistic: f64) -> Result<f64, StatsError> {
    if statistic.is_nan() {
        return Err(StatsError::NonFinite);
    }
    let p = match dist {
        Distribution::F(d1, d2) => {
            check_dof(d1)?;
            check_dof(d2)?;
            if statistic <= 0.0 {
                1.0
            } else if statistic.is_infinite() {
                0.0
            } else {
                // P(F > f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2)
                let x = d2 / (d2 + d1 * statistic);
                beta_inc(d2 / 2.0, d1 / 2.0, x)
            }
        }
        Distribution::ChiSquared(d) => {
            check_dof(d)?;
            if statistic <= 0.0 {
                1.0
            } else if statistic.is_infinite() {
                0.0
            } else {
                gamma_q(d / 2.0, statistic / 2.0)
            }
        }
        Distribution::StudentT(d) => {
            check_dof(d)?;
            let t = statistic.abs();
            if t.is_infinite() {
                0.0
            } else {
                beta_inc(d / 2.0, 0.5, d / (d + t * t))
            }
        }
        Distribution::Normal => {
            let z = statistic.abs();
            if z.is_infinite() {
                0.0
            } else {
                erfc(z / std::f64::consts::SQRT_2)
            }
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

fn check_dof(d: f64) -> Result<(), StatsError> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidDof(d))
    }
}

/// Upper-tail critical value: the statistic whose tail probability equals
/// `alpha`. Bisection on the monotone tail; `alpha` must lie in (0, 1).
pub fn critical_value(dist: Distribution, alpha: f64) -> Result<f64, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidProbability(alpha));
    }
    let mut hi = 1.0;
    while tail_probability(dist, hi)? > alpha {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail_probability(dist, mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_statistic_gives_one() {
        assert_eq!(tail_probability(Distribution::ChiSquared(1.0), 0.0).unwrap(), 1.0);
        assert_eq!(tail_probability(Distribution::StudentT(7.0), 0.0).unwrap(), 1.0);
        assert_eq!(tail_probability(Distribution::F(2.0, 9.0), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn textbook_critical_points() {
        let p = tail_probability(Distribution::ChiSquared(1.0), 3.841_458_820_694_124).unwrap();
        assert!((p - 0.05).abs() < 1e-12);
        let p = tail_probability(Distribution::Normal, 1.959_963_984_540_054).unwrap();
        assert!((p - 0.05).abs() < 1e-12);
        // t(10) two-sided 0.05 critical value
        let p = tail_probability(Distribution::StudentT(10.0), 2.228_138_851_986_274).unwrap();
        assert!((p - 0.05).abs() < 1e-12);
        // F(1, d) = t(d)^2
        let f = tail_probability(Distribution::F(1.0, 10.0), 2.228_138_851_986_274f64.powi(2)).unwrap();
        assert!((f - 0.05).abs() < 1e-12);
    }

    #[test]
    fn invalid_dof_rejected() {
        assert!(matches!(
            tail_probability(Distribution::ChiSquared(0.0), 1.0),
            Err(StatsError::InvalidDof(_))
        ));
        assert!(tail_probability(Distribution::F(1.0, -2.0), 1.0).is_err());
        assert!(tail_probability(Distribution::StudentT(f64::NAN), 1.0).is_err());
    }

    #[test]
    fn critical_value_inverts_tail() {
        let c = critical_value(Distribution::F(1.0, 1500.0), 0.05).unwrap();
        assert!((c - 3.847).abs() < 0.01);
        let back = tail_probability(Distribution::F(1.0, 1500.0), c).unwrap();
        assert!((back - 0.05).abs() < 1e-9);
    }
}
