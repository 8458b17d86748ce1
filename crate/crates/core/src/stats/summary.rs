use super::StatsError;

/// Minimum, quartiles and maximum of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation of order statistics at position
/// `1 + (n - 1) p` (1-based). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn five_number_summary(xs: &[f64]) -> Result<FiveNumber, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(FiveNumber {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Median with the midpoint rule for even counts. `None` on empty input.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(quantile_sorted(&sorted, 0.5))
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Unbiased sample variance (n - 1 denominator); `None` below two values.
pub fn sample_variance(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    Some(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let f = five_number_summary(&[5.0]).unwrap();
        assert_eq!(f, FiveNumber { min: 5.0, q1: 5.0, median: 5.0, q3: 5.0, max: 5.0 });
    }

    #[test]
    fn exact_order_statistics() {
        let f = five_number_summary(&[3.0, 1.0, 5.0, 2.0, 4.0]).unwrap();
        assert_eq!(f, FiveNumber { min: 1.0, q1: 2.0, median: 3.0, q3: 4.0, max: 5.0 });
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(five_number_summary(&[]), Err(StatsError::EmptyInput)));
    }

    #[test]
    fn interpolates_between_order_statistics() {
        // positions 1.75, 2.5, 3.25 over [10, 20, 30, 40]
        let f = five_number_summary(&[40.0, 10.0, 30.0, 20.0]).unwrap();
        assert!((f.q1 - 17.5).abs() < 1e-12);
        assert!((f.median - 25.0).abs() < 1e-12);
        assert!((f.q3 - 32.5).abs() < 1e-12);
    }

    #[test]
    fn median_even_midpoint() {
        assert_eq!(median(&[1.0, 3.0]), Some(2.0));
        assert_eq!(median(&[]), None);
    }
}
