//! One-way ANOVA and the 2 x K treatment-by-subclass decomposition used for
//! covariate balance.
//!
//! The two-way analysis works on the table of cell means with every cell
//! weighted by the harmonic mean of the cell sizes (unweighted-means
//! analysis). Row, column and cell sums of squares are computed directly
//! from their definitions and the interaction is the remainder
//! `S_cells - S_treatment - S_subclass`. The error term is the pooled
//! within-cell sum of squares. For a balanced layout this is the ordinary
//! two-way ANOVA; for unbalanced layouts the treatment effect compares
//! within-subclass means instead of raw marginal means, which is what makes
//! the statistic sensitive to stratification.

use std::fmt;

use super::tail::{tail_probability, Distribution};
use super::{StatsError, TestResult};

/// Sums of squares at or below `ZERO_SS_REL * sum(x^2)` count as zero.
const ZERO_SS_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// Within-group SS is zero while between-group SS is not: F = +inf.
    ZeroWithin,
    /// Both sums of squares vanish: F is undefined (NaN).
    Undefined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneWayAnova {
    pub f: f64,
    pub p_value: f64,
    pub df_between: f64,
    pub df_within: f64,
    /// Between-groups SS, sum_i n_i (m_i - m)^2.
    pub s1: f64,
    /// Within-groups SS, sum_i sum_j (x_ij - m_i)^2.
    pub s2: f64,
    pub degenerate: Option<Degeneracy>,
}

impl OneWayAnova {
    pub fn test_result(&self) -> TestResult {
        TestResult {
            statistic: self.f,
            p_value: self.p_value,
            df1: self.df_between,
            df2: Some(self.df_within),
        }
    }
}

pub fn one_way_anova<G: AsRef<[f64]>>(groups: &[G]) -> Result<OneWayAnova, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups(k));
    }
    let mut n = 0usize;
    let mut grand = 0.0;
    let mut scale = 0.0;
    for (i, g) in groups.iter().enumerate() {
        let g = g.as_ref();
        if g.is_empty() {
            return Err(StatsError::EmptyGroup(i));
        }
        for &x in g {
            if !x.is_finite() {
                return Err(StatsError::NonFinite);
            }
            grand += x;
            scale += x * x;
        }
        n += g.len();
    }
    if n <= k {
        return Err(StatsError::TooFewObservations { n, groups: k });
    }
    let m = grand / n as f64;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for g in groups {
        let g = g.as_ref();
        let mi = g.iter().sum::<f64>() / g.len() as f64;
        s1 += g.len() as f64 * (mi - m).powi(2);
        s2 += g.iter().map(|x| (x - mi).powi(2)).sum::<f64>();
    }
    let tol = ZERO_SS_REL * scale.max(f64::MIN_POSITIVE);
    let df_between = (k - 1) as f64;
    let df_within = (n - k) as f64;
    let (f, degenerate) = match (s1 <= tol, s2 <= tol) {
        (true, true) => (f64::NAN, Some(Degeneracy::Undefined)),
        (false, true) => (f64::INFINITY, Some(Degeneracy::ZeroWithin)),
        (true, false) => (0.0, None),
        (false, false) => ((s1 / df_between) / (s2 / df_within), None),
    };
    let p_value = if f.is_nan() {
        1.0
    } else {
        tail_probability(Distribution::F(df_between, df_within), f)?
    };
    Ok(OneWayAnova { f, p_value, df_between, df_within, s1, s2, degenerate })
}

/// Component sums of squares of the 2 x K decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoWaySums {
    /// Total SS of the raw observations about their grand mean.
    pub total: f64,
    /// Between-cells SS over all 2K cell means.
    pub between_cells: f64,
    /// Treatment (row) SS.
    pub treatment: f64,
    /// Subclass (column) SS.
    pub subclass: f64,
    /// Interaction SS, `between_cells - treatment - subclass`.
    pub interaction: f64,
    /// Pooled within-cell SS.
    pub within_cells: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnovaWarning {
    /// A subclass has no observations in one arm; it is left out of the
    /// decomposition.
    EmptyCell { subclass: usize, treated: bool },
    /// Only one usable subclass remains, so the interaction has no degrees
    /// of freedom and its F is reported as 0.
    SingleSubclass,
    /// The within-cell SS vanished with a non-zero effect SS.
    ZeroWithin,
}

impl fmt::Display for AnovaWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnovaWarning::EmptyCell { subclass, treated } => write!(
                f,
                "subclass {subclass} has no {} observations",
                if *treated { "treated" } else { "untreated" }
            ),
            AnovaWarning::SingleSubclass => write!(f, "single usable subclass"),
            AnovaWarning::ZeroWithin => write!(f, "zero within-cell variation"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaResult {
    /// Treatment main-effect ("primary") F.
    pub f_primary: f64,
    /// Treatment x subclass interaction ("secondary") F.
    pub f_secondary: f64,
    pub df_primary: (f64, f64),
    pub df_secondary: (f64, f64),
    pub p_primary: f64,
    pub p_secondary: f64,
    pub sums: TwoWaySums,
    /// Harmonic mean of the cell sizes used as the common cell weight.
    pub cell_weight: f64,
    /// Subclasses (1-based) that entered the decomposition.
    pub subclasses_used: Vec<usize>,
    pub warnings: Vec<AnovaWarning>,
}

/// Two-way 2 x K ANOVA of `values` by treatment arm and subclass (1..=k).
pub fn two_way_anova_2xk(
    values: &[f64],
    treated: &[bool],
    subclass: &[usize],
    k: usize,
) -> Result<AnovaResult, StatsError> {
    if k < 2 {
        return Err(StatsError::TooFewGroups(k));
    }
    if values.len() != treated.len() || values.len() != subclass.len() {
        return Err(StatsError::LengthMismatch);
    }
    if !treated.iter().any(|&t| t) || treated.iter().all(|&t| t) {
        return Err(StatsError::AllCellsEmptyForTreatment);
    }
    // cells[arm][s]: (count, sum); arm 0 = untreated, 1 = treated
    let mut count = vec![[0usize; 2]; k];
    let mut sum = vec![[0.0f64; 2]; k];
    for ((&x, &t), &s) in values.iter().zip(treated).zip(subclass) {
        if !x.is_finite() {
            return Err(StatsError::NonFinite);
        }
        if s == 0 || s > k {
            return Err(StatsError::LabelOutOfRange(s));
        }
        count[s - 1][t as usize] += 1;
        sum[s - 1][t as usize] += x;
    }

    let mut warnings = Vec::new();
    let mut used = Vec::new();
    for s in 0..k {
        let mut complete = true;
        for arm in [1usize, 0] {
            if count[s][arm] == 0 {
                warnings.push(AnovaWarning::EmptyCell { subclass: s + 1, treated: arm == 1 });
                complete = false;
            }
        }
        if complete {
            used.push(s);
        }
    }
    if used.is_empty() {
        return Err(StatsError::AllCellsEmptyForTreatment);
    }

    let kk = used.len();
    let cells = 2 * kk;
    let cell_mean = |s: usize, arm: usize| sum[s][arm] / count[s][arm] as f64;

    let n_used: usize = used.iter().map(|&s| count[s][0] + count[s][1]).sum();
    let inv_sum: f64 = used.iter().map(|&s| 1.0 / count[s][0] as f64 + 1.0 / count[s][1] as f64).sum();
    let weight = cells as f64 / inv_sum;

    let grand = used.iter().map(|&s| cell_mean(s, 0) + cell_mean(s, 1)).sum::<f64>() / cells as f64;
    let row_mean = |arm: usize| used.iter().map(|&s| cell_mean(s, arm)).sum::<f64>() / kk as f64;
    let rows = [row_mean(0), row_mean(1)];

    let treatment = weight * kk as f64 * rows.iter().map(|r| (r - grand).powi(2)).sum::<f64>();
    let mut subclass_ss = 0.0;
    let mut between_cells = 0.0;
    for &s in &used {
        let col = 0.5 * (cell_mean(s, 0) + cell_mean(s, 1));
        subclass_ss += 2.0 * weight * (col - grand).powi(2);
        for arm in 0..2 {
            between_cells += weight * (cell_mean(s, arm) - grand).powi(2);
        }
    }
    let interaction = (between_cells - treatment - subclass_ss).max(0.0);

    let mut within = 0.0;
    let mut raw_sum = 0.0;
    let mut scale = 0.0;
    for ((&x, &t), &s) in values.iter().zip(treated).zip(subclass) {
        let s = s - 1;
        if count[s][0] == 0 || count[s][1] == 0 {
            continue;
        }
        within += (x - cell_mean(s, t as usize)).powi(2);
        raw_sum += x;
        scale += x * x;
    }
    let raw_mean = raw_sum / n_used as f64;
    let total = values
        .iter()
        .zip(subclass)
        .filter(|(_, &s)| count[s - 1][0] > 0 && count[s - 1][1] > 0)
        .map(|(&x, _)| (x - raw_mean).powi(2))
        .sum::<f64>();

    let tol = ZERO_SS_REL * scale.max(f64::MIN_POSITIVE);
    let df_within = (n_used - cells) as f64;
    let df_primary = (1.0, df_within);
    let df_secondary = ((kk - 1) as f64, df_within);
    if kk == 1 {
        warnings.push(AnovaWarning::SingleSubclass);
    }

    let mut zero_within = false;
    let mut ratio = |ss: f64, df1: f64| -> f64 {
        if df1 == 0.0 || ss <= tol {
            0.0
        } else if within <= tol || df_within == 0.0 {
            zero_within = true;
            f64::INFINITY
        } else {
            (ss / df1) / (within / df_within)
        }
    };
    let f_primary = ratio(treatment, df_primary.0);
    let f_secondary = ratio(interaction, df_secondary.0);
    if zero_within {
        warnings.push(AnovaWarning::ZeroWithin);
    }
    let p_of = |f: f64, df: (f64, f64)| -> Result<f64, StatsError> {
        if df.0 == 0.0 || df.1 == 0.0 {
            Ok(if f > 0.0 { 0.0 } else { 1.0 })
        } else {
            tail_probability(Distribution::F(df.0, df.1), f)
        }
    };

    Ok(AnovaResult {
        f_primary,
        f_secondary,
        df_primary,
        df_secondary,
        p_primary: p_of(f_primary, df_primary)?,
        p_secondary: p_of(f_secondary, df_secondary)?,
        sums: TwoWaySums {
            total,
            between_cells,
            treatment,
            subclass: subclass_ss,
            interaction,
            within_cells: within,
        },
        cell_weight: weight,
        subclasses_used: used.iter().map(|s| s + 1).collect(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups_give_zero() {
        let r = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.f, 0.0);
        assert_eq!(r.degenerate, None);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_within_is_flagged_infinite() {
        let r = one_way_anova(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(r.s2, 0.0);
        assert!(r.f.is_infinite());
        assert_eq!(r.degenerate, Some(Degeneracy::ZeroWithin));
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn constant_everything_is_undefined() {
        let r = one_way_anova(&[vec![2.0, 2.0], vec![2.0, 2.0]]).unwrap();
        assert!(r.f.is_nan());
        assert_eq!(r.degenerate, Some(Degeneracy::Undefined));
    }

    #[test]
    fn one_way_input_errors() {
        assert!(matches!(one_way_anova(&[vec![1.0]]), Err(StatsError::TooFewGroups(1))));
        assert!(matches!(
            one_way_anova(&[vec![1.0, 2.0], vec![]]),
            Err(StatsError::EmptyGroup(1))
        ));
        assert!(matches!(
            one_way_anova(&[vec![1.0], vec![2.0]]),
            Err(StatsError::TooFewObservations { .. })
        ));
    }

    #[test]
    fn one_way_textbook_value() {
        // groups means 2, 5, 8; within SS 2+2+2 = 6; between SS 3*(9+0+9) = 54
        let r = one_way_anova(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0], vec![7.0, 8.0, 9.0]]).unwrap();
        assert!((r.s1 - 54.0).abs() < 1e-12);
        assert!((r.s2 - 6.0).abs() < 1e-12);
        assert!((r.f - 27.0).abs() < 1e-12);
    }

    #[test]
    fn constant_values_two_way_zero() {
        let values = vec![3.5; 12];
        let treated: Vec<bool> = (0..12).map(|i| i % 2 == 0).collect();
        let sub: Vec<usize> = (0..12).map(|i| i / 4 + 1).collect();
        let r = two_way_anova_2xk(&values, &treated, &sub, 3).unwrap();
        assert_eq!(r.f_primary, 0.0);
        assert_eq!(r.f_secondary, 0.0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn additive_noiseless_has_no_interaction() {
        // value = 10 * treated + 3 * subclass, two observations per cell
        let mut values = Vec::new();
        let mut treated = Vec::new();
        let mut sub = Vec::new();
        for s in 1..=2usize {
            for t in [false, true] {
                for _ in 0..2 {
                    values.push(10.0 * t as u8 as f64 + 3.0 * s as f64);
                    treated.push(t);
                    sub.push(s);
                }
            }
        }
        let r = two_way_anova_2xk(&values, &treated, &sub, 2).unwrap();
        assert_eq!(r.f_secondary, 0.0);
        assert!(r.f_primary.is_infinite());
        assert!(r.warnings.contains(&AnovaWarning::ZeroWithin));
    }

    #[test]
    fn balanced_layout_matches_classical_anova() {
        // 2 x 2, n = 2 per cell; hand-computed classical sums of squares
        // cells: (u,1)=[1,3] (t,1)=[5,7] (u,2)=[2,4] (t,2)=[10,12]
        let values = [1.0, 3.0, 5.0, 7.0, 2.0, 4.0, 10.0, 12.0];
        let treated = [false, false, true, true, false, false, true, true];
        let sub = [1, 1, 1, 1, 2, 2, 2, 2];
        let r = two_way_anova_2xk(&values, &treated, &sub, 2).unwrap();
        // cell means 2, 6, 3, 11; grand 5.5; rows 2.5 / 8.5; cols 4 / 7
        assert!((r.sums.treatment - 72.0).abs() < 1e-12);
        assert!((r.sums.subclass - 18.0).abs() < 1e-12);
        assert!((r.sums.between_cells - 98.0).abs() < 1e-12);
        assert!((r.sums.interaction - 8.0).abs() < 1e-12);
        assert!((r.sums.within_cells - 8.0).abs() < 1e-12);
        assert!((r.sums.total - 106.0).abs() < 1e-12);
        assert!((r.f_primary - 36.0).abs() < 1e-12);
        assert!((r.f_secondary - 4.0).abs() < 1e-12);
        assert_eq!(r.df_secondary, (1.0, 4.0));
    }

    #[test]
    fn empty_treated_cell_is_warned_not_fatal() {
        let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let treated = [false, false, false, false, true, false, true, false];
        let sub = [1, 1, 1, 2, 2, 3, 3, 3];
        let r = two_way_anova_2xk(&values, &treated, &sub, 3).unwrap();
        assert_eq!(r.subclasses_used, vec![2, 3]);
        assert!(r
            .warnings
            .contains(&AnovaWarning::EmptyCell { subclass: 1, treated: true }));
    }

    #[test]
    fn no_treated_anywhere_is_error() {
        let r = two_way_anova_2xk(&[1.0, 2.0], &[false, false], &[1, 2], 2);
        assert!(matches!(r, Err(StatsError::AllCellsEmptyForTreatment)));
    }
}
