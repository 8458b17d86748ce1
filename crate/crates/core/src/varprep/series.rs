use std::collections::BTreeMap;

use super::VarprepError;

/// Irregular samples (hours since ICU admission, value), sorted by offset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimelineSeries {
    samples: Vec<(f64, f64)>,
}

impl TimelineSeries {
    pub fn new(mut samples: Vec<(f64, f64)>) -> Result<Self, VarprepError> {
        if let Some(&(h, v)) = samples.iter().find(|(h, v)| !(h.is_finite() && *h >= 0.0 && v.is_finite())) {
            return Err(VarprepError::InvalidSample { offset_hours: h, value: v });
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(TimelineSeries { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn by_day(&self) -> BTreeMap<u32, Vec<f64>> {
        let mut days: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for &(h, v) in &self.samples {
            days.entry(day_of(h)).or_default().push(v);
        }
        days
    }
}

/// ICU day containing `offset_hours`; day 1 is [0, 24).
pub fn day_of(offset_hours: f64) -> u32 {
    (offset_hours / 24.0).floor() as u32 + 1
}

/// One value per ICU day, day 1 first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DailySeries {
    values: BTreeMap<u32, f64>,
}

impl DailySeries {
    pub fn from_map(values: BTreeMap<u32, f64>) -> Self {
        DailySeries { values }
    }

    pub fn get(&self, day: u32) -> Option<f64> {
        self.values.get(&day).copied()
    }

    pub fn days(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.values.iter().map(|(&d, &v)| (d, v))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean over the days present in `first..=last`.
    pub fn mean_over(&self, first: u32, last: u32) -> Option<f64> {
        let v: Vec<f64> = self.values.range(first..=last).map(|(_, &v)| v).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// Per-day median of the samples falling in each day.
pub fn daily_median(series: &TimelineSeries) -> DailySeries {
    DailySeries { values: series.by_day().into_iter().map(|(d, v)| (d, median_of(v))).collect() }
}

/// Per-day total of the samples falling in each day.
pub fn daily_sum(series: &TimelineSeries) -> DailySeries {
    DailySeries { values: series.by_day().into_iter().map(|(d, v)| (d, v.iter().sum())).collect() }
}

/// Two-day intake over output ratio ending on day `t`.
pub fn fluids_ratio(inputs: &DailySeries, outputs: &DailySeries, t: u32) -> Result<f64, VarprepError> {
    if t < 2 {
        return Err(VarprepError::MissingDay(t.saturating_sub(1)));
    }
    let get = |s: &DailySeries, d| s.get(d).ok_or(VarprepError::MissingDay(d));
    let num = get(inputs, t - 1)? + get(inputs, t)?;
    let den = get(outputs, t - 1)? + get(outputs, t)?;
    if den == 0.0 {
        return Err(VarprepError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Diuretics decision day: the first dose day when treated, otherwise the
/// cohort default.
pub fn decision_timepoint(first_dose_day: Option<u32>, default_untreated: u32) -> u32 {
    first_dose_day.unwrap_or(default_untreated)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timepoints {
    pub t0: u32,
    pub t1: u32,
    pub t2: u32,
    pub t3: u32,
}

/// Cohort-level timepoint settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimepointPolicy {
    pub default_untreated: u32,
    pub t2: u32,
    pub t3: u32,
}

impl Default for TimepointPolicy {
    fn default() -> Self {
        TimepointPolicy { default_untreated: 4, t2: 3, t3: 4 }
    }
}

impl TimepointPolicy {
    pub fn timepoints(&self, first_dose_day: Option<u32>) -> Timepoints {
        Timepoints {
            t0: 1,
            t1: decision_timepoint(first_dose_day, self.default_untreated).max(1),
            t2: self.t2,
            t3: self.t3,
        }
    }
}
