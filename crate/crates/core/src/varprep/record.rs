use super::series::{daily_median, daily_sum, day_of, DailySeries, TimelineSeries, TimepointPolicy, Timepoints};
use super::NUM_VARS;

/// Everything the extracts hold for one stay, already joined by key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PatientRecord {
    pub age: Option<f64>,
    pub female: Option<bool>,
    pub white: Option<bool>,
    pub elixhauser_overall: Option<f64>,
    /// The nine selected Elixhauser flags, in x16..x24 order.
    pub elixhauser_flags: Option<[bool; 9]>,
    pub saps: TimelineSeries,
    pub sofa: TimelineSeries,
    pub creatinine: TimelineSeries,
    pub abp: TimelineSeries,
    pub map: TimelineSeries,
    pub fluids_in: TimelineSeries,
    pub fluids_out: TimelineSeries,
    /// Offsets (hours) of diuretic doses in the ICU.
    pub diuretic_doses: Vec<f64>,
    pub vasopressors: Option<bool>,
    pub ventilation: Option<bool>,
    pub died_30d: Option<bool>,
    pub los_hours: Option<f64>,
}

impl PatientRecord {
    pub fn treated(&self) -> bool {
        !self.diuretic_doses.is_empty()
    }

    pub fn first_dose_hours(&self) -> Option<f64> {
        self.diuretic_doses.iter().copied().reduce(f64::min)
    }

    pub fn timepoints(&self, policy: &TimepointPolicy) -> Timepoints {
        policy.timepoints(self.first_dose_hours().map(day_of))
    }
}

fn pm(b: bool) -> f64 {
    if b { 1.0 } else { -1.0 }
}

/// Average over 1..=T1, then the T0, T1, T2 and T3 day values.
fn five(series: &DailySeries, tp: &Timepoints) -> [Option<f64>; 5] {
    [
        series.mean_over(1, tp.t1),
        series.get(tp.t0),
        series.get(tp.t1),
        series.get(tp.t2),
        series.get(tp.t3),
    ]
}

/// x30..x44: fluid inputs, outputs and balance (inputs minus outputs).
pub fn fluid_features(inputs: &DailySeries, outputs: &DailySeries, tp: &Timepoints) -> [Option<f64>; 15] {
    let i = five(inputs, tp);
    let o = five(outputs, tp);
    let mut out = [None; 15];
    for k in 0..5 {
        out[k] = i[k];
        out[5 + k] = o[k];
        out[10 + k] = match (i[k], o[k]) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
    }
    out
}

/// Values x1..x58 (index 0 holds x1); `None` where the data are missing.
pub fn compute_variables(rec: &PatientRecord, policy: &TimepointPolicy) -> [Option<f64>; NUM_VARS] {
    let tp = rec.timepoints(policy);
    let mut x = [None; NUM_VARS];
    let mut set = |i: usize, v: Option<f64>| x[i - 1] = v;

    set(1, Some(pm(rec.treated())));
    set(2, rec.age);
    set(3, rec.female.map(pm));
    set(4, rec.white.map(pm));
    for (base, series) in [(5, &rec.saps), (10, &rec.sofa), (25, &rec.creatinine), (47, &rec.abp), (52, &rec.map)] {
        for (k, v) in five(&daily_median(series), &tp).into_iter().enumerate() {
            set(base + k, v);
        }
    }
    set(15, rec.elixhauser_overall);
    for k in 0..9 {
        set(16 + k, rec.elixhauser_flags.map(|f| pm(f[k])));
    }
    let fl = fluid_features(&daily_sum(&rec.fluids_in), &daily_sum(&rec.fluids_out), &tp);
    for (k, v) in fl.into_iter().enumerate() {
        set(30 + k, v);
    }
    set(45, rec.vasopressors.map(pm));
    set(46, rec.ventilation.map(pm));
    set(57, rec.died_30d.map(pm));
    let decision_hours = rec.first_dose_hours().unwrap_or(24.0 * (tp.t1 - 1) as f64);
    set(58, rec.los_hours.map(|h| ((h - decision_hours) / 24.0).max(0.0)));
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn daily(pairs: &[(u32, f64)]) -> DailySeries {
        DailySeries::from_map(pairs.iter().copied().collect())
    }

    #[test]
    fn balance_is_in_minus_out() {
        let tp = TimepointPolicy::default().timepoints(None);
        let f = fluid_features(&daily(&[(1, 2.0), (4, 1.0)]), &daily(&[(1, 1.0), (4, 1.0)]), &tp);
        assert_eq!(f[11], Some(1.0));
        assert_eq!(f[12], Some(0.0));
        assert_eq!(f[13], None);
        assert_eq!(f[10], Some(0.5));
    }

    #[test]
    fn constant_saps() {
        let saps = TimelineSeries::new((0..6).map(|d| (24.0 * d as f64 + 3.0, 15.0)).collect()).unwrap();
        let rec = PatientRecord { saps, ..Default::default() };
        let x = compute_variables(&rec, &TimepointPolicy::default());
        for i in 5..=9 {
            assert_eq!(x[i - 1], Some(15.0));
        }
        assert_eq!(x[0], Some(-1.0));
    }

    #[test]
    fn treated_timepoint_and_los() {
        let rec = PatientRecord { diuretic_doses: vec![40.0, 30.0], los_hours: Some(102.0), ..Default::default() };
        assert_eq!(rec.timepoints(&TimepointPolicy::default()).t1, 2);
        let x = compute_variables(&rec, &TimepointPolicy::default());
        assert_eq!(x[0], Some(1.0));
        assert_eq!(x[57], Some(3.0));
        let untreated = PatientRecord { los_hours: Some(48.0), ..Default::default() };
        assert_eq!(compute_variables(&untreated, &TimepointPolicy::default())[57], Some(0.0));
    }
}
