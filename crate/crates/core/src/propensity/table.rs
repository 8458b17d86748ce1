use crate::varprep::{StudyGroup, LOS, MORTALITY};

use super::Stratification;

/// Outcomes of one arm within a stratum; statistics are `None` when the
/// arm is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmOutcomes {
    pub n: usize,
    pub deaths: usize,
    pub mortality_pct: Option<f64>,
    pub mean_los: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumRow {
    pub stratum: usize,
    pub score_low: f64,
    pub score_high: f64,
    pub treated: ArmOutcomes,
    pub untreated: ArmOutcomes,
}

fn arm(rows: &[(bool, f64)]) -> ArmOutcomes {
    let n = rows.len();
    let deaths = rows.iter().filter(|(d, _)| *d).count();
    ArmOutcomes {
        n,
        deaths,
        mortality_pct: (n > 0).then(|| 100.0 * deaths as f64 / n as f64),
        mean_los: (n > 0).then(|| rows.iter().map(|(_, l)| l).sum::<f64>() / n as f64),
    }
}

/// Per-stratum counts, death percentages and mean LOS for each arm.
pub fn strata_outcome_table(group: &StudyGroup, strat: &Stratification) -> Vec<StratumRow> {
    (1..=strat.strata())
        .map(|s| {
            let mut t = Vec::new();
            let mut u = Vec::new();
            for (r, &a) in group.rows().iter().zip(&strat.assignment) {
                if a == s {
                    let rec = (r.get(MORTALITY) > 0.0, r.get(LOS));
                    if r.treated() { t.push(rec) } else { u.push(rec) }
                }
            }
            let (lo, hi) = strat.ranges[s - 1];
            StratumRow { stratum: s, score_low: lo, score_high: hi, treated: arm(&t), untreated: arm(&u) }
        })
        .collect()
}

pub fn strata_table_csv(rows: &[StratumRow]) -> String {
    use crate::report::{line, num, opt};
    let mut out = line(&[
        "quintile", "score_low", "score_high", "n_treated", "n_untreated", "deaths_treated", "deaths_untreated",
        "mortality_pct_treated", "mortality_pct_untreated", "mean_los_treated", "mean_los_untreated",
    ]);
    for r in rows {
        out.push_str(&line(&[
            r.stratum.to_string(),
            num(r.score_low),
            num(r.score_high),
            r.treated.n.to_string(),
            r.untreated.n.to_string(),
            r.treated.deaths.to_string(),
            r.untreated.deaths.to_string(),
            opt(r.treated.mortality_pct),
            opt(r.untreated.mortality_pct),
            opt(r.treated.mean_los),
            opt(r.untreated.mean_los),
        ]));
    }
    out
}
