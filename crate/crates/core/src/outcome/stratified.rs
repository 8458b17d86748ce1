use crate::propensity::Stratification;
use crate::stats::{chi_squared_2x2, t_test_two_sample, TTestVariant, TestResult};
use crate::varprep::{StudyGroup, LOS, MORTALITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    Mortality,
    Los,
}

impl std::fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutcomeKind::Mortality => "mortality",
            OutcomeKind::Los => "los",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumTest {
    pub stratum: usize,
    pub kind: OutcomeKind,
    pub n_treated: usize,
    pub n_untreated: usize,
    /// `None` when the stratum is untestable; `note` says why.
    pub result: Option<TestResult>,
    pub note: String,
}

impl StratumTest {
    pub fn significant(&self, alpha: f64) -> bool {
        self.result.is_some_and(|r| r.p_value < alpha)
    }
}

/// Treated vs untreated outcome test within each stratum: chi-squared on
/// deaths, or a two-sample t test on LOS.
pub fn stratified_outcome_tests(
    group: &StudyGroup,
    strat: &Stratification,
    kind: OutcomeKind,
    variant: TTestVariant,
    yates: bool,
) -> Vec<StratumTest> {
    (1..=strat.strata())
        .map(|s| {
            let rows: Vec<_> = group.rows().iter().zip(&strat.assignment).filter(|(_, &a)| a == s).map(|(r, _)| r).collect();
            let n_treated = rows.iter().filter(|r| r.treated()).count();
            let n_untreated = rows.len() - n_treated;
            let mut out = StratumTest { stratum: s, kind, n_treated, n_untreated, result: None, note: String::new() };
            if n_treated == 0 || n_untreated == 0 {
                out.note = "untestable: empty arm".into();
                return out;
            }
            let res = match kind {
                OutcomeKind::Mortality => {
                    let mut c = [[0u64; 2]; 2];
                    for r in &rows {
                        c[usize::from(!r.treated())][usize::from(r.get(MORTALITY) <= 0.0)] += 1;
                    }
                    chi_squared_2x2(c, yates)
                }
                OutcomeKind::Los => {
                    let t: Vec<f64> = rows.iter().filter(|r| r.treated()).map(|r| r.get(LOS)).collect();
                    let u: Vec<f64> = rows.iter().filter(|r| !r.treated()).map(|r| r.get(LOS)).collect();
                    t_test_two_sample(&t, &u, variant)
                }
            };
            match res {
                Ok(r) => out.result = Some(r),
                Err(e) => out.note = format!("untestable: {e}"),
            }
            out
        })
        .collect()
}

pub fn stratified_tests_csv(tests: &[StratumTest]) -> String {
    use crate::report::{line, num};
    let mut out = line(&["outcome", "quintile", "n_treated", "n_untreated", "statistic", "df", "p", "band", "significant", "note"]);
    for t in tests {
        let (stat, df, p, band) = match t.result {
            Some(r) => (num(r.statistic), num(r.df1), num(r.p_value), super::EvidenceBand::from_p(r.p_value).to_string()),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        out.push_str(&line(&[
            t.kind.to_string(),
            t.stratum.to_string(),
            t.n_treated.to_string(),
            t.n_untreated.to_string(),
            stat,
            df,
            p,
            band,
            t.significant(super::SIGNIFICANCE).to_string(),
            t.note.clone(),
        ]));
    }
    out
}
