use super::metrics::classify;
use super::{Task, Tree};

/// Model output for one patient under both treatment values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterfactualRow {
    pub treated: f64,
    pub untreated: f64,
}

/// Per-arm aggregates: predicted positive rate for classification, mean
/// predicted value for regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterfactualSummary {
    pub n: usize,
    pub treated: f64,
    pub untreated: f64,
    pub differing: usize,
}

/// Evaluates every row twice with the treatment feature at +1 and -1, all
/// other features fixed.
pub fn simulate_counterfactual(
    tree: &Tree,
    rows: &[Vec<f64>],
    treatment_feature: usize,
    task: Task,
) -> (Vec<CounterfactualRow>, CounterfactualSummary) {
    let eval = |row: &[f64]| match task {
        Task::Classify => classify(tree, row),
        Task::Regress => tree.eval(row),
    };
    let out: Vec<CounterfactualRow> = rows
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row[treatment_feature] = 1.0;
            let treated = eval(&row);
            row[treatment_feature] = -1.0;
            CounterfactualRow { treated, untreated: eval(&row) }
        })
        .collect();
    let n = out.len();
    let agg = |f: fn(&CounterfactualRow) -> f64| {
        let vals = out.iter().map(f);
        match task {
            Task::Classify => vals.filter(|&v| v > 0.0).count() as f64 / n as f64,
            Task::Regress => vals.sum::<f64>() / n as f64,
        }
    };
    let summary = CounterfactualSummary {
        n,
        treated: agg(|r| r.treated),
        untreated: agg(|r| r.untreated),
        differing: out.iter().filter(|r| r.treated != r.untreated).count(),
    };
    (out, summary)
}
