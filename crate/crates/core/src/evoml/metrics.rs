use super::Tree;

/// Confusion counts with +1 as the positive class. Sensitivity and
/// specificity come in two forms: as TP/(TP+FP) and TN/(TN+FN), and in the
/// usual TP/(TP+FN) and TN/(TN+FP) form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub n: usize,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub success_rate: f64,
    /// TP / (TP + FP).
    pub sensitivity_ppv: Option<f64>,
    /// TN / (TN + FN).
    pub specificity_npv: Option<f64>,
    /// TP / (TP + FN).
    pub sensitivity_std: Option<f64>,
    /// TN / (TN + FP).
    pub specificity_std: Option<f64>,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (a + b > 0).then(|| a as f64 / (a + b) as f64)
}

impl ClassMetrics {
    /// From predicted and true labels in {-1, +1}.
    pub fn from_predictions(predicted: &[f64], labels: &[f64]) -> ClassMetrics {
        let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
        for (&p, &y) in predicted.iter().zip(labels) {
            match (p > 0.0, y > 0.0) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
            }
        }
        let n = tp + tn + fp + fn_;
        ClassMetrics {
            n,
            tp,
            tn,
            fp,
            fn_,
            success_rate: if n > 0 { (tp + tn) as f64 / n as f64 } else { f64::NAN },
            sensitivity_ppv: ratio(tp, fp),
            specificity_npv: ratio(tn, fn_),
            sensitivity_std: ratio(tp, fn_),
            specificity_std: ratio(tn, fp),
        }
    }
}

/// Class prediction of a tree: +1 when the output is positive, else -1.
pub fn classify(tree: &Tree, row: &[f64]) -> f64 {
    if tree.eval(row) > 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn classification_metrics(tree: &Tree, rows: &[Vec<f64>], labels: &[f64]) -> ClassMetrics {
    let pred: Vec<f64> = rows.iter().map(|r| classify(tree, r)).collect();
    ClassMetrics::from_predictions(&pred, labels)
}

pub fn mean_absolute_error(tree: &Tree, rows: &[Vec<f64>], targets: &[f64]) -> f64 {
    rows.iter().zip(targets).map(|(r, y)| (tree.eval(r) - y).abs()).sum::<f64>() / rows.len() as f64
}
