use serde::{Deserialize, Serialize};

use super::forward::argmax;
use super::train::predict_logits;
use super::ParameterSet;
use crate::error::{Error, Result};
use crate::features::FeaturizedExample;

/// Binary classification metrics. `confusion[gold][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub macro_f1: f64,
    pub accuracy: f64,
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
    pub confusion: [[u64; 2]; 2],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision, recall and F1 (each 0 when its denominator is 0),
/// their macro average and accuracy.
pub fn metrics_from_confusion(confusion: [[u64; 2]; 2]) -> Metrics {
    let mut precision = [0.0; 2];
    let mut recall = [0.0; 2];
    let mut f1 = [0.0; 2];
    for c in 0..2 {
        let o = 1 - c;
        let tp = confusion[c][c];
        let fp = confusion[o][c];
        let fn_ = confusion[c][o];
        precision[c] = ratio(tp, tp + fp);
        recall[c] = ratio(tp, tp + fn_);
        // 2PR / (P + R) written in counts.
        f1[c] = ratio(2 * tp, 2 * tp + fp + fn_);
    }
    let total: u64 = confusion.iter().flatten().sum();
    Metrics {
        macro_f1: (f1[0] + f1[1]) / 2.0,
        accuracy: ratio(confusion[0][0] + confusion[1][1], total),
        precision,
        recall,
        f1,
        confusion,
    }
}

pub fn metrics_from_predictions(gold: &[usize], predicted: &[usize]) -> Metrics {
    let mut confusion = [[0u64; 2]; 2];
    for (&g, &p) in gold.iter().zip(predicted) {
        confusion[g][p] += 1;
    }
    metrics_from_confusion(confusion)
}

/// Eval-mode argmax predictions (ties to class 0) scored against gold.
pub fn evaluate(params: &ParameterSet, split: &[FeaturizedExample]) -> Result<Metrics> {
    if split.is_empty() {
        return Err(Error::data("cannot evaluate on an empty split"));
    }
    let predicted: Vec<usize> = predict_logits(params, split)?
        .into_iter()
        .map(argmax)
        .collect();
    let gold: Vec<usize> = split.iter().map(|e| e.gold).collect();
    Ok(metrics_from_predictions(&gold, &predicted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let m = metrics_from_predictions(&[0, 1, 1, 0], &[0, 1, 1, 0]);
        assert_eq!(m.macro_f1, 1.0);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn one_of_each_cell() {
        let m = metrics_from_confusion([[1, 1], [1, 1]]);
        assert_eq!(m.f1, [0.5, 0.5]);
        assert_eq!(m.macro_f1, 0.5);
        assert_eq!(m.confusion.iter().flatten().sum::<u64>(), 4);
    }

    #[test]
    fn all_human_on_balanced_set() {
        let m = metrics_from_predictions(&[0, 0, 1, 1], &[0, 0, 0, 0]);
        assert_eq!(m.f1[1], 0.0);
        assert_eq!(m.precision[1], 0.0);
        assert!((m.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
    }
}
