use std::fmt;

use crate::dataset::Label;
use crate::error::{Error, Result};

/// Confusion counts with `Program` as the positive class, and the derived
/// precision, recall and F-measure (each 0 when its denominator is 0).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_measure = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f_measure,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP={} FP={} FN={} TN={} precision={:.4} recall={:.4} F={:.4}",
            self.tp, self.fp, self.fn_, self.tn, self.precision, self.recall, self.f_measure
        )
    }
}

/// Confusion matrix of predictions against ground truth.
pub fn evaluate(predictions: &[Label], truths: &[Label]) -> Result<Metrics> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("evaluate"));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, t) in predictions.iter().zip(truths) {
        match (p, t) {
            (Label::Program, Label::Program) => tp += 1,
            (Label::Program, Label::Others) => fp += 1,
            (Label::Others, Label::Program) => fn_ += 1,
            (Label::Others, Label::Others) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

/// Aggregate over folds: counts are summed, rates are averaged.
pub fn mean_metrics(folds: &[Metrics]) -> Metrics {
    let n = folds.len().max(1) as f64;
    Metrics {
        tp: folds.iter().map(|m| m.tp).sum(),
        fp: folds.iter().map(|m| m.fp).sum(),
        fn_: folds.iter().map(|m| m.fn_).sum(),
        tn: folds.iter().map(|m| m.tn).sum(),
        precision: folds.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: folds.iter().map(|m| m.recall).sum::<f64>() / n,
        f_measure: folds.iter().map(|m| m.f_measure).sum::<f64>() / n,
    }
}
