//! Binary classification metrics (positive = COVID): sensitivity,
//! specificity, and macro F1, the headline numbers downstream
//! experiments report.

use crate::error::{Error, Result};

/// Confusion matrix counts for a binary task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Tally predictions against labels.
pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("cannot score an empty prediction list"));
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => counts.true_positives += 1,
            (true, false) => counts.false_positives += 1,
            (false, true) => counts.false_negatives += 1,
            (false, false) => counts.true_negatives += 1,
        }
    }
    Ok(counts)
}

/// True-positive rate tp / (tp + fn).
pub fn sensitivity(c: &ConfusionCounts) -> Result<f64> {
    let denom = c.true_positives + c.false_negatives;
    if denom == 0 {
        return Err(Error::invalid("sensitivity is undefined: no positive labels (tp + fn = 0)"));
    }
    Ok(c.true_positives as f64 / denom as f64)
}

/// True-negative rate tn / (tn + fp).
pub fn specificity(c: &ConfusionCounts) -> Result<f64> {
    let denom = c.true_negatives + c.false_positives;
    if denom == 0 {
        return Err(Error::invalid("specificity is undefined: no negative labels (tn + fp = 0)"));
    }
    Ok(c.true_negatives as f64 / denom as f64)
}

/// Unweighted mean of the positive-class and negative-class F1 scores.
pub fn macro_f1(c: &ConfusionCounts) -> Result<f64> {
    if c.true_positives + c.false_negatives == 0 || c.true_negatives + c.false_positives == 0 {
        return Err(Error::invalid("macro F1 is undefined: both classes must be present"));
    }
    let f1_pos = 2.0 * c.true_positives as f64
        / (2.0 * c.true_positives as f64 + c.false_positives as f64 + c.false_negatives as f64);
    let f1_neg = 2.0 * c.true_negatives as f64
        / (2.0 * c.true_negatives as f64 + c.false_negatives as f64 + c.false_positives as f64);
    Ok((f1_pos + f1_neg) / 2.0)
}
