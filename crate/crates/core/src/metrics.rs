//! Accuracy and ROC-AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability threshold separating predicted classes.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `None` when the test labels contain a single class.
    pub roc_auc: Option<f64>,
    pub n_test: usize,
    /// Fraction of positive labels in the test set.
    pub class_balance: f64,
}

impl EvalReport {
    /// Scores class-1 probabilities against labels, thresholding at 0.5.
    pub fn from_probabilities(y_true: &[u8], proba: &[f64]) -> Result<Self> {
        let y_pred = threshold(proba);
        let accuracy = accuracy(y_true, &y_pred)?;
        let roc_auc = match roc_auc(y_true, proba) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        let positives = y_true.iter().filter(|&&v| v == 1).count();
        Ok(EvalReport {
            accuracy,
            roc_auc,
            n_test: y_true.len(),
            class_balance: positives as f64 / y_true.len() as f64,
        })
    }
}

pub fn threshold(proba: &[f64]) -> Vec<u8> {
    proba.iter().map(|&p| u8::from(p >= DECISION_THRESHOLD)).collect()
}

pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::Validation("accuracy of an empty sample".into()));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::Validation(format!(
            "label vectors differ in length ({} vs {})",
            y_true.len(),
            y_pred.len()
        )));
    }
    let correct = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / y_true.len() as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from midranks after one sort.
pub fn roc_auc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::Validation(format!(
            "labels and scores differ in length ({} vs {})",
            y_true.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Validation("scores contain NaN".into()));
    }
    let n_pos = y_true.iter().filter(|&&v| v == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC-AUC needs both classes in y_true".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of (doubled) midranks of positives, kept integral for exactness.
    let mut pos_rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j share midrank (i+1+j)/2
        let midrank2 = (i + 1 + j) as u128;
        let pos_in_block = order[i..j].iter().filter(|&&k| y_true[k] == 1).count() as u128;
        pos_rank_sum2 += midrank2 * pos_in_block;
        i = j;
    }
    let (p, n) = (n_pos as u128, n_neg as u128);
    // U = R_pos - p(p+1)/2; doubled to stay in integers.
    let u2 = pos_rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &[1, 0, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[1, 1, 0, 0], &[0.9, 0.8, 0.3, 0.2]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[1, 0, 1, 0], &[0.9, 0.8, 0.7, 0.1]).unwrap(), 0.75);
        assert_eq!(roc_auc(&[1, 0], &[0.5, 0.5]).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_is_undefined() {
        assert!(matches!(roc_auc(&[1, 1], &[0.1, 0.2]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn report_handles_single_class() {
        let r = EvalReport::from_probabilities(&[1, 1], &[0.7, 0.2]).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.roc_auc, None);
        assert_eq!(r.class_balance, 1.0);
    }
}
