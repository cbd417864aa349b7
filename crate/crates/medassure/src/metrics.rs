//! Confusion-matrix metrics shared by every classifier in the crate.
//!
//! Both the network classifier and the logistic-regression baseline score
//! records as `(actual, probability)` pairs and aggregate through
//! [`confusion_from_scored`], so their reported numbers are directly
//! comparable.

/// Confusion counts plus the derived rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub accuracy: f64,
    /// `TP / (TP + FN)`; absent when no positives exist.
    pub sensitivity: Option<f64>,
    /// `TN / (TN + FP)`; absent when no negatives exist.
    pub specificity: Option<f64>,
}

/// Aggregates `(actual, probability)` pairs, predicting positive when the
/// probability is at or above the threshold.
pub fn confusion_from_scored(scored: &[(bool, f64)], threshold: f64) -> ClassifierMetrics {
    let mut tp = 0;
    let mut tn = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for &(actual, probability) in scored {
        let predicted = probability >= threshold;
        match (actual, predicted) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
        }
    }
    let total = tp + tn + fp + fn_;
    ClassifierMetrics {
        tp,
        tn,
        fp,
        fn_,
        accuracy: if total == 0 {
            0.0
        } else {
            (tp + tn) as f64 / total as f64
        },
        sensitivity: if tp + fn_ == 0 {
            None
        } else {
            Some(tp as f64 / (tp + fn_) as f64)
        },
        specificity: if tn + fp == 0 {
            None
        } else {
            Some(tn as f64 / (tn + fp) as f64)
        },
    }
}

/// One `(threshold, metrics)` row per step of a threshold sweep.
pub fn roc_sweep(scored: &[(bool, f64)], steps: usize) -> Vec<(f64, ClassifierMetrics)> {
    (0..=steps)
        .map(|i| {
            let threshold = i as f64 / steps as f64;
            (threshold, confusion_from_scored(scored, threshold))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_rates_match_a_hand_filled_matrix() {
        let scored = vec![
            (true, 0.9),  // TP
            (true, 0.4),  // FN
            (false, 0.6), // FP
            (false, 0.1), // TN
            (false, 0.2), // TN
        ];
        let m = confusion_from_scored(&scored, 0.5);
        assert_eq!((m.tp, m.tn, m.fp, m.fn_), (1, 2, 1, 1));
        assert_eq!(m.accuracy, 3.0 / 5.0);
        assert_eq!(m.sensitivity, Some(0.5));
        assert_eq!(m.specificity, Some(2.0 / 3.0));
    }

    #[test]
    fn threshold_comparison_is_at_or_above() {
        let m = confusion_from_scored(&[(true, 0.5)], 0.5);
        assert_eq!(m.tp, 1);
    }

    #[test]
    fn degenerate_classes_report_absent_rates() {
        let all_negative = confusion_from_scored(&[(false, 0.1), (false, 0.9)], 0.5);
        assert_eq!(all_negative.sensitivity, None);
        assert_eq!(all_negative.specificity, Some(0.5));
        let all_positive = confusion_from_scored(&[(true, 0.9)], 0.5);
        assert_eq!(all_positive.specificity, None);
    }

    #[test]
    fn roc_sweep_covers_both_ends() {
        let scored = vec![(true, 0.7), (false, 0.3)];
        let sweep = roc_sweep(&scored, 10);
        assert_eq!(sweep.len(), 11);
        assert_eq!(sweep[0].0, 0.0);
        assert_eq!(sweep[10].0, 1.0);
        // at threshold 0 everything is predicted positive
        assert_eq!(sweep[0].1.tp, 1);
        assert_eq!(sweep[0].1.fp, 1);
    }
}
