use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Held-out outcome of one sample for a candidate split; membership in the
/// partition `C` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitPrediction {
    pub true_in_c: bool,
    pub predicted_in_c: bool,
    /// Calibrated probability of the side the sample was routed to.
    pub prob_of_predicted_side: f64,
}

/// Probability-weighted balanced accuracy of a split.
///
/// With `ΣP_*` the summed routed-side probabilities per confusion cell, the
/// default form is
///
/// ```text
/// [ (ΣP_TP + ΣP_FP) / (TP + FN) + (ΣP_FN + ΣP_TN) / (FP + TN) ] / 2
/// ```
///
/// which is evaluated exactly as written even though it pairs predicted-side
/// sums with true-class counts. With `corrected`, each fraction instead sums
/// the probability assigned to the true class over that class:
/// `[ (ΣP_TP + Σ(1−P_FN)) / (TP + FN) + (ΣP_TN + Σ(1−P_FP)) / (FP + TN) ] / 2`.
pub fn node_accuracy(per_sample: &[SplitPrediction], corrected: bool) -> Result<f64> {
    if per_sample.is_empty() {
        return Err(Error::UndefinedDenominator("no samples"));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    let (mut p_tp, mut p_fp, mut p_tn, mut p_fn) = (0.0, 0.0, 0.0, 0.0);
    for s in per_sample {
        let p = s.prob_of_predicted_side;
        match (s.true_in_c, s.predicted_in_c) {
            (true, true) => {
                tp += 1;
                p_tp += p;
            }
            (false, true) => {
                fp += 1;
                p_fp += p;
            }
            (false, false) => {
                tn += 1;
                p_tn += p;
            }
            (true, false) => {
                fn_ += 1;
                p_fn += p;
            }
        }
    }
    let positives = (tp + fn_) as f64;
    let negatives = (fp + tn) as f64;
    if tp + fn_ == 0 || fp + tn == 0 {
        return Err(Error::UndefinedDenominator("both true classes must be present"));
    }
    // Both fractions over the common denominator 2·(TP+FN)·(FP+TN), with one
    // compensated sum so that hand-checkable cases come out exactly.
    let terms = if corrected {
        [p_tp * negatives, (fn_ as f64 - p_fn) * negatives, p_tn * positives, (fp as f64 - p_fp) * positives]
    } else {
        [p_tp * negatives, p_fp * negatives, p_fn * positives, p_tn * positives]
    };
    let value = compensated_sum(&terms) / (2.0 * positives * negatives);
    Ok(value)
}

/// Neumaier summation.
fn compensated_sum(values: &[f64]) -> f64 {
    let (mut sum, mut carry) = (0.0_f64, 0.0_f64);
    for &v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}
