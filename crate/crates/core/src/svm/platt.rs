//! Sigmoid calibration of decision values, `P(+1 | f) = 1 / (1 + exp(A f + B))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const GRADIENT_TOLERANCE: f64 = 1e-10;
const MIN_STEP: f64 = 1e-10;
/// Ridge on the Newton system; keeps it solvable when all decision values coincide.
const HESSIAN_RIDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub a: f64,
    pub b: f64,
}

impl PlattParams {
    /// Probability of the positive class for decision value `f`.
    pub fn probability(&self, f: f64) -> f64 {
        sigmoid_neg(self.a * f + self.b)
    }
}

/// `1 / (1 + exp(z))`, evaluated without overflow.
pub fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Smoothed targets `t₊ = (N₊+1)/(N₊+2)` and `t₋ = 1/(N₋+2)`.
pub fn smoothed_targets(labels: &[f64]) -> (f64, f64) {
    let pos = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let neg = labels.len() as f64 - pos;
    ((pos + 1.0) / (pos + 2.0), 1.0 / (neg + 2.0))
}

/// Cross-entropy of the sigmoid against the smoothed targets.
pub fn platt_loss(decision_values: &[f64], labels: &[f64], a: f64, b: f64) -> f64 {
    let (hi, lo) = smoothed_targets(labels);
    decision_values
        .iter()
        .zip(labels)
        .map(|(&f, &y)| {
            let t = if y > 0.0 { hi } else { lo };
            let z = a * f + b;
            // t·ln(1+e^z) + (1−t)·ln(1+e^−z), arranged to avoid overflow
            if z >= 0.0 {
                t * z + (1.0 + (-z).exp()).ln()
            } else {
                (t - 1.0) * z + (1.0 + z.exp()).ln()
            }
        })
        .sum()
}

/// Newton's method with backtracking line search on [`platt_loss`].
pub fn fit_platt(decision_values: &[f64], labels: &[f64]) -> Result<PlattParams> {
    fit_platt_from(decision_values, labels, None)
}

/// [`fit_platt`] starting from `init` instead of the prior-based default.
pub fn fit_platt_from(decision_values: &[f64], labels: &[f64], init: Option<PlattParams>) -> Result<PlattParams> {
    if decision_values.len() != labels.len() {
        return Err(Error::Shape {
            expected: labels.len(),
            got: decision_values.len(),
        });
    }
    if decision_values.iter().any(|f| !f.is_finite()) {
        return Err(Error::Data("non-finite decision value".into()));
    }
    let pos = labels.iter().filter(|&&y| y > 0.0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let (hi, lo) = smoothed_targets(labels);
    let targets: Vec<f64> = labels.iter().map(|&y| if y > 0.0 { hi } else { lo }).collect();

    let (mut a, mut b) = match init {
        Some(p) if p.a.is_finite() && p.b.is_finite() => (p.a, p.b),
        _ => (0.0, ((neg as f64 + 1.0) / (pos as f64 + 1.0)).ln()),
    };
    let mut fval = platt_loss(decision_values, labels, a, b);

    for _ in 0..MAX_ITERATIONS {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (HESSIAN_RIDGE, HESSIAN_RIDGE, 0.0, 0.0, 0.0);
        for (&f, &t) in decision_values.iter().zip(&targets) {
            let p = sigmoid_neg(a * f + b);
            let q = 1.0 - p;
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < GRADIENT_TOLERANCE && g2.abs() < GRADIENT_TOLERANCE {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;

        let mut step = 1.0;
        let mut accepted = false;
        while step >= MIN_STEP {
            let na = a + step * da;
            let nb = b + step * db;
            let nf = platt_loss(decision_values, labels, na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                accepted = true;
                break;
            }
            step /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    Ok(PlattParams { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_values_give_negative_slope() {
        let f = [-3.0, -2.0, -1.5, -1.0, 1.0, 1.5, 2.0, 3.0];
        let y = [-1.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0];
        let p = fit_platt(&f, &y).unwrap();
        assert!(p.a < 0.0);
        let mid = -p.b / p.a;
        assert!(mid > -1.0 && mid < 1.0);
        assert!(p.probability(1.0) > 0.5 && p.probability(-1.0) < 0.5);
    }

    #[test]
    fn constant_values_return_mean_target() {
        for (pos, neg) in [(3usize, 3usize), (5, 2), (1, 6)] {
            let y: Vec<f64> = std::iter::repeat_n(1.0, pos)
                .chain(std::iter::repeat_n(-1.0, neg))
                .collect();
            let f = vec![0.7; y.len()];
            let p = fit_platt(&f, &y).unwrap();
            let (hi, lo) = smoothed_targets(&y);
            let mean_target = (pos as f64 * hi + neg as f64 * lo) / (pos + neg) as f64;
            assert!((p.probability(0.7) - mean_target).abs() < 1e-6);
            if pos == neg {
                let prior = (pos as f64 + 1.0) / (y.len() as f64 + 2.0);
                assert!((p.probability(0.7) - prior).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            fit_platt(&[1.0, f64::INFINITY], &[1.0, -1.0]),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            fit_platt(&[1.0, 2.0], &[1.0, 1.0]),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid_neg(0.0), 0.5);
        assert!(sigmoid_neg(800.0) >= 0.0 && sigmoid_neg(-800.0) <= 1.0);
        assert!((sigmoid_neg(2.0) + sigmoid_neg(-2.0) - 1.0).abs() < 1e-15);
    }
}
