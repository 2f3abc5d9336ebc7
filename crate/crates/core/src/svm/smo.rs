//! Sequential minimal optimization for the C-SVM dual
//!
//! ```text
//! min  ½ αᵀQα − Σα    s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q_ij = y_i y_j K_ij
//! ```
//!
//! Each iteration pairs the maximal KKT violator `i` with the `j` that
//! promises the largest objective decrease (second-order working-set
//! selection, as in libsvm); no shrinking.

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Gradient of the minimization objective, `Qα − 1`.
    pub gradient: Vec<f64>,
    /// Offset with decision function `Σ α_i y_i K(x_i, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
}

impl SmoSolution {
    /// Dual objective `Σα − ½ αᵀQα` (maximization form).
    pub fn dual_objective(&self) -> f64 {
        self.alpha
            .iter()
            .zip(&self.gradient)
            .map(|(a, g)| 0.5 * a - 0.5 * a * g)
            .sum()
    }

    /// Decision values at the training points, recovered from the gradient.
    pub fn training_decision_values(&self, y: &[f64]) -> Vec<f64> {
        self.gradient
            .iter()
            .zip(y)
            .map(|(g, yi)| yi * (g + 1.0) - self.rho)
            .collect()
    }
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha > 0.0) || (y < 0.0 && alpha < c)
}

/// Largest KKT violation `max_{I_up} −y G − min_{I_low} −y G`.
pub fn kkt_violation(alpha: &[f64], gradient: &[f64], y: &[f64], c: f64) -> f64 {
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..alpha.len() {
        let v = -y[t] * gradient[t];
        if in_up(alpha[t], y[t], c) {
            up = up.max(v);
        }
        if in_low(alpha[t], y[t], c) {
            low = low.min(v);
        }
    }
    if up.is_finite() && low.is_finite() {
        (up - low).max(0.0)
    } else {
        0.0
    }
}

/// Solves the dual for a precomputed row-major Gram matrix `gram` (n×n).
pub fn solve(gram: &[f64], y: &[f64], c: f64, tolerance: f64, max_iterations: usize) -> Result<SmoSolution> {
    let n = y.len();
    solve_from(gram, y, c, tolerance, max_iterations, vec![0.0; n], vec![-1.0; n])
}

/// Like [`solve`], starting from a feasible `alpha` (`0 ≤ α ≤ c`,
/// `yᵀα = 0`).
pub fn solve_warm(
    gram: &[f64],
    y: &[f64],
    c: f64,
    tolerance: f64,
    max_iterations: usize,
    alpha: Vec<f64>,
) -> Result<SmoSolution> {
    let n = y.len();
    if alpha.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: alpha.len(),
        });
    }
    let mut gradient = vec![-1.0; n];
    for (j, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            let row = &gram[j * n..(j + 1) * n];
            let ya = y[j] * a;
            for ((g, k), yt) in gradient.iter_mut().zip(row).zip(y) {
                *g += yt * ya * k;
            }
        }
    }
    solve_from(gram, y, c, tolerance, max_iterations, alpha, gradient)
}

fn solve_from(
    gram: &[f64],
    y: &[f64],
    c: f64,
    tolerance: f64,
    max_iterations: usize,
    mut alpha: Vec<f64>,
    gradient: Vec<f64>,
) -> Result<SmoSolution> {
    let n = y.len();
    debug_assert_eq!(gram.len(), n * n);
    let mask = |ok: bool| if ok { 0.0 } else { f64::NEG_INFINITY };
    // yg = y ∘ G; the masks are 0 for members of I_up / I_low and −∞ otherwise,
    // which lets one fused pass update the gradient and select the pair.
    let mut yg: Vec<f64> = gradient.iter().zip(y).map(|(g, yt)| g * yt).collect();
    let mut up: Vec<f64> = (0..n).map(|t| mask(in_up(alpha[t], y[t], c))).collect();
    let mut low: Vec<f64> = (0..n).map(|t| mask(in_low(alpha[t], y[t], c))).collect();
    let diag: Vec<f64> = (0..n).map(|t| gram[t * n + t]).collect();
    let mut iterations = 0;
    let (mut wi, mut wj) = (0.0, 0.0);
    let (mut i, mut j) = (0, 0);

    loop {
        let row_i = &gram[i * n..(i + 1) * n];
        let row_j = &gram[j * n..(j + 1) * n];
        let mut g_max = f64::NEG_INFINITY;
        let mut g_max2 = f64::NEG_INFINITY;
        let (mut next_i, mut next_j) = (usize::MAX, usize::MAX);
        let lanes = yg.iter_mut().zip(row_i).zip(row_j).zip(up.iter().zip(&low));
        for (t, (((v, ri), rj), (u, l))) in lanes.enumerate() {
            *v += ri * wi + rj * wj;
            let a = u - *v;
            if a > g_max {
                g_max = a;
                next_i = t;
            }
            let b = l + *v;
            if b > g_max2 {
                g_max2 = b;
                next_j = t;
            }
        }
        if next_i == usize::MAX || next_j == usize::MAX || g_max + g_max2 < tolerance {
            break;
        }
        if iterations >= max_iterations {
            return Err(Error::Convergence {
                iterations: max_iterations,
            });
        }
        iterations += 1;
        // second-order choice of j given i; low[t] = −∞ excludes t ∉ I_low
        let row = &gram[next_i * n..(next_i + 1) * n];
        let kii = row[next_i];
        let mut best = f64::INFINITY;
        for (t, ((&v, &l), (&k_it, &k_tt))) in yg.iter().zip(&low).zip(row.iter().zip(&diag)).enumerate() {
            let b = g_max + l + v;
            if b > 0.0 {
                let mut a = kii + k_tt - 2.0 * k_it;
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain <= best {
                    best = gain;
                    next_j = t;
                }
            }
        }
        (i, j) = (next_i, next_j);
        let grad_i = y[i] * yg[i];
        let grad_j = y[j] * yg[j];

        let old_ai = alpha[i];
        let old_aj = alpha[j];
        let kii = gram[i * n + i];
        let kjj = gram[j * n + j];
        let qij = y[i] * y[j] * gram[i * n + j];
        if y[i] != y[j] {
            let mut quad = kii + kjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad_i - grad_j) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kii + kjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad_i - grad_j) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        // Q is symmetric, so rows i and j give the needed columns
        // contiguously; the update is applied at the top of the next pass.
        wi = y[i] * (alpha[i] - old_ai);
        wj = y[j] * (alpha[j] - old_aj);
        for t in [i, j] {
            up[t] = mask(in_up(alpha[t], y[t], c));
            low[t] = mask(in_low(alpha[t], y[t], c));
        }
    }

    let gradient: Vec<f64> = yg.iter().zip(y).map(|(v, yt)| v * yt).collect();
    let rho = compute_rho(&alpha, &gradient, y, c);
    Ok(SmoSolution {
        alpha,
        gradient,
        rho,
        iterations,
    })
}

fn compute_rho(alpha: &[f64], gradient: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * gradient[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_meet_in_the_middle() {
        // linear kernel, x = ±1
        let gram = vec![1.0, -1.0, -1.0, 1.0];
        let y = vec![1.0, -1.0];
        let sol = solve(&gram, &y, 10.0, 1e-6, 1000).unwrap();
        assert!((sol.alpha[0] - 0.5).abs() < 1e-9);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-9);
        assert!(sol.rho.abs() < 1e-9);
        assert!((sol.dual_objective() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn iteration_cap_reports_convergence_error() {
        let gram = vec![1.0, 0.2, 0.1, 0.2, 1.0, 0.3, 0.1, 0.3, 1.0];
        let y = vec![1.0, -1.0, 1.0];
        assert!(matches!(
            solve(&gram, &y, 10.0, 1e-12, 0),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn warm_start_reaches_the_cold_optimum() {
        let x: [f64; 6] = [-2.0, -1.2, -0.3, 0.4, 1.1, 2.5];
        let y = vec![-1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
        let gram: Vec<f64> = x
            .iter()
            .flat_map(|a| x.iter().map(move |b| (-0.5 * (a - b) * (a - b)).exp()))
            .collect();
        let cold = solve(&gram, &y, 5.0, 1e-9, 10_000).unwrap();
        // a feasible but poor start
        let start = vec![1.0, 0.0, 1.0, 1.0, 1.0, 0.0];
        let warm = solve_warm(&gram, &y, 5.0, 1e-9, 10_000, start).unwrap();
        assert!((cold.dual_objective() - warm.dual_objective()).abs() < 1e-7);
        assert!((cold.rho - warm.rho).abs() < 1e-4);
        let again = solve_warm(&gram, &y, 5.0, 1e-9, 10_000, cold.alpha.clone()).unwrap();
        assert_eq!(again.iterations, 0);
        assert!(solve_warm(&gram, &y, 5.0, 1e-9, 10, vec![0.0; 3]).is_err());
    }
}
