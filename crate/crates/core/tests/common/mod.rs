//! Independent reference implementations used as test oracles. None of
//! these call into the library's numerical code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snapid::fpca::FeatureVector;
use snapid::profile::{Channel, StateLabel};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major
/// `n×n`). Returns eigenvalues in descending order with matching unit
/// eigenvectors.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| m[b * n + b].partial_cmp(&m[a * n + a]).unwrap());
    let values = idx.iter().map(|&i| m[i * n + i]).collect();
    let vectors = idx.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (values, vectors)
}

/// Dense fPCA reference: mean, `(1/N) Xᵀ X · dt` eigenpairs, eigenfunctions
/// scaled by `1/√dt` with the largest entry positive, and scores.
pub struct FpcaOracle {
    pub mean: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
    pub total: f64,
}

pub fn fpca_oracle(curves: &[Vec<f64>], dt: f64, p: usize) -> FpcaOracle {
    let n = curves.len();
    let t = curves[0].len();
    let mean: Vec<f64> = (0..t).map(|k| curves.iter().map(|c| c[k]).sum::<f64>() / n as f64).collect();
    let mut op = vec![0.0; t * t];
    for c in curves {
        for a in 0..t {
            for b in 0..t {
                op[a * t + b] += (c[a] - mean[a]) * (c[b] - mean[b]) * dt / n as f64;
            }
        }
    }
    let total = (0..t).map(|k| op[k * t + k]).sum();
    let (vals, vecs) = jacobi_eigen(&op, t);
    let eigenfunctions = vecs
        .into_iter()
        .take(p)
        .map(|u| {
            let mut xi: Vec<f64> = u.iter().map(|x| x / dt.sqrt()).collect();
            let big = xi.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if big < 0.0 {
                xi.iter_mut().for_each(|x| *x = -*x);
            }
            xi
        })
        .collect();
    FpcaOracle {
        mean,
        eigenvalues: vals.into_iter().take(p).collect(),
        eigenfunctions,
        total,
    }
}

pub fn fpca_oracle_score(o: &FpcaOracle, curve: &[f64], dt: f64) -> Vec<f64> {
    o.eigenfunctions
        .iter()
        .map(|xi| curve.iter().zip(&o.mean).zip(xi).map(|((f, m), x)| (f - m) * x * dt).sum())
        .collect()
}

/// Projects `v` onto `{0 ≤ α ≤ c, yᵀα = 0}` by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |lambda: f64| -> Vec<f64> { v.iter().zip(y).map(|(vi, yi)| (vi - lambda * yi).clamp(0.0, c)).collect() };
    let h = |lambda: f64| -> f64 { at(lambda).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    // h is nonincreasing in lambda
    let (mut lo, mut hi) = (-1.0, 1.0);
    while h(lo) < 0.0 {
        lo *= 2.0;
    }
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Maximizes `Σα − ½ αᵀQα` over the SVM dual feasible set with
/// accelerated projected gradient ascent. Returns `(alpha, objective)`.
pub fn dual_qp_oracle(gram: &[f64], y: &[f64], c: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i * n + j];
    // Gershgorin bound on the largest eigenvalue of Q
    let lip = (0..n)
        .map(|i| (0..n).map(|j| q(i, j).abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let objective = |a: &[f64]| -> f64 {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * a[j] * q(i, j);
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    let mut alpha = vec![0.0; n];
    let mut z = alpha.clone();
    let mut t = 1.0_f64;
    for _ in 0..200_000 {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q(i, j) * z[j]).sum::<f64>()).collect();
        let step: Vec<f64> = z.iter().zip(&grad).map(|(zi, g)| zi + g / lip).collect();
        let next = project(&step, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let change: f64 = next.iter().zip(&alpha).map(|(a, b)| (a - b).abs()).sum();
        z = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        alpha = next;
        t = t_next;
        if change < 1e-14 {
            break;
        }
    }
    let obj = objective(&alpha);
    (alpha, obj)
}

pub fn rbf_gram(points: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = points.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d2: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            g[i * n + j] = (-gamma * d2).exp();
        }
    }
    g
}

/// Platt's smoothed cross-entropy, written directly from its definition.
pub fn platt_nll(f: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let np = y.iter().filter(|v| **v > 0.0).count() as f64;
    let nn = y.len() as f64 - np;
    f.iter()
        .zip(y)
        .map(|(fi, yi)| {
            let t = if *yi > 0.0 { (np + 1.0) / (np + 2.0) } else { 1.0 / (nn + 2.0) };
            let p = 1.0 / (1.0 + (a * fi + b).exp());
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum()
}

/// Grid search for the Platt minimizer on `[lo, hi]²` with spacing `step`.
pub fn platt_grid_oracle(f: &[f64], y: &[f64], lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let k = ((hi - lo) / step).round() as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..=k {
        for j in 0..=k {
            let a = lo + step * i as f64;
            let b = lo + step * j as f64;
            let l = platt_nll(f, y, a, b);
            if l < best.0 {
                best = (l, a, b);
            }
        }
    }
    (best.1, best.2)
}

/// Literal node accuracy evaluated from `(true_in_c, predicted_in_c, prob)` triples.
pub fn eq1_literal(samples: &[(bool, bool, f64)]) -> f64 {
    let (mut tp, mut fn_, mut fp, mut tn) = (0.0, 0.0, 0.0, 0.0);
    let (mut ptp, mut pfn, mut pfp, mut ptn) = (0.0, 0.0, 0.0, 0.0);
    for &(truth, pred, p) in samples {
        match (truth, pred) {
            (true, true) => {
                tp += 1.0;
                ptp += p
            }
            (true, false) => {
                fn_ += 1.0;
                pfn += p
            }
            (false, true) => {
                fp += 1.0;
                pfp += p
            }
            (false, false) => {
                tn += 1.0;
                ptn += p
            }
        }
    }
    ((ptp + pfp) / (tp + fn_) + (pfn + ptn) / (fp + tn)) / 2.0
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

/// Three states, four samples each. Tx isolates S4 by a wide margin, Fy
/// separates S1 from S2 with some overlap, the other channels carry
/// class-independent noise.
pub fn toy_tree_set() -> (Vec<FeatureVector>, Vec<StateLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (label, fy_center, tx_center) in [(StateLabel::S1, -1.0, 0.0), (StateLabel::S2, 1.0, 0.3), (StateLabel::S4, 0.5, 6.0)] {
        for _ in 0..4 {
            let mut scores: [Vec<f64>; 6] = std::array::from_fn(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            scores[Channel::Fy.index()] = vec![fy_center + rng.random_range(-1.2..1.2), rng.random_range(-1.0..1.0)];
            scores[Channel::Tx.index()] = vec![tx_center + rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
            features.push(FeatureVector { channel_scores: scores });
            labels.push(label);
        }
    }
    (features, labels)
}

fn oracle_standardize(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = points.len() as f64;
    let d = points[0].len();
    let mean: Vec<f64> = (0..d).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|k| {
            let s = (points.iter().map(|p| (p[k] - mean[k]).powi(2)).sum::<f64>() / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, sd)
}

/// Platt fit by coarse-then-fine grid search on the smoothed loss.
fn oracle_platt(f: &[f64], y: &[f64]) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let scan = |a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64, step: f64, best: &mut (f64, f64, f64)| {
        let na = ((a_hi - a_lo) / step).round() as usize;
        let nb = ((b_hi - b_lo) / step).round() as usize;
        for i in 0..=na {
            for j in 0..=nb {
                let (a, b) = (a_lo + step * i as f64, b_lo + step * j as f64);
                let l = platt_nll(f, y, a, b);
                if l < best.0 {
                    *best = (l, a, b);
                }
            }
        }
    };
    scan(-20.0, 5.0, -10.0, 10.0, 0.1, &mut best);
    let (a0, b0) = (best.1, best.2);
    scan(a0 - 0.1, a0 + 0.1, b0 - 0.1, b0 + 0.1, 0.001, &mut best);
    (best.1, best.2)
}

/// Leave-one-out node accuracy of one candidate, with every step done from
/// scratch: fold standardization, RBF width, dual QP, bias, Platt.
pub fn loo_eq1_oracle(points: &[Vec<f64>], y_full: &[f64]) -> f64 {
    let n = points.len();
    let c = 10.0;
    let mut triples = Vec::new();
    for held in 0..n {
        let train: Vec<Vec<f64>> = (0..n).filter(|&i| i != held).map(|i| points[i].clone()).collect();
        let y: Vec<f64> = (0..n).filter(|&i| i != held).map(|i| y_full[i]).collect();
        let (mean, sd) = oracle_standardize(&train);
        let z = |p: &[f64]| -> Vec<f64> { p.iter().zip(&mean).zip(&sd).map(|((v, m), s)| (v - m) / s).collect() };
        let zs: Vec<Vec<f64>> = train.iter().map(|p| z(p)).collect();
        let entries: Vec<f64> = zs.iter().flatten().copied().collect();
        let mu = entries.iter().sum::<f64>() / entries.len() as f64;
        let var = entries.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / entries.len() as f64;
        let gamma = 1.0 / (zs[0].len() as f64 * var);
        let gram = rbf_gram(&zs, gamma);
        let (alpha, _) = dual_qp_oracle(&gram, &y, c);
        let m = y.len();
        let raw = |i: usize| -> f64 { (0..m).map(|j| alpha[j] * y[j] * gram[i * m + j]).sum() };
        let free: Vec<usize> = (0..m).filter(|&i| alpha[i] > 1e-6 && alpha[i] < c - 1e-6).collect();
        let b = if free.is_empty() {
            // midpoint of the interval allowed by the bound multipliers
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..m {
                let edge = y[i] - raw(i);
                if (alpha[i] <= 1e-6) == (y[i] > 0.0) {
                    lo = lo.max(edge);
                } else {
                    hi = hi.min(edge);
                }
            }
            (lo + hi) / 2.0
        } else {
            free.iter().map(|&i| y[i] - raw(i)).sum::<f64>() / free.len() as f64
        };
        let train_f: Vec<f64> = (0..m).map(|i| raw(i) + b).collect();
        let (pa, pb) = oracle_platt(&train_f, &y);
        let zh = z(&points[held]);
        let f: f64 = (0..m)
            .map(|j| {
                let d2: f64 = zs[j].iter().zip(&zh).map(|(u, v)| (u - v).powi(2)).sum();
                alpha[j] * y[j] * (-gamma * d2).exp()
            })
            .sum::<f64>()
            + b;
        let p_pos = 1.0 / (1.0 + (pa * f + pb).exp());
        let predicted = f >= 0.0;
        triples.push((y_full[held] > 0.0, predicted, if predicted { p_pos } else { 1.0 - p_pos }));
    }
    eq1_literal(&triples)
}
