//! Functional principal component analysis of one channel across a set of
//! profiles.
//!
//! Curves live on a common uniform grid with spacing `dt`. The covariance
//! surface `v(s, t) = 1/N Σ (f_i(s) - f̄(s)) (f_i(t) - f̄(t))` is discretized
//! on the grid and the integral operator `∫ v(s, t) ξ(s) ds` is approximated
//! with the rectangle rule, giving the symmetric matrix `V·dt`. Its
//! eigenvectors, rescaled to unit norm under `Σ ξ(t_k)² dt`, are the
//! eigenfunctions; scores are `Σ (f(t_k) - f̄(t_k)) ξ(t_k) dt`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{Channel, ForceTorqueProfile};

/// Default number of retained components per channel.
pub const DEFAULT_COMPONENTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpcaModel {
    pub grid_len: usize,
    pub sample_period: f64,
    pub mean_curve: Vec<f64>,
    /// Leading eigenfunctions, one curve each, by descending eigenvalue.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Trace of the discretized covariance operator.
    pub total_variance: f64,
}

impl FpcaModel {
    /// Number of retained components.
    pub fn components(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Fits the mean curve and the `p` leading eigenpairs of `curves`.
pub fn fit_fpca(curves: &[Vec<f64>], sample_period: f64, p: usize) -> Result<FpcaModel> {
    let n = curves.len();
    if n < 2 {
        return Err(Error::Data(format!("fPCA needs at least 2 curves, got {n}")));
    }
    let t = curves[0].len();
    if t < 2 {
        return Err(Error::InvalidGrid(format!(
            "fPCA needs at least 2 grid points, got {t}"
        )));
    }
    if !(sample_period.is_finite() && sample_period > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "sample period must be positive, got {sample_period}"
        )));
    }
    for curve in curves {
        if curve.len() != t {
            return Err(Error::Shape {
                expected: t,
                got: curve.len(),
            });
        }
        if curve.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in fPCA input".into()));
        }
    }
    let max_rank = (n - 1).min(t);
    if p == 0 || p > max_rank {
        return Err(Error::Rank {
            requested: p,
            max: max_rank,
        });
    }

    let mut mean_curve = vec![0.0; t];
    for curve in curves {
        for (m, v) in mean_curve.iter_mut().zip(curve) {
            *m += v;
        }
    }
    for m in &mut mean_curve {
        *m /= n as f64;
    }

    let centered = DMatrix::from_fn(n, t, |i, k| curves[i][k] - mean_curve[k]);
    let operator = (centered.transpose() * &centered) * (sample_period / n as f64);
    let total_variance = operator.trace();

    let eigen = SymmetricEigen::new(operator);
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let norm = sample_period.sqrt().recip();
    let mut eigenvalues = Vec::with_capacity(p);
    let mut eigenfunctions = Vec::with_capacity(p);
    for &idx in order.iter().take(p) {
        eigenvalues.push(eigen.eigenvalues[idx]);
        let mut xi: Vec<f64> = eigen.eigenvectors.column(idx).iter().map(|u| u * norm).collect();
        orient(&mut xi);
        eigenfunctions.push(xi);
    }

    Ok(FpcaModel {
        grid_len: t,
        sample_period,
        mean_curve,
        eigenfunctions,
        eigenvalues,
        total_variance,
    })
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Principal component scores of `curve`.
pub fn score(model: &FpcaModel, curve: &[f64]) -> Result<Vec<f64>> {
    if curve.len() != model.grid_len {
        return Err(Error::Shape {
            expected: model.grid_len,
            got: curve.len(),
        });
    }
    Ok(model
        .eigenfunctions
        .iter()
        .map(|xi| {
            curve
                .iter()
                .zip(&model.mean_curve)
                .zip(xi)
                .map(|((f, m), x)| (f - m) * x)
                .sum::<f64>()
                * model.sample_period
        })
        .collect())
}

/// Fraction of the total variance carried by the first `q` components.
/// A dataset without variance reports 1.
pub fn contribution_rate(model: &FpcaModel, q: usize) -> Result<f64> {
    if q == 0 || q > model.components() {
        return Err(Error::Rank {
            requested: q,
            max: model.components(),
        });
    }
    if model.total_variance <= 0.0 {
        return Ok(1.0);
    }
    let captured: f64 = model.eigenvalues[..q].iter().sum();
    Ok((captured / model.total_variance).clamp(0.0, 1.0))
}

/// Per-channel score vectors of one profile, in `Channel::ALL` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub channel_scores: [Vec<f64>; 6],
}

impl FeatureVector {
    pub fn channel(&self, channel: Channel) -> &[f64] {
        &self.channel_scores[channel.index()]
    }

    /// Total number of scores over all channels.
    pub fn dimension(&self) -> usize {
        self.channel_scores.iter().map(Vec::len).sum()
    }
}

fn check_grid(model: &FpcaModel, profile: &ForceTorqueProfile) -> Result<()> {
    if profile.len() != model.grid_len {
        return Err(Error::Shape {
            expected: model.grid_len,
            got: profile.len(),
        });
    }
    let rel = (profile.sample_period() - model.sample_period).abs() / model.sample_period;
    if rel > 1e-6 {
        return Err(Error::InvalidGrid(format!(
            "profile sample period {} differs from model {}",
            profile.sample_period(),
            model.sample_period
        )));
    }
    Ok(())
}

pub fn extract_features(models: &[FpcaModel; 6], profile: &ForceTorqueProfile) -> Result<FeatureVector> {
    let mut channel_scores: [Vec<f64>; 6] = Default::default();
    for channel in Channel::ALL {
        let model = &models[channel.index()];
        check_grid(model, profile)?;
        channel_scores[channel.index()] = score(model, profile.channel(channel))?;
    }
    Ok(FeatureVector { channel_scores })
}

/// Fits one model per channel over `profiles`, which must share one grid.
pub fn fit_channel_models(profiles: &[&ForceTorqueProfile], p: usize) -> Result<[FpcaModel; 6]> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::Data("no profiles to fit".into()))?;
    let dt = first.sample_period();
    for profile in profiles {
        if profile.len() != first.len() {
            return Err(Error::Shape {
                expected: first.len(),
                got: profile.len(),
            });
        }
    }
    let fit = |channel: Channel| {
        let curves: Vec<Vec<f64>> = profiles.iter().map(|p| p.channel(channel).to_vec()).collect();
        fit_fpca(&curves, dt, p)
    };
    Ok([
        fit(Channel::Fx)?,
        fit(Channel::Fy)?,
        fit(Channel::Fz)?,
        fit(Channel::Tx)?,
        fit(Channel::Ty)?,
        fit(Channel::Tz)?,
    ])
}
