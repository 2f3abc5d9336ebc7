use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `exp(-gamma |x - z|²)`
    Rbf { gamma: f64 },
    Linear,
}

impl KernelSpec {
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            KernelSpec::Rbf { gamma } => gamma.is_finite() && gamma > 0.0,
            KernelSpec::Linear => true,
        }
    }

    /// Dense row-major Gram matrix of `points`.
    pub fn gram(&self, points: &[Vec<f64>]) -> Vec<f64> {
        let n = points.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&points[i], &points[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

/// How the RBF width is chosen from (standardized) training points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaRule {
    /// `1 / (p · var)` over all feature entries.
    #[default]
    InverseVariance,
    /// `1 / median` of the pairwise squared distances.
    Median,
}

impl GammaRule {
    pub fn gamma(self, points: &[Vec<f64>]) -> f64 {
        let dim = points.first().map_or(1, Vec::len).max(1);
        let fallback = 1.0 / dim as f64;
        match self {
            GammaRule::InverseVariance => {
                let count = (points.len() * dim) as f64;
                if count == 0.0 {
                    return fallback;
                }
                let mean = points.iter().flatten().sum::<f64>() / count;
                let var = points.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
                if var > 1e-300 {
                    1.0 / (dim as f64 * var)
                } else {
                    fallback
                }
            }
            GammaRule::Median => {
                let mut d2 = Vec::new();
                for i in 0..points.len() {
                    for j in i + 1..points.len() {
                        let d: f64 = points[i]
                            .iter()
                            .zip(&points[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum();
                        d2.push(d);
                    }
                }
                if d2.is_empty() {
                    return fallback;
                }
                d2.sort_by(f64::total_cmp);
                let med = d2[d2.len() / 2];
                if med > 1e-300 {
                    1.0 / med
                } else {
                    fallback
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_and_linear_values() {
        let k = KernelSpec::Rbf { gamma: 0.5 };
        assert_eq!(k.eval(&[1.0, 2.0], &[1.0, 2.0]), 1.0);
        assert!((k.eval(&[0.0, 0.0], &[1.0, 1.0]) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(KernelSpec::Linear.eval(&[1.0, 2.0], &[3.0, -1.0]), 1.0);
        assert!(!KernelSpec::Rbf { gamma: 0.0 }.is_valid());
    }

    #[test]
    fn inverse_variance_on_standardized_data_is_one_over_p() {
        let pts = vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0], vec![-1.0, -1.0]];
        assert!((GammaRule::InverseVariance.gamma(&pts) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&KernelSpec::Rbf { gamma: 0.5 }).unwrap();
        assert_eq!(json, r#"{"kind":"rbf","gamma":0.5}"#);
    }
}
