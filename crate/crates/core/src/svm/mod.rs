//! Binary kernel SVM trained by SMO, with sigmoid probability calibration.

mod kernel;
mod platt;
pub mod smo;
mod standardize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kernel::{GammaRule, KernelSpec};
pub use platt::{fit_platt, fit_platt_from, platt_loss, sigmoid_neg, smoothed_targets, PlattParams};
pub use smo::SmoSolution;
pub use standardize::Standardizer;

pub const DEFAULT_C: f64 = 10.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelSpec,
    /// Stop once the maximal KKT violation falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Standardize each input dimension with training statistics first.
    pub standardize: bool,
}

impl SvmParams {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        Self {
            c,
            kernel,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            standardize: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !self.kernel.is_valid() {
            return Err(Error::Config(format!("invalid kernel {:?}", self.kernel)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub standardizer: Standardizer,
    /// Stored in standardized coordinates.
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub platt: Option<PlattParams>,
    pub regularization_c: f64,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let z = self.standardizer.apply(x);
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * self.kernel.eval(sv, &z))
            .sum::<f64>()
            + self.bias)
    }

    /// Calibrated probability that `x` belongs to the positive class.
    pub fn class_probability(&self, x: &[f64]) -> Result<f64> {
        let platt = self.platt.ok_or(Error::Uncalibrated)?;
        Ok(platt.probability(self.decision_value(x)?))
    }
}

/// Training points after standardization, with their Gram matrix. One
/// problem can be solved for many label vectors.
#[derive(Debug, Clone)]
pub struct SvmProblem {
    standardizer: Standardizer,
    points: Vec<Vec<f64>>,
    kernel: KernelSpec,
    gram: Vec<f64>,
}

impl SvmProblem {
    pub fn new(points: &[Vec<f64>], standardize: bool, kernel: impl FnOnce(&[Vec<f64>]) -> KernelSpec) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.len() < 2 || dim == 0 {
            return Err(Error::Data(format!(
                "need at least 2 non-empty points, got {}",
                points.len()
            )));
        }
        for p in points {
            if p.len() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data("non-finite SVM input".into()));
            }
        }
        let standardizer = if standardize {
            Standardizer::fit(points)
        } else {
            Standardizer::identity(dim)
        };
        let points: Vec<Vec<f64>> = points.iter().map(|p| standardizer.apply(p)).collect();
        let kernel = kernel(&points);
        let gram = kernel.gram(&points);
        Ok(Self {
            standardizer,
            points,
            kernel,
            gram,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn solve(&self, labels: &[f64], c: f64, tolerance: f64, max_iterations: usize) -> Result<SmoSolution> {
        check_labels(labels, self.len())?;
        smo::solve(&self.gram, labels, c, tolerance, max_iterations)
    }

    /// Solves starting from the feasible dual point `alpha`.
    pub fn solve_warm(
        &self,
        labels: &[f64],
        c: f64,
        tolerance: f64,
        max_iterations: usize,
        alpha: Vec<f64>,
    ) -> Result<SmoSolution> {
        check_labels(labels, self.len())?;
        smo::solve_warm(&self.gram, labels, c, tolerance, max_iterations, alpha)
    }

    /// Decision value of a raw (unstandardized) point under `solution`.
    pub fn decision_value(&self, solution: &SmoSolution, labels: &[f64], x: &[f64]) -> f64 {
        let z = self.standardizer.apply(x);
        solution
            .alpha
            .iter()
            .zip(labels)
            .zip(&self.points)
            .filter(|((a, _), _)| **a > 0.0)
            .map(|((a, y), p)| a * y * self.kernel.eval(p, &z))
            .sum::<f64>()
            - solution.rho
    }

    /// Solves, calibrates on the training decision values, and packages the
    /// support vectors.
    pub fn fit(&self, labels: &[f64], c: f64, tolerance: f64, max_iterations: usize) -> Result<SvmModel> {
        let solution = self.solve(labels, c, tolerance, max_iterations)?;
        let platt = fit_platt(&solution.training_decision_values(labels), labels)?;
        Ok(self.package(&solution, labels, c, Some(platt)))
    }

    pub fn package(&self, solution: &SmoSolution, labels: &[f64], c: f64, platt: Option<PlattParams>) -> SvmModel {
        let mut support_vectors = Vec::new();
        let mut dual_coefs = Vec::new();
        for ((a, y), p) in solution.alpha.iter().zip(labels).zip(&self.points) {
            if *a > 0.0 {
                support_vectors.push(p.clone());
                dual_coefs.push(a * y);
            }
        }
        SvmModel {
            kernel: self.kernel,
            standardizer: self.standardizer.clone(),
            support_vectors,
            dual_coefs,
            bias: -solution.rho,
            platt,
            regularization_c: c,
        }
    }
}

fn check_labels(labels: &[f64], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: labels.len(),
        });
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::Data(format!("labels must be ±1, got {bad}")));
    }
    let pos = labels.iter().filter(|&&y| y > 0.0).count();
    if pos == 0 || pos == n {
        return Err(Error::DegenerateLabels);
    }
    Ok(())
}

/// Trains a calibrated binary SVM on `points` with ±1 `labels`.
pub fn train_svm(points: &[Vec<f64>], labels: &[f64], params: &SvmParams) -> Result<SvmModel> {
    params.validate()?;
    check_labels(labels, points.len())?;
    let problem = SvmProblem::new(points, params.standardize, |_| params.kernel)?;
    problem.fit(labels, params.c, params.tolerance, params.max_iterations)
}
