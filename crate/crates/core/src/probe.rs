//! Online identification: classify the early-stopped assembly profile, and
//! when any node on its path is unsure, probe in ±x and trust whichever
//! probe tree's weakest node is stronger. Also maps states to recovery moves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{ForceTorqueProfile, Phase, StateLabel};
use crate::tree::{ClassificationOutcome, DecisionTree};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentificationPolicyConfig {
    /// Probing triggers when some node probability is strictly below this.
    pub probability_threshold: f64,
    pub t_span: f64,
    /// Lateral probe stroke, mm.
    pub probe_distance: f64,
    /// mm
    pub recovery_step_x: f64,
    /// deg
    pub recovery_step_theta: f64,
    pub max_retries: usize,
}

impl Default for IdentificationPolicyConfig {
    fn default() -> Self {
        Self {
            probability_threshold: 0.2,
            t_span: 2.0,
            probe_distance: 2.0,
            recovery_step_x: 1.0,
            recovery_step_theta: 1.0,
            max_retries: 3,
        }
    }
}

impl IdentificationPolicyConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.probability_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Config(format!("probability_threshold must lie in (0, 1), got {t}")));
        }
        for (name, v) in [
            ("t_span", self.t_span),
            ("probe_distance", self.probe_distance),
            ("recovery_step_x", self.recovery_step_x),
            ("recovery_step_theta", self.recovery_step_theta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// The three trees used online.
#[derive(Debug, Clone, Copy)]
pub struct TreeSet<'a> {
    pub assembly: &'a DecisionTree,
    pub probe_plus_x: &'a DecisionTree,
    pub probe_minus_x: &'a DecisionTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Assembly,
    ProbePlusX,
    ProbeMinusX,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub predicted: StateLabel,
    pub used_probing: bool,
    pub assembly_outcome: ClassificationOutcome,
    /// `(plus_x, minus_x)` when probing ran.
    pub probe_outcomes: Option<(ClassificationOutcome, ClassificationOutcome)>,
    pub chosen_source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryAction {
    /// mm
    pub delta_x: f64,
    /// deg
    pub delta_theta: f64,
    pub retract_first: bool,
}

/// Runs the two-stage policy. `probe_supplier` is called with
/// [`Phase::ProbePlusX`] and then [`Phase::ProbeMinusX`], only when probing
/// is needed.
pub fn identify<F>(
    assembly_profile: &ForceTorqueProfile,
    trees: TreeSet<'_>,
    mut probe_supplier: F,
    config: &IdentificationPolicyConfig,
) -> Result<IdentificationResult>
where
    F: FnMut(Phase) -> Result<ForceTorqueProfile>,
{
    let assembly_outcome = trees.assembly.classify_profile(assembly_profile)?;
    if assembly_outcome.min_class_probability >= config.probability_threshold {
        return Ok(IdentificationResult {
            predicted: assembly_outcome.predicted,
            used_probing: false,
            assembly_outcome,
            probe_outcomes: None,
            chosen_source: Source::Assembly,
        });
    }
    let mut probe = |phase: Phase, tree: &DecisionTree| -> Result<ClassificationOutcome> {
        let profile = probe_supplier(phase).map_err(|e| match e {
            e @ Error::ProbeUnavailable(_) => e,
            other => Error::ProbeUnavailable(format!("{}: {other}", phase.name())),
        })?;
        tree.classify_profile(&profile)
    };
    let plus = probe(Phase::ProbePlusX, trees.probe_plus_x)?;
    let minus = probe(Phase::ProbeMinusX, trees.probe_minus_x)?;
    let (predicted, chosen_source) = fuse_probe_results(&plus, &minus);
    Ok(IdentificationResult {
        predicted,
        used_probing: true,
        assembly_outcome,
        probe_outcomes: Some((plus, minus)),
        chosen_source,
    })
}

/// Picks the probe whose weakest traversed node is more accurate; ties go
/// to +x.
pub fn fuse_probe_results(plus: &ClassificationOutcome, minus: &ClassificationOutcome) -> (StateLabel, Source) {
    if plus.min_node_accuracy >= minus.min_node_accuracy {
        (plus.predicted, Source::ProbePlusX)
    } else {
        (minus.predicted, Source::ProbeMinusX)
    }
}

/// Shift opposite to the identified error's signs. Success needs none.
pub fn recovery_action(predicted: StateLabel, config: &IdentificationPolicyConfig) -> RecoveryAction {
    RecoveryAction {
        delta_x: -f64::from(predicted.x_sign()) * config.recovery_step_x,
        delta_theta: -f64::from(predicted.theta_sign()) * config.recovery_step_theta,
        retract_first: !predicted.is_success(),
    }
}
