//! Persisted model: the three trees for one horizon plus the training
//! configuration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpca::DEFAULT_COMPONENTS;
use crate::probe::TreeSet;
use crate::profile::{ForceTorqueProfile, LabeledSample, Phase, StateLabel};
use crate::tree::{DecisionTree, TreeConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingEcho {
    pub tree: TreeConfig,
    pub components: usize,
    pub training_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub t_span: f64,
    pub training: TrainingEcho,
    pub assembly: DecisionTree,
    pub probe_plus_x: DecisionTree,
    pub probe_minus_x: DecisionTree,
}

impl ModelBundle {
    pub fn trees(&self) -> TreeSet<'_> {
        TreeSet {
            assembly: &self.assembly,
            probe_plus_x: &self.probe_plus_x,
            probe_minus_x: &self.probe_minus_x,
        }
    }

    pub fn tree(&self, phase: Phase) -> &DecisionTree {
        match phase {
            Phase::Assembly => &self.assembly,
            Phase::ProbePlusX => &self.probe_plus_x,
            Phase::ProbeMinusX => &self.probe_minus_x,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Compatibility(format!("model bundle: {e}")))?;
        let version = value.get("format_version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(FORMAT_VERSION)) {
            return Err(Error::Compatibility(format!(
                "unsupported model format_version {version:?}, expected {FORMAT_VERSION}"
            )));
        }
        let bundle: ModelBundle =
            serde_json::from_value(value).map_err(|e| Error::Compatibility(format!("model bundle: {e}")))?;
        for phase in Phase::ALL {
            if bundle.tree(phase).phase != phase {
                return Err(Error::Compatibility(format!("tree slot {} holds another phase", phase.name())));
            }
        }
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Profiles of `phase` ready for fitting: assembly profiles are truncated
/// at `t_span`, probe profiles are used whole.
fn phase_profiles(samples: &[LabeledSample], phase: Phase, t_span: f64) -> Result<Vec<ForceTorqueProfile>> {
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = s
                .profile(phase)
                .ok_or_else(|| Error::Compatibility(format!("sample {i} lacks a {} profile", phase.name())))?;
            match phase {
                Phase::Assembly => p.truncate(t_span),
                _ => Ok(p.clone()),
            }
        })
        .collect()
}

/// Fits the fPCA models and tree of one phase.
pub fn train_phase_tree(
    samples: &[LabeledSample],
    phase: Phase,
    t_span: f64,
    components: usize,
    config: &TreeConfig,
) -> Result<DecisionTree> {
    let profiles = phase_profiles(samples, phase, t_span)?;
    let horizon = match phase {
        Phase::Assembly => t_span,
        _ => profiles.first().map_or(t_span, ForceTorqueProfile::duration),
    };
    let refs: Vec<&ForceTorqueProfile> = profiles.iter().collect();
    let labels: Vec<StateLabel> = samples.iter().map(|s| s.label).collect();
    DecisionTree::fit(phase, horizon, &refs, &labels, components, config)
}

/// Trains the probe trees, which do not depend on the horizon. Shared across
/// bundles by [`assemble_bundle`].
pub fn train_probe_trees(
    samples: &[LabeledSample],
    components: usize,
    config: &TreeConfig,
) -> Result<(DecisionTree, DecisionTree)> {
    Ok((
        train_phase_tree(samples, Phase::ProbePlusX, 0.0, components, config)?,
        train_phase_tree(samples, Phase::ProbeMinusX, 0.0, components, config)?,
    ))
}

pub fn assemble_bundle(
    samples: &[LabeledSample],
    t_span: f64,
    components: usize,
    config: &TreeConfig,
    probe_trees: (DecisionTree, DecisionTree),
) -> Result<ModelBundle> {
    let assembly = train_phase_tree(samples, Phase::Assembly, t_span, components, config)?;
    Ok(ModelBundle {
        format_version: FORMAT_VERSION,
        t_span,
        training: TrainingEcho {
            tree: *config,
            components,
            training_samples: samples.len(),
        },
        assembly,
        probe_plus_x: probe_trees.0,
        probe_minus_x: probe_trees.1,
    })
}

/// Trains all three trees for horizon `t_span`.
pub fn train_bundle(samples: &[LabeledSample], t_span: f64, config: &TreeConfig) -> Result<ModelBundle> {
    let probes = train_probe_trees(samples, DEFAULT_COMPONENTS, config)?;
    assemble_bundle(samples, t_span, DEFAULT_COMPONENTS, config, probes)
}

/// Text table of per-node accuracies.
pub fn accuracy_table(bundle: &ModelBundle) -> String {
    let mut out = format!(
        "t_span = {} s\n{:<14} {:>4}  {:<4} {:>8}  {}\n",
        bundle.t_span, "phase", "node", "ch", "accuracy", "split"
    );
    for phase in Phase::ALL {
        for node in bundle.tree(phase).internal_nodes() {
            let split = node.split.as_ref().expect("internal node");
            let rest: Vec<String> = node
                .pattern_ids
                .difference(&split.partition)
                .map(ToString::to_string)
                .collect();
            let part: Vec<String> = split.partition.iter().map(ToString::to_string).collect();
            out.push_str(&format!(
                "{:<14} {:>4}  {:<4} {:>7.1}%  {{{}}} | {{{}}}\n",
                phase.name(),
                node.node_id,
                split.channel.name(),
                100.0 * split.accuracy,
                part.join(","),
                rest.join(",")
            ));
        }
    }
    out
}
