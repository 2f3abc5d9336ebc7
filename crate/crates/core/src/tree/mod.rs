//! Decision tree whose nodes are binary SVMs on a single channel's scores.
//!
//! Construction expands nodes breadth first. At each node with more than one
//! state, every (channel, bipartition) candidate is scored by leave-one-out
//! cross-validation with [`node_accuracy`]; the best candidate's SVM is
//! retrained on all node samples, and the samples are passed to the children
//! by their true state.

mod accuracy;
mod partition;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpca::{extract_features, fit_channel_models, FeatureVector, FpcaModel};
use crate::profile::{Channel, ForceTorqueProfile, Phase, StateLabel};
use crate::svm::{fit_platt, fit_platt_from, GammaRule, PlattParams, KernelSpec, SvmModel, SvmProblem, DEFAULT_C, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};

pub use accuracy::{node_accuracy, SplitPrediction};
pub use partition::enumerate_bipartitions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub c: f64,
    pub gamma_rule: GammaRule,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub standardize: bool,
    pub eq1_corrected: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            gamma_rule: GammaRule::InverseVariance,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            standardize: true,
            eq1_corrected: false,
        }
    }
}

impl TreeConfig {
    fn problem(&self, points: &[Vec<f64>]) -> Result<SvmProblem> {
        let rule = self.gamma_rule;
        SvmProblem::new(points, self.standardize, |z| KernelSpec::Rbf { gamma: rule.gamma(z) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSplit {
    /// Channel whose scores the node SVM reads.
    pub channel: Channel,
    /// States routed to the positive child.
    pub partition: BTreeSet<StateLabel>,
    pub svm: SvmModel,
    /// Cross-validated accuracy of the chosen candidate.
    pub accuracy: f64,
    /// `[positive, negative]` child ids.
    pub children: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub node_id: usize,
    pub pattern_ids: BTreeSet<StateLabel>,
    /// `None` for leaves.
    pub split: Option<NodeSplit>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub node_id: usize,
    pub side: Side,
    /// Calibrated probability of `side`.
    pub class_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationOutcome {
    pub predicted: StateLabel,
    pub node_path: Vec<PathStep>,
    pub min_class_probability: f64,
    /// Smallest training accuracy among the traversed nodes.
    pub min_node_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub phase: Phase,
    pub t_span: f64,
    pub fpca_models: [FpcaModel; 6],
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    /// Fits per-channel fPCA models on `profiles` and builds the tree on the
    /// resulting scores.
    pub fn fit(
        phase: Phase,
        t_span: f64,
        profiles: &[&ForceTorqueProfile],
        labels: &[StateLabel],
        components: usize,
        config: &TreeConfig,
    ) -> Result<DecisionTree> {
        let fpca_models = fit_channel_models(profiles, components)?;
        let features = profiles
            .iter()
            .map(|p| extract_features(&fpca_models, p))
            .collect::<Result<Vec<_>>>()?;
        let nodes = build_tree(&features, labels, config)?;
        Ok(DecisionTree {
            phase,
            t_span,
            fpca_models,
            nodes,
        })
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| !n.is_leaf())
    }

    pub fn features(&self, profile: &ForceTorqueProfile) -> Result<FeatureVector> {
        extract_features(&self.fpca_models, profile)
    }

    /// Classifies a profile, first truncating it at `t_span` if it is longer
    /// than the training curves.
    pub fn classify_profile(&self, profile: &ForceTorqueProfile) -> Result<ClassificationOutcome> {
        let grid_len = self.fpca_models[0].grid_len;
        if profile.len() > grid_len {
            classify(self, &self.features(&profile.truncate(self.t_span)?)?)
        } else {
            classify(self, &self.features(profile)?)
        }
    }

    /// Leaf reached when every node routes by true-state membership.
    pub fn leaf_for_label(&self, label: StateLabel) -> Option<&TreeNode> {
        let mut node = self.nodes.first()?;
        if !node.pattern_ids.contains(&label) {
            return None;
        }
        while let Some(split) = &node.split {
            let next = if split.partition.contains(&label) {
                split.children[0]
            } else {
                split.children[1]
            };
            node = &self.nodes[next];
        }
        Some(node)
    }
}

/// Descends by the sign of each node's decision value (`f ≥ 0` is the
/// positive side) and records the calibrated probability of every side
/// taken.
pub fn classify(tree: &DecisionTree, feature: &FeatureVector) -> Result<ClassificationOutcome> {
    for (c, model) in tree.fpca_models.iter().enumerate() {
        let got = feature.channel_scores[c].len();
        if got != model.components() {
            return Err(Error::Shape {
                expected: model.components(),
                got,
            });
        }
    }
    let mut node = tree
        .nodes
        .first()
        .ok_or_else(|| Error::Data("empty tree".into()))?;
    let mut node_path = Vec::new();
    let mut min_class_probability: f64 = 1.0;
    let mut min_node_accuracy: f64 = 1.0;
    while let Some(split) = &node.split {
        let x = feature.channel(split.channel);
        let f = split.svm.decision_value(x)?;
        let p_positive = split.svm.class_probability(x)?;
        let (side, prob, next) = if f >= 0.0 {
            (Side::Positive, p_positive, split.children[0])
        } else {
            (Side::Negative, 1.0 - p_positive, split.children[1])
        };
        node_path.push(PathStep {
            node_id: node.node_id,
            side,
            class_probability: prob,
        });
        min_class_probability = min_class_probability.min(prob);
        min_node_accuracy = min_node_accuracy.min(split.accuracy);
        node = tree
            .nodes
            .get(next)
            .ok_or_else(|| Error::Data(format!("dangling child id {next}")))?;
    }
    let predicted = match node.pattern_ids.iter().next() {
        Some(&label) if node.pattern_ids.len() == 1 => label,
        _ => return Err(Error::Data(format!("leaf {} is not pure", node.node_id))),
    };
    Ok(ClassificationOutcome {
        predicted,
        node_path,
        min_class_probability,
        min_node_accuracy,
    })
}

/// Leave-one-out accuracy of every candidate split of one channel, indexed
/// like `partitions`.
///
/// Each fold is solved from the full-data solution with the held-out sample
/// removed, which is far cheaper than solving from zero and converges to
/// the same optimum.
pub fn candidate_accuracies(
    points: &[Vec<f64>],
    labels: &[StateLabel],
    partitions: &[BTreeSet<StateLabel>],
    config: &TreeConfig,
) -> Result<Vec<f64>> {
    let n = points.len();
    let full = config.problem(points)?;
    let targets: Vec<Vec<f64>> = partitions.iter().map(|c| split_targets(labels, c)).collect();
    let seeds: Vec<(Vec<f64>, PlattParams)> = targets
        .iter()
        .map(|y| {
            let solution = full.solve(y, config.c, config.tolerance, config.max_iterations)?;
            let platt = fit_platt(&solution.training_decision_values(y), y)?;
            Ok((solution.alpha, platt))
        })
        .collect::<Result<_>>()?;
    let folds: Vec<Vec<SplitPrediction>> = (0..n)
        .into_par_iter()
        .map(|held| held_out_predictions(points, &targets, &seeds, config, held))
        .collect::<Result<_>>()?;
    (0..partitions.len())
        .map(|c| {
            let per_sample: Vec<SplitPrediction> = folds.iter().map(|f| f[c]).collect();
            node_accuracy(&per_sample, config.eq1_corrected)
        })
        .collect()
}

fn split_targets(labels: &[StateLabel], partition: &BTreeSet<StateLabel>) -> Vec<f64> {
    labels
        .iter()
        .map(|l| if partition.contains(l) { 1.0 } else { -1.0 })
        .collect()
}

/// Drops sample `held` from a feasible dual point and shrinks the opposite
/// class proportionally so that `yᵀα = 0` still holds.
fn warm_start(alpha: &[f64], y: &[f64], held: usize) -> Vec<f64> {
    let removed = alpha[held];
    let opposite: f64 = alpha
        .iter()
        .zip(y)
        .filter(|(_, yi)| **yi != y[held])
        .map(|(a, _)| a)
        .sum();
    let scale = if opposite > 0.0 { ((opposite - removed) / opposite).max(0.0) } else { 1.0 };
    alpha
        .iter()
        .zip(y)
        .enumerate()
        .filter(|(i, _)| *i != held)
        .map(|(_, (a, yi))| if *yi != y[held] { a * scale } else { *a })
        .collect()
}

fn held_out_predictions(
    points: &[Vec<f64>],
    targets: &[Vec<f64>],
    seeds: &[(Vec<f64>, PlattParams)],
    config: &TreeConfig,
    held: usize,
) -> Result<Vec<SplitPrediction>> {
    let train_points: Vec<Vec<f64>> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != held)
        .map(|(_, p)| p.clone())
        .collect();
    let problem = config.problem(&train_points)?;
    targets
        .iter()
        .zip(seeds)
        .map(|(y_full, (alpha, platt))| {
            let true_in_c = y_full[held] > 0.0;
            let y: Vec<f64> = y_full
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != held)
                .map(|(_, v)| *v)
                .collect();
            let alpha0 = warm_start(alpha, y_full, held);
            let solution = problem.solve_warm(&y, config.c, config.tolerance, config.max_iterations, alpha0)?;
            let platt = fit_platt_from(&solution.training_decision_values(&y), &y, Some(*platt))?;
            let f = problem.decision_value(&solution, &y, &points[held]);
            let p_positive = platt.probability(f);
            let predicted_in_c = f >= 0.0;
            Ok(SplitPrediction {
                true_in_c,
                predicted_in_c,
                prob_of_predicted_side: if predicted_in_c { p_positive } else { 1.0 - p_positive },
            })
        })
        .collect()
}

/// Builds the node list for `features` labeled by `labels`.
pub fn build_tree(features: &[FeatureVector], labels: &[StateLabel], config: &TreeConfig) -> Result<Vec<TreeNode>> {
    if features.len() != labels.len() {
        return Err(Error::Shape {
            expected: labels.len(),
            got: features.len(),
        });
    }
    let states: BTreeSet<StateLabel> = labels.iter().copied().collect();
    if states.len() < 2 {
        return Err(Error::DegenerateNode(states.len()));
    }
    for state in &states {
        let count = labels.iter().filter(|l| *l == state).count();
        if count < 2 {
            return Err(Error::Data(format!("state {state} has {count} sample(s); need at least 2")));
        }
    }
    check_collisions(features, labels)?;

    // A canonical sample order makes every split decision independent of
    // the caller's ordering.
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.sort_by(|&a, &b| {
        labels[a].cmp(&labels[b]).then_with(|| {
            features[a]
                .channel_scores
                .iter()
                .flatten()
                .zip(features[b].channel_scores.iter().flatten())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let mut nodes = vec![TreeNode {
        node_id: 0,
        pattern_ids: states,
        split: None,
    }];
    let mut members: Vec<Vec<usize>> = vec![order];
    let mut id = 0;
    while id < nodes.len() {
        if nodes[id].pattern_ids.len() > 1 {
            let (split, positive, negative) = split_node(&nodes[id], &members[id], features, labels, config, nodes.len())?;
            let pos_ids = split.partition.clone();
            let neg_ids: BTreeSet<StateLabel> = nodes[id].pattern_ids.difference(&pos_ids).copied().collect();
            let [pos_id, neg_id] = split.children;
            nodes[id].split = Some(split);
            nodes.push(TreeNode {
                node_id: pos_id,
                pattern_ids: pos_ids,
                split: None,
            });
            nodes.push(TreeNode {
                node_id: neg_id,
                pattern_ids: neg_ids,
                split: None,
            });
            members.push(positive);
            members.push(negative);
        }
        id += 1;
    }
    Ok(nodes)
}

fn split_node(
    node: &TreeNode,
    members: &[usize],
    features: &[FeatureVector],
    labels: &[StateLabel],
    config: &TreeConfig,
    next_id: usize,
) -> Result<(NodeSplit, Vec<usize>, Vec<usize>)> {
    let partitions = enumerate_bipartitions(&node.pattern_ids)?;
    let node_labels: Vec<StateLabel> = members.iter().map(|&i| labels[i]).collect();

    let per_channel: Vec<Vec<f64>> = Channel::ALL
        .par_iter()
        .map(|&channel| {
            let points: Vec<Vec<f64>> = members.iter().map(|&i| features[i].channel(channel).to_vec()).collect();
            candidate_accuracies(&points, &node_labels, &partitions, config)
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, usize, f64)> = None;
    for (j, accs) in per_channel.iter().enumerate() {
        for (c, &acc) in accs.iter().enumerate() {
            if best.is_none_or(|(_, _, b)| acc > b) {
                best = Some((j, c, acc));
            }
        }
    }
    let (j, c, accuracy) = best.expect("at least one candidate");
    let channel = Channel::ALL[j];
    let partition = partitions[c].clone();
    if accuracy <= 0.5 {
        log::warn!(
            "node {}: best split ({channel}, {:?}) reaches only {accuracy:.3}",
            node.node_id,
            partition
        );
    }

    let points: Vec<Vec<f64>> = members.iter().map(|&i| features[i].channel(channel).to_vec()).collect();
    let y = split_targets(&node_labels, &partition);
    let svm = config
        .problem(&points)?
        .fit(&y, config.c, config.tolerance, config.max_iterations)?;

    let (positive, negative): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| partition.contains(&labels[i]));
    Ok((
        NodeSplit {
            channel,
            partition,
            svm,
            accuracy,
            children: [next_id, next_id + 1],
        },
        positive,
        negative,
    ))
}

fn check_collisions(features: &[FeatureVector], labels: &[StateLabel]) -> Result<()> {
    let mut order: Vec<usize> = (0..features.len()).collect();
    let key = |i: usize| features[i].channel_scores.iter().flatten().copied().collect::<Vec<f64>>();
    order.sort_by(|&a, &b| {
        key(a)
            .iter()
            .zip(key(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for pair in order.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if labels[a] != labels[b] && key(a) == key(b) {
            let (first, second) = (a.min(b), a.max(b));
            return Err(Error::Unsplittable {
                first,
                first_label: labels[first],
                second,
                second_label: labels[second],
            });
        }
    }
    Ok(())
}
