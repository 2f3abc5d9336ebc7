use std::cell::RefCell;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snapid::fpca::fit_fpca;
use snapid::probe::{fuse_probe_results, identify, recovery_action, IdentificationPolicyConfig, Source, TreeSet};
use snapid::profile::{Channel, ForceTorqueProfile, Phase, StateLabel};
use snapid::svm::{KernelSpec, PlattParams, Standardizer, SvmModel};
use snapid::tree::{ClassificationOutcome, DecisionTree, NodeSplit, TreeNode};
use snapid::Error;

const LEN: usize = 5;

/// SVM with `f ≡ bias` and `P(+) = p_positive` everywhere.
fn constant_svm(bias: f64, p_positive: f64) -> SvmModel {
    SvmModel {
        kernel: KernelSpec::Linear,
        standardizer: Standardizer::identity(2),
        support_vectors: vec![],
        dual_coefs: vec![],
        bias,
        platt: Some(PlattParams {
            a: -1.0,
            b: (1.0 / p_positive - 1.0).ln() + bias,
        }),
        regularization_c: 1.0,
    }
}

/// Depth-one tree sending everything to `pos` (bias > 0) with the given
/// probability and node accuracy.
fn stump(phase: Phase, pos: StateLabel, neg: StateLabel, p_positive: f64, accuracy: f64) -> DecisionTree {
    let curves: Vec<Vec<f64>> = (0..3).map(|i| (0..LEN).map(|k| if k == i { 1.0 } else { 0.0 }).collect()).collect();
    let model = fit_fpca(&curves, 0.01, 2).unwrap();
    let both: BTreeSet<StateLabel> = [pos, neg].into();
    DecisionTree {
        phase,
        t_span: 0.04,
        fpca_models: std::array::from_fn(|_| model.clone()),
        nodes: vec![
            TreeNode {
                node_id: 0,
                pattern_ids: both,
                split: Some(NodeSplit {
                    channel: Channel::Tx,
                    partition: [pos].into(),
                    svm: constant_svm(1.0, p_positive),
                    accuracy,
                    children: [1, 2],
                }),
            },
            TreeNode {
                node_id: 1,
                pattern_ids: [pos].into(),
                split: None,
            },
            TreeNode {
                node_id: 2,
                pattern_ids: [neg].into(),
                split: None,
            },
        ],
    }
}

fn flat(phase: Phase) -> ForceTorqueProfile {
    ForceTorqueProfile::new(0.01, std::array::from_fn(|_| vec![0.0; LEN]), phase).unwrap()
}

#[test]
fn confident_assembly_never_probes() {
    let asm = stump(Phase::Assembly, StateLabel::S2, StateLabel::S1, 0.9, 0.9);
    let plus = stump(Phase::ProbePlusX, StateLabel::S3, StateLabel::S1, 0.9, 0.9);
    let minus = stump(Phase::ProbeMinusX, StateLabel::S4, StateLabel::S1, 0.9, 0.9);
    let trees = TreeSet {
        assembly: &asm,
        probe_plus_x: &plus,
        probe_minus_x: &minus,
    };
    let calls = RefCell::new(Vec::new());
    let r = identify(
        &flat(Phase::Assembly),
        trees,
        |ph| {
            calls.borrow_mut().push(ph);
            Ok(flat(ph))
        },
        &IdentificationPolicyConfig::default(),
    )
    .unwrap();
    assert!(calls.borrow().is_empty());
    assert_eq!(r.predicted, StateLabel::S2);
    assert!(!r.used_probing);
    assert_eq!(r.chosen_source, Source::Assembly);
    assert!(r.probe_outcomes.is_none());
}

#[test]
fn unsure_assembly_probes_both_directions_once() {
    // routed positive with P(+) = 0.1 < 0.2
    let asm = stump(Phase::Assembly, StateLabel::S2, StateLabel::S1, 0.1, 0.95);
    let plus = stump(Phase::ProbePlusX, StateLabel::S3, StateLabel::S1, 0.9, 0.85);
    let minus = stump(Phase::ProbeMinusX, StateLabel::S4, StateLabel::S1, 0.9, 0.92);
    let trees = TreeSet {
        assembly: &asm,
        probe_plus_x: &plus,
        probe_minus_x: &minus,
    };
    let calls = RefCell::new(Vec::new());
    let r = identify(
        &flat(Phase::Assembly),
        trees,
        |ph| {
            calls.borrow_mut().push(ph);
            Ok(flat(ph))
        },
        &IdentificationPolicyConfig::default(),
    )
    .unwrap();
    assert_eq!(*calls.borrow(), vec![Phase::ProbePlusX, Phase::ProbeMinusX]);
    assert!(r.used_probing);
    // −x has the stronger weakest node
    assert_eq!(r.predicted, StateLabel::S4);
    assert_eq!(r.chosen_source, Source::ProbeMinusX);
    assert!((r.assembly_outcome.min_class_probability - 0.1).abs() < 1e-12);

    // the comparison is strict: just above the threshold stays with assembly
    for (p, probes) in [(0.2 + 1e-9, false), (0.2 - 1e-9, true)] {
        let edge = stump(Phase::Assembly, StateLabel::S2, StateLabel::S1, p, 0.95);
        let r = identify(
            &flat(Phase::Assembly),
            TreeSet { assembly: &edge, ..trees },
            |ph| Ok(flat(ph)),
            &IdentificationPolicyConfig::default(),
        )
        .unwrap();
        assert_eq!(r.used_probing, probes);
    }
}

#[test]
fn missing_probe_is_reported() {
    let asm = stump(Phase::Assembly, StateLabel::S2, StateLabel::S1, 0.05, 0.95);
    let plus = stump(Phase::ProbePlusX, StateLabel::S3, StateLabel::S1, 0.9, 0.85);
    let trees = TreeSet {
        assembly: &asm,
        probe_plus_x: &plus,
        probe_minus_x: &plus,
    };
    let r = identify(
        &flat(Phase::Assembly),
        trees,
        |_| Err(Error::Data("sensor offline".into())),
        &IdentificationPolicyConfig::default(),
    );
    assert!(matches!(r, Err(Error::ProbeUnavailable(_))));
}

fn outcome(predicted: StateLabel, acc: f64) -> ClassificationOutcome {
    ClassificationOutcome {
        predicted,
        node_path: vec![],
        min_class_probability: 0.5,
        min_node_accuracy: acc,
    }
}

#[test]
fn fusion_matches_oracle_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let pl = StateLabel::ALL[rng.random_range(0..9)];
        let ml = StateLabel::ALL[rng.random_range(0..9)];
        // coarse values make ties common
        let pa = rng.random_range(0..5) as f64 * 0.05 + 0.8;
        let ma = rng.random_range(0..5) as f64 * 0.05 + 0.8;
        let expected = if pa >= ma { (pl, Source::ProbePlusX) } else { (ml, Source::ProbeMinusX) };
        assert_eq!(fuse_probe_results(&outcome(pl, pa), &outcome(ml, ma)), expected);
    }
}

#[test]
fn recovery_moves_against_the_error() {
    let c = IdentificationPolicyConfig::default();
    for s in StateLabel::ALL {
        let a = recovery_action(s, &c);
        assert_eq!(a.delta_x, -f64::from(s.x_sign()));
        assert_eq!(a.delta_theta, -f64::from(s.theta_sign()));
        assert_eq!(a.retract_first, !s.is_success());
    }
    let a = recovery_action(StateLabel::S7, &c);
    assert_eq!((a.delta_x, a.delta_theta), (-1.0, 1.0));
    let half = IdentificationPolicyConfig {
        recovery_step_x: 0.5,
        ..c
    };
    assert_eq!(recovery_action(StateLabel::S3, &half).delta_x, 0.5);
}
