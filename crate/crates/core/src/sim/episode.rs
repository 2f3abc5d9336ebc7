//! Closed-loop identify / recover / retry episodes.

use serde::{Deserialize, Serialize};

use super::{apply_recovery, mix_seed, simulate_assembly, simulate_probe, PlantConfig, ProbeDirection};
use crate::error::{Error, Result};
use crate::probe::{identify, recovery_action, IdentificationPolicyConfig, IdentificationResult, RecoveryAction, TreeSet};
use crate::profile::OffsetPattern;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStep {
    /// Offset at the start of this attempt.
    pub offset: OffsetPattern,
    pub identification: IdentificationResult,
    pub action: RecoveryAction,
    /// Whether the insertion was completed successfully in this attempt.
    pub succeeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub true_offset: OffsetPattern,
    pub seed: u64,
    pub steps: Vec<EpisodeStep>,
    pub final_success: bool,
    pub retries_used: usize,
}

/// Attempts the insertion, recovering after every identified error, until
/// the policy predicts success or `max_retries` recoveries have been spent.
pub fn run_episode(
    true_offset: OffsetPattern,
    trees: TreeSet<'_>,
    policy: &IdentificationPolicyConfig,
    plant: &PlantConfig,
    seed: u64,
) -> Result<EpisodeLog> {
    policy.validate()?;
    plant.validate()?;
    let mut offset = true_offset;
    let mut steps = Vec::new();
    for attempt in 0..=policy.max_retries {
        let attempt_seed = mix_seed(seed, attempt as u64);
        let (profile, _) = simulate_assembly(offset, plant, attempt_seed)?;
        let truncated = profile.truncate(policy.t_span)?;
        let identification = identify(
            &truncated,
            trees,
            |phase| {
                let dir = ProbeDirection::from_phase(phase)
                    .ok_or_else(|| Error::ProbeUnavailable(format!("{} is not a probe phase", phase.name())))?;
                simulate_probe(offset, dir, plant, attempt_seed)
            },
            policy,
        )?;
        let action = recovery_action(identification.predicted, policy);
        let finished = identification.predicted.is_success();
        let succeeded = finished && plant.is_success(offset);
        steps.push(EpisodeStep {
            offset,
            identification,
            action,
            succeeded,
        });
        if finished {
            break;
        }
        offset = apply_recovery(offset, &action);
    }
    let final_success = steps.last().is_some_and(|s| s.succeeded);
    Ok(EpisodeLog {
        true_offset,
        seed,
        retries_used: steps.len() - 1,
        steps,
        final_success,
    })
}
