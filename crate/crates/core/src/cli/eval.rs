//! Identification-rate evaluation over a labeled dataset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bundle::{ModelBundle, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::probe::{fuse_probe_results, identify, IdentificationPolicyConfig};
use crate::profile::{LabeledSample, OffsetPattern, Phase, StateLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum EvalMode {
    /// Assembly tree only.
    AssemblyOnly,
    /// Always probe; fuse the two probe trees.
    ProbeOnly,
    /// Probe only when the assembly result is unsure.
    ProbeAfterAssembly,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateRow {
    pub label: Option<StateLabel>,
    pub total: usize,
    pub correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetRow {
    pub offset: OffsetPattern,
    pub label: StateLabel,
    pub total: usize,
    pub assembly_correct: usize,
    /// Present unless the mode is assembly-only.
    pub probing_correct: Option<usize>,
    pub probing_after_assembly_correct: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub mode: EvalMode,
    pub t_span: f64,
    pub seed: u64,
    pub config_hash: String,
    pub total: usize,
    pub correct: usize,
    pub success_rate: f64,
    pub probing_triggered: usize,
    /// Samples the assembly tree got wrong and the mode got right.
    pub improved: usize,
    /// Samples the assembly tree got right and the mode got wrong.
    pub deteriorated: usize,
    pub per_state: Vec<StateRow>,
    pub per_offset: Vec<OffsetRow>,
}

struct SampleResult {
    assembly: StateLabel,
    probe: Option<StateLabel>,
    combined: Option<StateLabel>,
    triggered: bool,
}

fn evaluate_sample(
    bundle: &ModelBundle,
    sample: &LabeledSample,
    index: usize,
    mode: EvalMode,
    policy: &IdentificationPolicyConfig,
) -> Result<SampleResult> {
    let assembly = sample
        .profile(Phase::Assembly)
        .ok_or_else(|| Error::Compatibility(format!("sample {index} lacks an assembly profile")))?;
    if assembly.duration() + 1e-9 < bundle.t_span {
        return Err(Error::Compatibility(format!(
            "sample {index} lasts {} s, shorter than the model horizon {} s",
            assembly.duration(),
            bundle.t_span
        )));
    }
    let assembly = assembly.truncate(bundle.t_span)?;
    let outcome = bundle.assembly.classify_profile(&assembly)?;
    if mode == EvalMode::AssemblyOnly {
        return Ok(SampleResult {
            assembly: outcome.predicted,
            probe: None,
            combined: None,
            triggered: false,
        });
    }
    let probe_profile = |phase: Phase| {
        sample.profile(phase).cloned().ok_or_else(|| {
            Error::Compatibility(format!("sample {index} lacks a {} profile", phase.name()))
        })
    };
    let plus = bundle.probe_plus_x.classify_profile(&probe_profile(Phase::ProbePlusX)?)?;
    let minus = bundle.probe_minus_x.classify_profile(&probe_profile(Phase::ProbeMinusX)?)?;
    let probe = fuse_probe_results(&plus, &minus).0;
    let combined = identify(&assembly, bundle.trees(), probe_profile, policy)?;
    Ok(SampleResult {
        assembly: outcome.predicted,
        probe: Some(probe),
        combined: Some(combined.predicted),
        triggered: combined.used_probing,
    })
}

/// Runs `mode` over `samples` and tabulates the results.
pub fn evaluate(
    bundle: &ModelBundle,
    samples: &[LabeledSample],
    mode: EvalMode,
    policy: &IdentificationPolicyConfig,
    seed: u64,
    config_hash: String,
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::Data("evaluation dataset is empty".into()));
    }
    let results = samples
        .iter()
        .enumerate()
        .map(|(i, s)| evaluate_sample(bundle, s, i, mode, policy))
        .collect::<Result<Vec<_>>>()?;

    let chosen = |r: &SampleResult| match mode {
        EvalMode::AssemblyOnly => r.assembly,
        EvalMode::ProbeOnly => r.probe.expect("probe result"),
        EvalMode::ProbeAfterAssembly => r.combined.expect("combined result"),
    };
    let mut per_state: BTreeMap<StateLabel, StateRow> = BTreeMap::new();
    let mut per_offset: Vec<OffsetRow> = Vec::new();
    let (mut correct, mut improved, mut deteriorated, mut triggered) = (0, 0, 0, 0);
    for (s, r) in samples.iter().zip(&results) {
        let ok = chosen(r) == s.label;
        let assembly_ok = r.assembly == s.label;
        correct += usize::from(ok);
        improved += usize::from(ok && !assembly_ok);
        deteriorated += usize::from(!ok && assembly_ok);
        triggered += usize::from(r.triggered);

        let row = per_state.entry(s.label).or_insert_with(|| StateRow {
            label: Some(s.label),
            ..StateRow::default()
        });
        row.total += 1;
        row.correct += usize::from(ok);

        let idx = match per_offset.iter().position(|o| o.offset == s.offset) {
            Some(i) => i,
            None => {
                per_offset.push(OffsetRow {
                    offset: s.offset,
                    label: s.label,
                    total: 0,
                    assembly_correct: 0,
                    probing_correct: r.probe.map(|_| 0),
                    probing_after_assembly_correct: r.combined.map(|_| 0),
                });
                per_offset.len() - 1
            }
        };
        let o = &mut per_offset[idx];
        o.total += 1;
        o.assembly_correct += usize::from(assembly_ok);
        if let (Some(c), Some(p)) = (o.probing_correct.as_mut(), r.probe) {
            *c += usize::from(p == s.label);
        }
        if let (Some(c), Some(p)) = (o.probing_after_assembly_correct.as_mut(), r.combined) {
            *c += usize::from(p == s.label);
        }
    }
    Ok(EvalReport {
        format_version: FORMAT_VERSION,
        mode,
        t_span: bundle.t_span,
        seed,
        config_hash,
        total: samples.len(),
        correct,
        success_rate: correct as f64 / samples.len() as f64,
        probing_triggered: triggered,
        improved,
        deteriorated,
        per_state: per_state.into_values().collect(),
        per_offset,
    })
}

fn pct(num: usize, den: usize) -> String {
    format!("{:.1}", 100.0 * num as f64 / den.max(1) as f64)
}

/// Plain-text rendering of a report.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = format!(
        "mode {:?}, t_span {} s: {}/{} correct ({}%), probing triggered {}, improved {}, deteriorated {}\n",
        report.mode,
        report.t_span,
        report.correct,
        report.total,
        pct(report.correct, report.total),
        report.probing_triggered,
        report.improved,
        report.deteriorated
    );
    out.push_str("state   n  rate(%)\n");
    for row in &report.per_state {
        let label = row.label.map_or_else(|| "-".to_string(), |l| l.to_string());
        out.push_str(&format!("{label:<5} {:>3}  {:>6}\n", row.total, pct(row.correct, row.total)));
    }
    out.push_str("state     dx   dtheta   n  assembly  probing  after-assembly\n");
    for row in &report.per_offset {
        let opt = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |c| pct(c, row.total));
        out.push_str(&format!(
            "{:<5} {:>6} {:>8} {:>3}  {:>8}  {:>7}  {:>14}\n",
            row.label.to_string(),
            row.offset.dx,
            row.offset.dtheta_z,
            row.total,
            pct(row.assembly_correct, row.total),
            opt(row.probing_correct),
            opt(row.probing_after_assembly_correct)
        ));
    }
    out
}
