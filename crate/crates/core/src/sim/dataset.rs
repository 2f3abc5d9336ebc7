//! Training grid, validation set, and their on-disk form.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mix_seed, simulate_assembly, simulate_probe, PlantConfig, ProbeDirection};
use crate::error::{Error, Result};
use crate::profile::{
    label_from_offset, write_manifest, write_profile_csv, LabeledSample, ManifestEntry, ManifestFiles, OffsetPattern, Phase,
};

const TRAIN_TAG: u64 = 0x0074_7261_696e;
const VALIDATION_TAG: u64 = 0x0076_616c_6964;

/// Trials per validation offset.
pub const VALIDATION_TRIALS: usize = 5;

/// Validation offsets: nine inside tolerance, eight outside.
const VALIDATION_OFFSETS: [(f64, f64); 17] = [
    (-0.25, -0.25),
    (-0.5, 0.5),
    (-0.5, 0.0),
    (0.25, -0.25),
    (0.5, 0.5),
    (0.5, 0.0),
    (0.0, -0.5),
    (0.0, 0.5),
    (0.0, 0.0),
    (2.0, 0.0),
    (-2.0, 0.0),
    (0.0, 2.0),
    (0.0, -2.0),
    (1.5, 1.5),
    (1.5, -1.5),
    (-1.5, 1.5),
    (-1.5, -1.5),
];

/// Training offsets: a square `steps × steps` lattice over
/// `[-extent, extent]²` plus explicit extra points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub extent: f64,
    pub steps: usize,
    pub extra: Vec<OffsetPattern>,
}

impl Default for GridSpec {
    /// 11 × 11 lattice at 0.4 spacing plus 10 points inside tolerance, 131
    /// offsets in all.
    fn default() -> Self {
        let extra = [
            (0.2, 0.2),
            (-0.2, 0.2),
            (0.2, -0.2),
            (-0.2, -0.2),
            (0.6, 0.6),
            (-0.6, 0.6),
            (0.6, -0.6),
            (-0.6, -0.6),
            (0.2, -0.6),
            (-0.2, 0.6),
        ]
        .map(|(dx, dt)| OffsetPattern::new(dx, dt))
        .to_vec();
        Self {
            extent: 2.0,
            steps: 11,
            extra,
        }
    }
}

pub fn training_offsets(grid: &GridSpec) -> Result<Vec<OffsetPattern>> {
    if grid.steps < 2 || !(grid.extent.is_finite() && grid.extent > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "need steps >= 2 and a positive extent, got {} and {}",
            grid.steps, grid.extent
        )));
    }
    let spacing = 2.0 * grid.extent / (grid.steps - 1) as f64;
    let coord = |i: usize| -grid.extent + spacing * i as f64;
    let mut out = Vec::with_capacity(grid.steps * grid.steps + grid.extra.len());
    for i in 0..grid.steps {
        for j in 0..grid.steps {
            out.push(OffsetPattern::new(coord(i), coord(j)));
        }
    }
    out.extend(grid.extra.iter().copied());
    Ok(out)
}

/// `(offset, trial)` pairs of the validation set in a fixed order.
pub fn validation_offsets() -> Vec<(OffsetPattern, usize)> {
    VALIDATION_OFFSETS
        .iter()
        .flat_map(|&(dx, dt)| (0..VALIDATION_TRIALS).map(move |k| (OffsetPattern::new(dx, dt), k)))
        .collect()
}

/// One trial with all three phases recorded.
pub fn simulate_sample(offset: OffsetPattern, config: &PlantConfig, seed: u64) -> Result<LabeledSample> {
    let label = label_from_offset(offset, config.tol_x, config.tol_theta)?;
    let (assembly, success) = simulate_assembly(offset, config, seed)?;
    let mut profiles = BTreeMap::new();
    profiles.insert(Phase::Assembly, assembly);
    for dir in [ProbeDirection::PlusX, ProbeDirection::MinusX] {
        profiles.insert(dir.phase(), simulate_probe(offset, dir, config, seed)?);
    }
    let mut sample = LabeledSample::new(profiles, offset, label);
    sample.assembly_succeeded = success;
    Ok(sample)
}

#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledSample>,
    pub validation: Vec<LabeledSample>,
}

pub fn generate_dataset(config: &PlantConfig, grid: &GridSpec, seed: u64) -> Result<DatasetSplit> {
    config.validate()?;
    let train_seed = mix_seed(seed, TRAIN_TAG);
    let validation_seed = mix_seed(seed, VALIDATION_TAG);
    let train = training_offsets(grid)?
        .par_iter()
        .enumerate()
        .map(|(i, &o)| simulate_sample(o, config, mix_seed(train_seed, i as u64)))
        .collect::<Result<_>>()?;
    let validation = validation_offsets()
        .par_iter()
        .enumerate()
        .map(|(i, &(o, _))| simulate_sample(o, config, mix_seed(validation_seed, i as u64)))
        .collect::<Result<_>>()?;
    Ok(DatasetSplit { train, validation })
}

/// Writes `dir/train` and `dir/validation`, each with a manifest and one
/// CSV per (sample, phase).
pub fn write_dataset(dir: &Path, split: &DatasetSplit) -> Result<()> {
    for (name, samples) in [("train", &split.train), ("validation", &split.validation)] {
        let sub = dir.join(name);
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        let mut entries = Vec::with_capacity(samples.len());
        for (i, sample) in samples.iter().enumerate() {
            let mut names = BTreeMap::new();
            for (phase, profile) in &sample.profiles {
                let file = format!("{i:03}_{}.csv", phase.name());
                write_profile_csv(&sub.join(&file), profile)?;
                names.insert(*phase, file);
            }
            let assembly = names
                .remove(&Phase::Assembly)
                .ok_or_else(|| Error::Data(format!("sample {i} has no assembly profile")))?;
            entries.push(ManifestEntry {
                offset: sample.offset,
                label: sample.label,
                files: ManifestFiles {
                    assembly,
                    probe_plus_x: names.remove(&Phase::ProbePlusX),
                    probe_minus_x: names.remove(&Phase::ProbeMinusX),
                },
            });
        }
        write_manifest(&sub.join("manifest.json"), &entries)?;
    }
    Ok(())
}
