//! CSV profiles and the labeled-sample manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Channel, ForceTorqueProfile, LabeledSample, OffsetPattern, Phase, StateLabel};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 7] = ["t", "fx", "fy", "fz", "tx", "ty", "tz"];

/// Writes `t,fx,fy,fz,tx,ty,tz` rows. Values use the shortest decimal form
/// that round-trips, so identical profiles give identical bytes.
pub fn write_profile_csv(path: &Path, profile: &ForceTorqueProfile) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    writer
        .write_record(CSV_HEADER)
        .map_err(|e| Error::csv(path, e))?;
    let mut row: Vec<String> = Vec::with_capacity(7);
    for k in 0..profile.len() {
        row.clear();
        row.push(format!("{}", profile.time(k)));
        for c in Channel::ALL {
            row.push(format!("{}", profile.channel(c)[k]));
        }
        writer.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))
}

pub fn read_profile_csv(path: &Path, phase: Phase) -> Result<ForceTorqueProfile> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = reader.headers().map_err(|e| Error::csv(path, e))?;
    if header.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(Error::Data(format!(
            "{}: expected header {}, got {}",
            path.display(),
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut channels: [Vec<f64>; 6] = Default::default();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        if record.len() != 7 {
            return Err(Error::Data(format!(
                "{}: row {} has {} fields",
                path.display(),
                line + 2,
                record.len()
            )));
        }
        let mut values = [0.0; 7];
        for (slot, field) in values.iter_mut().zip(record.iter()) {
            *slot = field.trim().parse::<f64>().map_err(|_| {
                Error::Data(format!(
                    "{}: row {}: cannot parse {field:?}",
                    path.display(),
                    line + 2
                ))
            })?;
        }
        times.push(values[0]);
        for (c, v) in channels.iter_mut().zip(&values[1..]) {
            c.push(*v);
        }
    }
    if times.len() < 2 {
        return Err(Error::InvalidGrid(format!(
            "{}: profile needs at least 2 rows",
            path.display()
        )));
    }
    let n = times.len();
    let sample_period = (times[n - 1] - times[0]) / (n - 1) as f64;
    for k in 1..n {
        let step = times[k] - times[k - 1];
        if (step - sample_period).abs() > 1e-6 * sample_period.abs().max(1e-12) {
            return Err(Error::InvalidGrid(format!(
                "{}: non-uniform time grid at row {}",
                path.display(),
                k + 2
            )));
        }
    }
    ForceTorqueProfile::new(sample_period, channels, phase)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub assembly: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_plus_x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_minus_x: Option<String>,
}

impl ManifestFiles {
    pub fn get(&self, phase: Phase) -> Option<&str> {
        match phase {
            Phase::Assembly => Some(&self.assembly),
            Phase::ProbePlusX => self.probe_plus_x.as_deref(),
            Phase::ProbeMinusX => self.probe_minus_x.as_deref(),
        }
    }
}

/// One entry of `manifest.json`; file names are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub offset: OffsetPattern,
    pub label: StateLabel,
    pub files: ManifestFiles,
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(entries).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Loads `dir/manifest.json` and every profile it lists.
pub fn load_dataset(dir: &Path) -> Result<Vec<LabeledSample>> {
    let entries = read_manifest(&dir.join("manifest.json"))?;
    entries
        .into_iter()
        .map(|entry| {
            let mut profiles = BTreeMap::new();
            for phase in Phase::ALL {
                if let Some(name) = entry.files.get(phase) {
                    profiles.insert(phase, read_profile_csv(&dir.join(name), phase)?);
                }
            }
            Ok(LabeledSample::new(profiles, entry.offset, entry.label))
        })
        .collect()
}
