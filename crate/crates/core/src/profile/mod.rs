//! Force/torque recordings, offset patterns and the nine assembly states.

mod io;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    load_dataset, read_manifest, read_profile_csv, write_manifest, write_profile_csv,
    ManifestEntry, ManifestFiles, CSV_HEADER,
};

/// Slack used when comparing sample timestamps against a horizon, in units
/// of the sample period.
const GRID_EPS: f64 = 1e-9;

/// The six wrench components, in sensor order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Fx,
    Fy,
    Fz,
    Tx,
    Ty,
    Tz,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Fx,
        Channel::Fy,
        Channel::Fz,
        Channel::Tx,
        Channel::Ty,
        Channel::Tz,
    ];

    /// Zero-based position in [`Channel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Channel> {
        Channel::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Fx => "fx",
            Channel::Fy => "fy",
            Channel::Fz => "fz",
            Channel::Tx => "tx",
            Channel::Ty => "ty",
            Channel::Tz => "tz",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which motion a profile was recorded during.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Assembly,
    ProbePlusX,
    ProbeMinusX,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Assembly, Phase::ProbePlusX, Phase::ProbeMinusX];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Assembly => "assembly",
            Phase::ProbePlusX => "probe_plus_x",
            Phase::ProbeMinusX => "probe_minus_x",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Six synchronized channels sampled on a uniform grid starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceTorqueProfile {
    sample_period: f64,
    channels: [Vec<f64>; 6],
    phase: Phase,
}

impl ForceTorqueProfile {
    pub fn new(sample_period: f64, channels: [Vec<f64>; 6], phase: Phase) -> Result<Self> {
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        let len = channels[0].len();
        if len < 2 {
            return Err(Error::InvalidGrid(format!(
                "profile needs at least 2 samples, got {len}"
            )));
        }
        for (c, values) in channels.iter().enumerate() {
            if values.len() != len {
                return Err(Error::Shape {
                    expected: len,
                    got: values.len(),
                });
            }
            if let Some(k) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "non-finite sample at index {k} of channel {}",
                    Channel::ALL[c]
                )));
            }
        }
        Ok(Self {
            sample_period,
            channels,
            phase,
        })
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Number of samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of the last sample.
    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.sample_period
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.sample_period
    }

    pub fn channel(&self, channel: Channel) -> &[f64] {
        &self.channels[channel.index()]
    }

    pub fn channels(&self) -> &[Vec<f64>; 6] {
        &self.channels
    }

    /// Prefix of all samples with timestamp ≤ `t_span`.
    pub fn truncate(&self, t_span: f64) -> Result<ForceTorqueProfile> {
        let duration = self.duration();
        if t_span.is_nan() || t_span <= 0.0 || t_span > duration + GRID_EPS * self.sample_period {
            return Err(Error::HorizonOutOfRange { t_span, duration });
        }
        let keep = (t_span / self.sample_period + GRID_EPS).floor() as usize + 1;
        let keep = keep.min(self.len());
        if keep < 2 {
            return Err(Error::HorizonOutOfRange { t_span, duration });
        }
        let channels = self.channels.clone().map(|mut c| {
            c.truncate(keep);
            c
        });
        Ok(ForceTorqueProfile {
            sample_period: self.sample_period,
            channels,
            phase: self.phase,
        })
    }

    /// Linear interpolation onto `target_len` evenly spaced points over the
    /// same duration. Both endpoints are reproduced exactly.
    pub fn resample_to_grid(&self, target_len: usize) -> Result<ForceTorqueProfile> {
        if target_len < 2 {
            return Err(Error::InvalidGrid(format!(
                "target grid needs at least 2 points, got {target_len}"
            )));
        }
        let src_last = (self.len() - 1) as f64;
        let dst_last = (target_len - 1) as f64;
        let channels = self.channels.each_ref().map(|values| {
            (0..target_len)
                .map(|k| {
                    if k == target_len - 1 {
                        return values[values.len() - 1];
                    }
                    let pos = k as f64 * src_last / dst_last;
                    let i = pos.floor() as usize;
                    let frac = pos - i as f64;
                    if frac == 0.0 || i + 1 >= values.len() {
                        values[i.min(values.len() - 1)]
                    } else {
                        values[i] + frac * (values[i + 1] - values[i])
                    }
                })
                .collect()
        });
        ForceTorqueProfile::new(self.duration() / dst_last, channels, self.phase)
    }
}

/// Initial placement error of the held part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetPattern {
    /// Translation along x, millimeters.
    pub dx: f64,
    /// Rotation, degrees.
    pub dtheta_z: f64,
}

impl OffsetPattern {
    pub const fn new(dx: f64, dtheta_z: f64) -> Self {
        Self { dx, dtheta_z }
    }

    /// Reflection through the y-z plane: dx changes sign, rotation is kept.
    pub fn mirror_x(self) -> Self {
        Self {
            dx: -self.dx,
            dtheta_z: self.dtheta_z,
        }
    }
}

/// Assembly success (S1) or one of the eight directional error states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    /// Within tolerance; the snap completes.
    S1,
    /// dx too large, positive.
    S2,
    /// dx too large, negative.
    S3,
    /// Rotation too large, positive.
    S4,
    /// Rotation too large, negative.
    S5,
    /// Both violated: dx > 0, rotation > 0.
    S6,
    /// Both violated: dx > 0, rotation < 0.
    S7,
    /// Both violated: dx < 0, rotation > 0.
    S8,
    /// Both violated: dx < 0, rotation < 0.
    S9,
}

impl StateLabel {
    pub const ALL: [StateLabel; 9] = [
        StateLabel::S1,
        StateLabel::S2,
        StateLabel::S3,
        StateLabel::S4,
        StateLabel::S5,
        StateLabel::S6,
        StateLabel::S7,
        StateLabel::S8,
        StateLabel::S9,
    ];

    /// 1-based state number.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn is_success(self) -> bool {
        self == StateLabel::S1
    }

    /// Sign of the x error encoded by the state (0 when x is in tolerance).
    pub fn x_sign(self) -> i8 {
        match self {
            StateLabel::S2 | StateLabel::S6 | StateLabel::S7 => 1,
            StateLabel::S3 | StateLabel::S8 | StateLabel::S9 => -1,
            _ => 0,
        }
    }

    /// Sign of the rotation error encoded by the state.
    pub fn theta_sign(self) -> i8 {
        match self {
            StateLabel::S4 | StateLabel::S6 | StateLabel::S8 => 1,
            StateLabel::S5 | StateLabel::S7 | StateLabel::S9 => -1,
            _ => 0,
        }
    }

    pub fn from_signs(x_sign: i8, theta_sign: i8) -> StateLabel {
        match (x_sign.signum(), theta_sign.signum()) {
            (0, 0) => StateLabel::S1,
            (1, 0) => StateLabel::S2,
            (-1, 0) => StateLabel::S3,
            (0, 1) => StateLabel::S4,
            (0, -1) => StateLabel::S5,
            (1, 1) => StateLabel::S6,
            (1, -1) => StateLabel::S7,
            (-1, 1) => StateLabel::S8,
            _ => StateLabel::S9,
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.number())
    }
}

/// Ground-truth state of an offset. Offsets on a tolerance boundary count
/// as success; outside it, strict signs decide the direction.
pub fn label_from_offset(offset: OffsetPattern, tol_x: f64, tol_theta: f64) -> Result<StateLabel> {
    if !(tol_x > 0.0 && tol_theta > 0.0) {
        return Err(Error::InvalidTolerance { tol_x, tol_theta });
    }
    if !(offset.dx.is_finite() && offset.dtheta_z.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite offset ({}, {})",
            offset.dx, offset.dtheta_z
        )));
    }
    let x_sign = if offset.dx.abs() > tol_x {
        offset.dx.signum() as i8
    } else {
        0
    };
    let theta_sign = if offset.dtheta_z.abs() > tol_theta {
        offset.dtheta_z.signum() as i8
    } else {
        0
    };
    Ok(StateLabel::from_signs(x_sign, theta_sign))
}

/// One recorded trial: the profiles of every phase that was executed.
#[derive(Debug, Clone)]
pub struct LabeledSample {
    pub profiles: BTreeMap<Phase, ForceTorqueProfile>,
    pub offset: OffsetPattern,
    pub label: StateLabel,
    pub assembly_succeeded: bool,
}

impl LabeledSample {
    pub fn new(
        profiles: BTreeMap<Phase, ForceTorqueProfile>,
        offset: OffsetPattern,
        label: StateLabel,
    ) -> Self {
        Self {
            profiles,
            offset,
            label,
            assembly_succeeded: label.is_success(),
        }
    }

    pub fn profile(&self, phase: Phase) -> Option<&ForceTorqueProfile> {
        self.profiles.get(&phase)
    }
}
