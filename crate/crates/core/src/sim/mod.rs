//! Closed-form synthetic snap-assembly plant.
//!
//! Assembly: the part is pushed 6 mm down over `insertion_duration`. Fz is a
//! stiffness ramp; a successful insertion snaps through around `snap_time`
//! and Fz drops, a failed one keeps rising. Lateral contact builds only late
//! in the stroke (`lateral_ramp`), so x and rotation errors show up in
//! Fx/Ty and Tx shortly before the snap.
//!
//! Probing: the part is lifted and dragged `probe_distance` along ±x. The
//! drag closes a clearance gap, after which Fx, Ty and Fz see a saturating
//! contact force whose onset depends on dx; Tx sees the rotation error with
//! a larger gain than during assembly.
//!
//! Noise is white Gaussian per channel, drawn from a ChaCha stream keyed by
//! (seed, phase, channel), so profiles are bit-reproducible.

mod dataset;
mod episode;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::RecoveryAction;
use crate::profile::{label_from_offset, Channel, ForceTorqueProfile, OffsetPattern, Phase};

pub use dataset::{
    generate_dataset, simulate_sample, training_offsets, validation_offsets, write_dataset, DatasetSplit, GridSpec,
    VALIDATION_TRIALS,
};
pub use episode::{run_episode, EpisodeLog, EpisodeStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeDirection {
    PlusX,
    MinusX,
}

impl ProbeDirection {
    pub fn sign(self) -> f64 {
        match self {
            ProbeDirection::PlusX => 1.0,
            ProbeDirection::MinusX => -1.0,
        }
    }

    pub fn phase(self) -> Phase {
        match self {
            ProbeDirection::PlusX => Phase::ProbePlusX,
            ProbeDirection::MinusX => Phase::ProbeMinusX,
        }
    }

    pub fn from_phase(phase: Phase) -> Option<Self> {
        match phase {
            Phase::Assembly => None,
            Phase::ProbePlusX => Some(ProbeDirection::PlusX),
            Phase::ProbeMinusX => Some(ProbeDirection::MinusX),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// mm
    pub tol_x: f64,
    /// deg
    pub tol_theta: f64,
    /// mm
    pub insertion_depth: f64,
    /// s
    pub insertion_duration: f64,
    /// s
    pub snap_time: f64,
    /// s, standard deviation of the snap-through transition
    pub snap_width: f64,
    /// Hz
    pub sample_rate: f64,
    /// N/mm
    pub contact_stiffness_z: f64,
    /// N/mm
    pub lateral_gain: f64,
    /// N·m/deg
    pub torque_gain_x: f64,
    /// N·m/mm
    pub torque_gain_y: f64,
    /// N
    pub snap_drop: f64,
    /// s, time lateral contact starts building
    pub lateral_onset: f64,
    /// s, time from onset to full lateral contact
    pub lateral_rise: f64,
    /// Assembly noise standard deviation per channel (fx, fy, fz, tx, ty, tz).
    pub noise_sigma: [f64; 6],
    pub rng_seed: u64,
    /// mm
    pub probe_distance: f64,
    /// s
    pub probe_duration: f64,
    /// s, time to complete the probe stroke
    pub probe_stroke_time: f64,
    /// mm, free play before the probe meets the wall
    pub probe_clearance: f64,
    /// N/mm
    pub probe_stiffness: f64,
    /// N, contact force at which the wall contact saturates
    pub probe_saturation: f64,
    /// N·m/deg, rotation sensitivity while dragging
    pub probe_torque_gain_x: f64,
    /// m, lever arm from contact to sensor
    pub probe_arm: f64,
    /// N, residual downward force after the lift
    pub probe_preload: f64,
    /// Probe noise standard deviation per channel.
    pub probe_noise_sigma: [f64; 6],
    /// mm, largest |dx| the plant accepts
    pub max_abs_dx: f64,
    /// deg, largest |dθz| the plant accepts
    pub max_abs_dtheta: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            tol_x: 1.0,
            tol_theta: 1.0,
            insertion_depth: 6.0,
            insertion_duration: 3.0,
            snap_time: 2.1,
            snap_width: 0.1,
            sample_rate: 100.0,
            contact_stiffness_z: 10.0,
            lateral_gain: 5.0,
            torque_gain_x: 0.5,
            torque_gain_y: 0.5,
            snap_drop: 30.0,
            lateral_onset: 1.78,
            lateral_rise: 0.3,
            // 2% of each channel's clean peak over the ±2 grid
            noise_sigma: [0.24, 0.02, 1.2, 0.02, 0.02, 0.002],
            rng_seed: 0,
            probe_distance: 2.0,
            probe_duration: 1.5,
            probe_stroke_time: 1.0,
            probe_clearance: 1.0,
            probe_stiffness: 10.0,
            probe_saturation: 4.0,
            probe_torque_gain_x: 1.0,
            probe_arm: 0.05,
            probe_preload: 5.0,
            probe_noise_sigma: [0.08, 0.02, 0.11, 0.04, 0.004, 0.004],
            max_abs_dx: 3.0,
            max_abs_dtheta: 3.0,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.tol_x > 0.0 && self.tol_theta > 0.0) {
            return Err(Error::InvalidTolerance {
                tol_x: self.tol_x,
                tol_theta: self.tol_theta,
            });
        }
        if !(self.snap_time > 0.0 && self.snap_time < self.insertion_duration) {
            return bad(format!(
                "snap_time {} must lie in (0, insertion_duration = {})",
                self.snap_time, self.insertion_duration
            ));
        }
        for (name, v) in [
            ("insertion_depth", self.insertion_depth),
            ("snap_width", self.snap_width),
            ("sample_rate", self.sample_rate),
            ("lateral_rise", self.lateral_rise),
            ("probe_distance", self.probe_distance),
            ("probe_duration", self.probe_duration),
            ("probe_stroke_time", self.probe_stroke_time),
            ("max_abs_dx", self.max_abs_dx),
            ("max_abs_dtheta", self.max_abs_dtheta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("contact_stiffness_z", self.contact_stiffness_z),
            ("lateral_gain", self.lateral_gain),
            ("torque_gain_x", self.torque_gain_x),
            ("torque_gain_y", self.torque_gain_y),
            ("snap_drop", self.snap_drop),
            ("lateral_onset", self.lateral_onset),
            ("probe_clearance", self.probe_clearance),
            ("probe_stiffness", self.probe_stiffness),
            ("probe_saturation", self.probe_saturation),
            ("probe_torque_gain_x", self.probe_torque_gain_x),
            ("probe_arm", self.probe_arm),
            ("probe_preload", self.probe_preload),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if self
            .noise_sigma
            .iter()
            .chain(&self.probe_noise_sigma)
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return bad("noise sigmas must be non-negative".into());
        }
        Ok(())
    }

    /// Same plant without measurement noise.
    pub fn noiseless(&self) -> Self {
        Self {
            noise_sigma: [0.0; 6],
            probe_noise_sigma: [0.0; 6],
            ..self.clone()
        }
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    fn samples_for(&self, duration: f64) -> usize {
        (duration * self.sample_rate + 1e-9).floor() as usize + 1
    }

    pub fn is_success(&self, offset: OffsetPattern) -> bool {
        offset.dx.abs() <= self.tol_x && offset.dtheta_z.abs() <= self.tol_theta
    }

    fn check_offset(&self, offset: OffsetPattern) -> Result<()> {
        let ok = offset.dx.is_finite()
            && offset.dtheta_z.is_finite()
            && offset.dx.abs() <= self.max_abs_dx
            && offset.dtheta_z.abs() <= self.max_abs_dtheta;
        if ok {
            Ok(())
        } else {
            Err(Error::OffsetOutOfRange {
                dx: offset.dx,
                dtheta_z: offset.dtheta_z,
            })
        }
    }

    /// Fraction of full lateral contact reached at time `t` of the assembly.
    pub fn lateral_ramp(&self, t: f64) -> f64 {
        ((t - self.lateral_onset) / self.lateral_rise).clamp(0.0, 1.0)
    }

    /// Noise-free assembly sample at time `t`, channels in [`Channel::ALL`]
    /// order.
    pub fn assembly_clean(&self, offset: OffsetPattern, t: f64) -> [f64; 6] {
        let (dx, dth) = (offset.dx, offset.dtheta_z);
        let depth = self.insertion_depth * (t / self.insertion_duration).min(1.0);
        let mut fz = self.contact_stiffness_z * depth;
        if self.is_success(offset) {
            fz -= self.snap_drop * normal_cdf((t - self.snap_time) / self.snap_width);
        }
        let r = self.lateral_ramp(t);
        [
            self.lateral_gain * (dx + 0.2 * dth) * r,
            0.1 * self.lateral_gain * dth * r,
            fz,
            self.torque_gain_x * dth * r,
            self.torque_gain_y * dx * r,
            0.1 * self.torque_gain_y * dx * r,
        ]
    }

    /// Probe stroke position at time `t`, mm.
    pub fn probe_stroke(&self, t: f64) -> f64 {
        self.probe_distance * (t / self.probe_stroke_time).min(1.0)
    }

    /// Contact force of the wall during a probe, before the sign of the
    /// direction is applied.
    pub fn probe_contact(&self, offset: OffsetPattern, direction: ProbeDirection, t: f64) -> f64 {
        let reach = self.probe_stroke(t) + direction.sign() * offset.dx - self.probe_clearance;
        (self.probe_stiffness * reach).clamp(0.0, self.probe_saturation)
    }

    /// Noise-free probe sample at time `t`.
    pub fn probe_clean(&self, offset: OffsetPattern, direction: ProbeDirection, t: f64) -> [f64; 6] {
        let contact = self.probe_contact(offset, direction, t);
        let drag = self.probe_stroke(t) / self.probe_distance;
        let tx = self.probe_torque_gain_x * offset.dtheta_z * drag;
        [
            direction.sign() * contact,
            0.1 * self.lateral_gain * offset.dtheta_z * drag,
            self.probe_preload + 0.1 * contact,
            tx,
            self.probe_arm * contact,
            0.1 * tx,
        ]
    }
}

/// Standard normal CDF.
fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// splitmix64 finalizer; used to derive independent seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn phase_key(phase: Phase) -> u64 {
    match phase {
        Phase::Assembly => 1,
        Phase::ProbePlusX => 2,
        Phase::ProbeMinusX => 3,
    }
}

fn render(
    config: &PlantConfig,
    phase: Phase,
    duration: f64,
    sigma: &[f64; 6],
    seed: u64,
    clean: impl Fn(f64) -> [f64; 6],
) -> Result<ForceTorqueProfile> {
    let n = config.samples_for(duration);
    let dt = config.sample_period();
    let mut channels: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::with_capacity(n));
    for k in 0..n {
        let v = clean(k as f64 * dt);
        for (ch, x) in channels.iter_mut().zip(v) {
            ch.push(x);
        }
    }
    let key = mix_seed(mix_seed(config.rng_seed, seed), phase_key(phase));
    for channel in Channel::ALL {
        let s = sigma[channel.index()];
        if s == 0.0 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(channel.index() as u64);
        for x in channels[channel.index()].iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x += s * z;
        }
    }
    ForceTorqueProfile::new(dt, channels, phase)
}

/// Full-length assembly profile and whether the insertion succeeds.
pub fn simulate_assembly(offset: OffsetPattern, config: &PlantConfig, seed: u64) -> Result<(ForceTorqueProfile, bool)> {
    config.check_offset(offset)?;
    let success = config.is_success(offset);
    debug_assert_eq!(
        success,
        label_from_offset(offset, config.tol_x, config.tol_theta).is_ok_and(|l| l.is_success())
    );
    let profile = render(
        config,
        Phase::Assembly,
        config.insertion_duration,
        &config.noise_sigma,
        seed,
        |t| config.assembly_clean(offset, t),
    )?;
    Ok((profile, success))
}

pub fn simulate_probe(
    offset: OffsetPattern,
    direction: ProbeDirection,
    config: &PlantConfig,
    seed: u64,
) -> Result<ForceTorqueProfile> {
    config.check_offset(offset)?;
    render(
        config,
        direction.phase(),
        config.probe_duration,
        &config.probe_noise_sigma,
        seed,
        |t| config.probe_clean(offset, direction, t),
    )
}

/// Offset after retracting and shifting by `action`.
pub fn apply_recovery(offset: OffsetPattern, action: &RecoveryAction) -> OffsetPattern {
    OffsetPattern::new(offset.dx + action.delta_x, offset.dtheta_z + action.delta_theta)
}
