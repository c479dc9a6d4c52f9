//! Behavioral memristor and multilevel memory-cell models.
//!
//! A device is a ladder of conductance states spaced uniformly between
//! `1/r_off` and `1/r_on`. Supra-threshold pulses of at least `t_set` move it
//! one level (and succeed only with probability `p_switch`); sub-threshold
//! reads never disturb it and carry multiplicative Gaussian noise `sigma_r`.
//! A `Continuous` ladder is the ideal analog limit: a pulse's overdrive above
//! threshold sets the size of the step.

use rayon::prelude::*;

use crate::error::{HtmError, Result};
use crate::rng::{Domain, RngStream};

/// Number of programmable conductance states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Levels {
    Finite(u32),
    Continuous,
}

/// Device parameters shared by every device of an array or cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DevicePreset {
    pub r_on: f64,
    pub r_off: f64,
    pub levels: Levels,
    pub v_th: f64,
    pub t_set: f64,
    pub p_switch: f64,
    pub sigma_r: f64,
    /// Pulse budget for verify-after-write programming.
    pub max_pulses: u32,
}

/// Read noise at which a 4-branch 256-level cell reaches a mean recall error
/// of 10% of range. Reproduced by `calibrate_read_noise` in the tests.
pub const CALIBRATED_SIGMA_R: f64 = 0.3447;

/// Multiple of `v_th` used for write pulses on finite ladders.
const WRITE_OVERDRIVE: f64 = 1.5;
/// Reads are performed at this fraction of `v_th`.
const READ_FRACTION: f64 = 0.2;

impl Default for DevicePreset {
    fn default() -> Self {
        Self {
            r_on: 1.0e3,
            r_off: 1.0e5,
            levels: Levels::Finite(256),
            v_th: 1.0,
            t_set: 1.0e-6,
            p_switch: 1.0,
            sigma_r: 0.0,
            max_pulses: 100_000,
        }
    }
}

impl DevicePreset {
    /// Exact programmable conductance: no quantization, noise or failed writes.
    pub fn ideal() -> Self {
        Self {
            levels: Levels::Continuous,
            ..Self::default()
        }
    }

    /// Looks up a built-in preset by name.
    ///
    /// `ideal`, `quantized-256` (noise-free 256 levels), and the noisy
    /// `reram-16`, `reram-64`, `reram-256`, `reram-1024` presets that use the
    /// calibrated read noise and `p_switch = 0.95`.
    pub fn named(name: &str) -> Option<Self> {
        let noisy = |levels| Self {
            levels: Levels::Finite(levels),
            p_switch: 0.95,
            sigma_r: CALIBRATED_SIGMA_R,
            ..Self::default()
        };
        match name {
            "ideal" => Some(Self::ideal()),
            "quantized-256" => Some(Self::default()),
            "reram-16" => Some(noisy(16)),
            "reram-64" => Some(noisy(64)),
            "reram-256" => Some(noisy(256)),
            "reram-1024" => Some(noisy(1024)),
            _ => None,
        }
    }

    pub const PRESET_NAMES: [&'static str; 6] = [
        "ideal",
        "quantized-256",
        "reram-16",
        "reram-64",
        "reram-256",
        "reram-1024",
    ];

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: &str| {
            Err(HtmError::InvalidConfig {
                key: key.into(),
                reason: reason.into(),
            })
        };
        if !(self.r_on > 0.0) || !self.r_on.is_finite() {
            return bad("r_on", "must be positive");
        }
        if !(self.r_off > self.r_on) || !self.r_off.is_finite() {
            return bad("r_off", "must exceed r_on");
        }
        if let Levels::Finite(l) = self.levels {
            if l < 2 {
                return bad("levels", "need at least 2 levels");
            }
        }
        if !(self.v_th > 0.0) {
            return bad("v_th", "must be positive");
        }
        if !(self.t_set > 0.0) {
            return bad("t_set", "must be positive");
        }
        if !(self.p_switch > 0.0 && self.p_switch <= 1.0) {
            return bad("p_switch", "must lie in (0, 1]");
        }
        if !(self.sigma_r >= 0.0) || !self.sigma_r.is_finite() {
            return bad("sigma_r", "must be finite and >= 0");
        }
        Ok(())
    }

    pub fn g_min(&self) -> f64 {
        1.0 / self.r_off
    }

    pub fn g_max(&self) -> f64 {
        1.0 / self.r_on
    }

    pub fn g_span(&self) -> f64 {
        self.g_max() - self.g_min()
    }

    pub fn read_voltage(&self) -> f64 {
        READ_FRACTION * self.v_th
    }

    pub fn level_count(&self) -> Option<u32> {
        match self.levels {
            Levels::Finite(l) => Some(l),
            Levels::Continuous => None,
        }
    }

    /// Conductance for a normalized weight in `[0, 1]`.
    pub fn conductance_of(&self, weight: f64) -> f64 {
        self.g_min() + weight * self.g_span()
    }

    /// Normalized weight encoded by a conductance.
    pub fn weight_of(&self, conductance: f64) -> f64 {
        (conductance - self.g_min()) / self.g_span()
    }

    /// Nearest level for a weight in `[0, 1]`.
    pub fn quantize(&self, weight: f64) -> Option<u32> {
        self.level_count()
            .map(|l| (weight.clamp(0.0, 1.0) * (l - 1) as f64).round() as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DeviceState {
    Level(u32),
    Analog(f64),
}

/// One memristor.
#[derive(Debug, Clone, PartialEq)]
pub struct MemristorDevice {
    preset: DevicePreset,
    state: DeviceState,
}

impl MemristorDevice {
    /// A device in its high-resistance (lowest conductance) state.
    pub fn new(preset: DevicePreset) -> Self {
        let state = match preset.levels {
            Levels::Finite(_) => DeviceState::Level(0),
            Levels::Continuous => DeviceState::Analog(0.0),
        };
        Self { preset, state }
    }

    pub fn preset(&self) -> &DevicePreset {
        &self.preset
    }

    /// Current level index, `None` on a continuous ladder.
    pub fn level(&self) -> Option<u32> {
        match self.state {
            DeviceState::Level(l) => Some(l),
            DeviceState::Analog(_) => None,
        }
    }

    /// Noise-free normalized state in `[0, 1]`.
    pub fn weight(&self) -> f64 {
        match (self.state, self.preset.levels) {
            (DeviceState::Level(l), Levels::Finite(n)) => l as f64 / (n - 1) as f64,
            (DeviceState::Analog(x), _) => x,
            (DeviceState::Level(_), Levels::Continuous) => unreachable!(),
        }
    }

    pub fn conductance(&self) -> f64 {
        self.preset.conductance_of(self.weight())
    }

    pub fn resistance(&self) -> f64 {
        1.0 / self.conductance()
    }

    /// Applies one write pulse. Returns whether the state changed.
    ///
    /// Positive voltage raises conductance. Pulses at or below threshold, or
    /// shorter than `t_set`, do nothing and consume no randomness.
    pub fn program_pulse(&mut self, volts: f64, duration: f64, rng: &mut RngStream) -> bool {
        if volts.abs() <= self.preset.v_th || duration < self.preset.t_set {
            return false;
        }
        if !rng.bernoulli(self.preset.p_switch) {
            return false;
        }
        let before = self.state;
        self.state = match (self.state, self.preset.levels) {
            (DeviceState::Level(l), Levels::Finite(n)) => {
                if volts > 0.0 {
                    DeviceState::Level((l + 1).min(n - 1))
                } else {
                    DeviceState::Level(l.saturating_sub(1))
                }
            }
            (DeviceState::Analog(x), _) => {
                let step = ((volts.abs() - self.preset.v_th) / self.preset.v_th).min(1.0);
                DeviceState::Analog((x + step.copysign(volts)).clamp(0.0, 1.0))
            }
            (DeviceState::Level(_), Levels::Continuous) => unreachable!(),
        };
        self.state != before
    }

    /// Verify-after-write walk to `target`; returns the pulse count.
    pub fn program_to_level(&mut self, target: u32, rng: &mut RngStream) -> Result<u32> {
        let n = self
            .preset
            .level_count()
            .ok_or_else(|| HtmError::InvalidConfig {
                key: "levels".into(),
                reason: "level programming needs a finite ladder".into(),
            })?;
        if target >= n {
            return Err(HtmError::IndexOutOfRange {
                what: "level",
                index: target as usize,
                len: n as usize,
            });
        }
        let v = WRITE_OVERDRIVE * self.preset.v_th;
        let mut pulses = 0u32;
        while let Some(level) = self.level().filter(|&l| l != target) {
            if pulses >= self.preset.max_pulses {
                return Err(HtmError::ProgrammingFailed {
                    target,
                    reached: level,
                    pulses,
                });
            }
            let sign = if target > level { 1.0 } else { -1.0 };
            self.program_pulse(sign * v, self.preset.t_set, rng);
            pulses += 1;
        }
        Ok(pulses)
    }

    /// Programs a normalized weight: nearest level on finite ladders, exact
    /// analog write otherwise. Returns the pulse count.
    pub fn program_to_value(&mut self, weight: f64, rng: &mut RngStream) -> Result<u32> {
        let weight = weight.clamp(0.0, 1.0);
        match self.preset.quantize(weight) {
            Some(level) => self.program_to_level(level, rng),
            None => {
                let mut pulses = 0u32;
                loop {
                    let x = self.weight();
                    let delta = weight - x;
                    if delta == 0.0 {
                        return Ok(pulses);
                    }
                    if pulses >= self.preset.max_pulses {
                        return Err(HtmError::ProgrammingFailed {
                            target: (weight * u32::MAX as f64) as u32,
                            reached: (x * u32::MAX as f64) as u32,
                            pulses,
                        });
                    }
                    let volts = (self.preset.v_th * (1.0 + delta.abs())).copysign(delta);
                    let switched = self.program_pulse(volts, self.preset.t_set, rng);
                    pulses += 1;
                    if switched || self.weight() != x {
                        // absorb rounding in the overdrive arithmetic
                        self.state = DeviceState::Analog(weight);
                    }
                }
            }
        }
    }

    /// Open-loop update used by online learning: a train of single-level
    /// pulses sized to `delta` (one analog pulse on continuous ladders),
    /// each subject to `p_switch`. Returns the pulses issued.
    pub fn nudge(&mut self, delta: f64, rng: &mut RngStream) -> u32 {
        if delta == 0.0 {
            return 0;
        }
        match self.preset.levels {
            Levels::Finite(n) => {
                let count = (delta.abs() * (n - 1) as f64).round() as u32;
                let volts = (WRITE_OVERDRIVE * self.preset.v_th).copysign(delta);
                for _ in 0..count {
                    self.program_pulse(volts, self.preset.t_set, rng);
                }
                count
            }
            Levels::Continuous => {
                let x = self.weight();
                let target = (x + delta).clamp(0.0, 1.0);
                if target == x {
                    return 0;
                }
                let volts = (self.preset.v_th * (1.0 + (target - x).abs())).copysign(delta);
                if self.program_pulse(volts, self.preset.t_set, rng) {
                    self.state = DeviceState::Analog(target);
                }
                1
            }
        }
    }

    /// Sub-threshold read: `I = V * G * (1 + N(0, sigma_r))`.
    pub fn read_current(&self, volts: f64, rng: &mut RngStream) -> Result<f64> {
        if volts.abs() >= self.preset.v_th {
            return Err(HtmError::ReadDisturb {
                volts,
                threshold: self.preset.v_th,
            });
        }
        let ideal = volts * self.conductance();
        if self.preset.sigma_r == 0.0 {
            Ok(ideal)
        } else {
            Ok(ideal * (1.0 + self.preset.sigma_r * rng.standard_normal()))
        }
    }

    /// Reads at the preset read voltage and decodes a normalized weight.
    pub fn read_weight(&self, rng: &mut RngStream) -> f64 {
        let v = self.preset.read_voltage();
        let i = self
            .read_current(v, rng)
            .expect("read voltage is below threshold");
        self.preset.weight_of(i / v)
    }
}

/// Multilevel analog memory cell built from parallel weighted branches.
///
/// A value in `[0, 1]` is quantized to one of `level_count` codes and
/// written as base-`radix` digits, one digit per branch, where branch `b`
/// carries weight `radix^b`. Recall sums the noisy branch reads with those
/// weights and rescales to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryCell {
    level_count: u32,
    radix: u32,
    branches: Vec<MemristorDevice>,
}

impl MemoryCell {
    pub fn new(preset: DevicePreset, level_count: u32, branch_count: usize) -> Result<Self> {
        if !(3..=4).contains(&branch_count) {
            return Err(HtmError::InvalidConfig {
                key: "branch_count".into(),
                reason: "a cell has 3 or 4 branches".into(),
            });
        }
        if level_count < 2 {
            return Err(HtmError::InvalidConfig {
                key: "levels".into(),
                reason: "a cell needs at least 2 levels".into(),
            });
        }
        let mut radix = 2u32;
        while (radix as u64).pow(branch_count as u32) < level_count as u64 {
            radix += 1;
        }
        let branch_preset = DevicePreset {
            levels: Levels::Finite(radix),
            ..preset
        };
        Ok(Self {
            level_count,
            radix,
            branches: vec![MemristorDevice::new(branch_preset); branch_count],
        })
    }

    pub fn level_count(&self) -> u32 {
        self.level_count
    }

    pub fn radix(&self) -> u32 {
        self.radix
    }

    pub fn branch_weights(&self) -> Vec<u64> {
        (0..self.branches.len())
            .map(|b| (self.radix as u64).pow(b as u32))
            .collect()
    }

    /// Code currently held by the branches (noise-free).
    pub fn stored_code(&self) -> u32 {
        self.branches
            .iter()
            .zip(self.branch_weights())
            .map(|(d, w)| d.level().unwrap() as u64 * w)
            .sum::<u64>() as u32
    }

    /// Noise-free stored value.
    pub fn stored_value(&self) -> f64 {
        self.stored_code() as f64 / (self.level_count - 1) as f64
    }

    /// Quantizes and writes `value`; returns total pulses.
    pub fn store(&mut self, value: f64, rng: &mut RngStream) -> Result<u32> {
        if !(0.0..=1.0).contains(&value) {
            return Err(HtmError::InvalidConfig {
                key: "value".into(),
                reason: format!("{value} outside [0, 1]"),
            });
        }
        let mut code = (value * (self.level_count - 1) as f64).round() as u32;
        let mut pulses = 0;
        for dev in &mut self.branches {
            pulses += dev.program_to_level(code % self.radix, rng)?;
            code /= self.radix;
        }
        Ok(pulses)
    }

    /// Analog recall through noisy branch reads.
    pub fn recall(&self, rng: &mut RngStream) -> f64 {
        let scale = (self.radix - 1) as f64;
        let code: f64 = self
            .branches
            .iter()
            .zip(self.branch_weights())
            .map(|(d, w)| d.read_weight(rng) * scale * w as f64)
            .sum();
        (code / (self.level_count - 1) as f64).clamp(0.0, 1.0)
    }
}

/// Mean absolute recall error over `samples` uniform values.
pub fn mean_recall_error(
    preset: DevicePreset,
    level_count: u32,
    branch_count: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let errors = (0..samples as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let value = RngStream::keyed(seed, Domain::Calibration, &[i, 0]).uniform();
            let mut cell = MemoryCell::new(preset, level_count, branch_count)?;
            cell.store(
                value,
                &mut RngStream::keyed(seed, Domain::Calibration, &[i, 1]),
            )?;
            let recalled = cell.recall(&mut RngStream::keyed(seed, Domain::Calibration, &[i, 2]));
            Ok((recalled - value).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(errors.iter().sum::<f64>() / samples as f64)
}

/// Largest read noise (to bisection tolerance) whose mean recall error stays
/// at or below `target`.
pub fn calibrate_read_noise(
    preset: DevicePreset,
    level_count: u32,
    branch_count: usize,
    target: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let err_at = |sigma: f64| {
        mean_recall_error(
            DevicePreset {
                sigma_r: sigma,
                ..preset
            },
            level_count,
            branch_count,
            samples,
            seed,
        )
    };
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    if err_at(hi)? <= target {
        return Ok(hi);
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if err_at(mid)? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-5 {
            break;
        }
    }
    Ok(lo)
}
