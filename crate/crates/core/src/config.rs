//! Algorithm parameters and the flat `key = value` config format.
//!
//! A config file holds three groups of keys in any order:
//!
//! ```text
//! # HTM parameters
//! theta_c = 0.5
//! theta_s = 1
//! s = 0.02
//! rho_plus = 0.1
//! rho_minus = 0.05
//! T = 1000
//! eta = 1.0
//! theta_seg = 1
//! s1 = 0.02
//! rho_tilde_minus = 0.005
//! gamma_tm = 0.5
//! # device preset
//! r_on = 1000
//! r_off = 100000
//! levels = 256        # or `inf`
//! v_th = 1.0
//! t_set = 1e-6
//! p_switch = 0.95
//! sigma_r = 0.02
//! # pipeline geometry
//! iterations = 4
//! block_size = 3
//! region_blocks = 2
//! ```
//!
//! Missing keys keep their defaults. Unknown or repeated keys are errors.

use std::collections::BTreeMap;

use crate::device::{DevicePreset, Levels};
use crate::error::{HtmError, Result};
use crate::pipeline::PipelineConfig;

/// Learning and inference parameters shared by the SP, TM and pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HtmConfig {
    /// Connected-permanence threshold (`theta_c`).
    pub connected_threshold: f64,
    /// Minimum overlap for activation (`theta_s`).
    pub stimulus_threshold: f64,
    /// Target activation density of the SP (`s`).
    pub density: f64,
    /// Permanence increment (`rho_plus`).
    pub permanence_inc: f64,
    /// Permanence decrement (`rho_minus`).
    pub permanence_dec: f64,
    /// Activity averaging window (`T`).
    pub activity_window: u32,
    /// Boost adaptation strength (`eta`).
    pub boost_strength: f64,
    /// Segment activation threshold in synapses (`theta_seg`).
    pub segment_threshold: u32,
    /// Fraction of winning TM columns (`s1`).
    pub winner_fraction: f64,
    /// Long-term decay of mispredicting segments (`rho_tilde_minus`).
    pub segment_decay: f64,
    /// Class template binarization threshold (`gamma_tm`).
    pub template_threshold: f64,
}

impl Default for HtmConfig {
    fn default() -> Self {
        Self {
            connected_threshold: 0.5,
            stimulus_threshold: 1.0,
            density: 0.02,
            permanence_inc: 0.1,
            permanence_dec: 0.05,
            activity_window: 1000,
            boost_strength: 1.0,
            segment_threshold: 1,
            winner_fraction: 0.02,
            segment_decay: 0.005,
            template_threshold: 0.5,
        }
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> HtmError {
    HtmError::InvalidConfig {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn open_unit(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("{v} not in (0, 1)")))
    }
}

impl HtmConfig {
    pub fn validate(&self) -> Result<()> {
        open_unit("theta_c", self.connected_threshold)?;
        if !(self.stimulus_threshold >= 0.0) {
            return Err(invalid("theta_s", "must be >= 0"));
        }
        open_unit("s", self.density)?;
        open_unit("rho_plus", self.permanence_inc)?;
        open_unit("rho_minus", self.permanence_dec)?;
        if self.activity_window < 1 {
            return Err(invalid("T", "must be >= 1"));
        }
        if !(self.boost_strength >= 0.0) || !self.boost_strength.is_finite() {
            return Err(invalid("eta", "must be finite and >= 0"));
        }
        open_unit("s1", self.winner_fraction)?;
        if !(self.segment_decay >= 0.0) {
            return Err(invalid("rho_tilde_minus", "must be >= 0"));
        }
        if self.segment_decay >= self.permanence_dec {
            return Err(invalid(
                "rho_tilde_minus",
                format!(
                    "{} must be smaller than rho_minus = {}",
                    self.segment_decay, self.permanence_dec
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.template_threshold) {
            return Err(invalid("gamma_tm", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Everything a config file can set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimConfig {
    pub htm: HtmConfig,
    pub device: DevicePreset,
    pub pipeline: PipelineConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.htm.validate()?;
        self.device.validate()?;
        self.pipeline.validate()
    }

    /// Parses config text on top of `base` and validates the result.
    pub fn parse_with_base(text: &str, base: SimConfig) -> Result<Self> {
        let entries = parse_entries(text)?;
        let mut cfg = base;
        for (key, (value, line)) in &entries {
            cfg.apply(key, value, *line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_base(text, SimConfig::default())
    }

    fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let h = &mut self.htm;
        let d = &mut self.device;
        let p = &mut self.pipeline;
        match key {
            "theta_c" => h.connected_threshold = real(key, value)?,
            "theta_s" => h.stimulus_threshold = real(key, value)?,
            "s" => h.density = real(key, value)?,
            "rho_plus" => h.permanence_inc = real(key, value)?,
            "rho_minus" => h.permanence_dec = real(key, value)?,
            "T" => h.activity_window = count(key, value)?,
            "eta" => h.boost_strength = real(key, value)?,
            "theta_seg" => h.segment_threshold = count(key, value)?,
            "s1" => h.winner_fraction = real(key, value)?,
            "rho_tilde_minus" => h.segment_decay = real(key, value)?,
            "gamma_tm" => h.template_threshold = real(key, value)?,
            "r_on" => d.r_on = real(key, value)?,
            "r_off" => d.r_off = real(key, value)?,
            "levels" => d.levels = levels(key, value)?,
            "v_th" => d.v_th = real(key, value)?,
            "t_set" => d.t_set = real(key, value)?,
            "p_switch" => d.p_switch = real(key, value)?,
            "sigma_r" => d.sigma_r = real(key, value)?,
            "iterations" => p.iterations = count(key, value)? as usize,
            "block_size" => p.block_size = count(key, value)? as usize,
            "region_blocks" => p.region_blocks = count(key, value)? as usize,
            _ => {
                return Err(HtmError::UnknownConfigKey {
                    key: key.to_string(),
                    line,
                })
            }
        }
        Ok(())
    }
}

fn real(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| invalid(key, format!("`{value}` is not a number")))?;
    if v.is_nan() {
        return Err(invalid(key, "NaN"));
    }
    Ok(v)
}

fn count(key: &str, value: &str) -> Result<u32> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("`{value}` is not a non-negative integer")))
}

fn levels(key: &str, value: &str) -> Result<Levels> {
    if value.eq_ignore_ascii_case("inf") {
        Ok(Levels::Continuous)
    } else {
        Ok(Levels::Finite(count(key, value)?))
    }
}

/// Splits config text into `key -> (value, line)`, rejecting duplicates.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, (String, usize)>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| HtmError::ConfigSyntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(HtmError::ConfigSyntax {
                line,
                message: "empty key or value".into(),
            });
        }
        if out
            .insert(key.to_string(), (value.to_string(), line))
            .is_some()
        {
            return Err(HtmError::ConfigSyntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_all_groups() {
        let cfg = SimConfig::parse(
            "theta_c = 0.4\nT = 10 # short window\nlevels = inf\nsigma_r=0\n\niterations = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.htm.connected_threshold, 0.4);
        assert_eq!(cfg.htm.activity_window, 10);
        assert_eq!(cfg.device.levels, Levels::Continuous);
        assert_eq!(cfg.device.sigma_r, 0.0);
        assert_eq!(cfg.pipeline.iterations, 2);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = SimConfig::parse("theta_c = 0.4\nbogus = 1\n").unwrap_err();
        assert_eq!(
            err,
            HtmError::UnknownConfigKey {
                key: "bogus".into(),
                line: 2
            }
        );
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert!(matches!(
            SimConfig::parse("s = 0.1\ns = 0.2\n"),
            Err(HtmError::ConfigSyntax { line: 2, .. })
        ));
        assert!(matches!(
            SimConfig::parse("s 0.1\n"),
            Err(HtmError::ConfigSyntax { line: 1, .. })
        ));
    }

    #[test]
    fn range_violations() {
        for text in [
            "theta_c = 1.0",
            "theta_c = 0",
            "s = 1.5",
            "T = 0",
            "eta = -1",
            "rho_minus = 0.01\nrho_tilde_minus = 0.01",
            "gamma_tm = 2",
            "p_switch = 0",
            "r_on = 200000",
            "block_size = 0",
        ] {
            assert!(
                matches!(SimConfig::parse(text), Err(HtmError::InvalidConfig { .. })),
                "{text} should be rejected"
            );
        }
    }

    #[test]
    fn documented_defaults() {
        let c = HtmConfig::default();
        assert_eq!(c.activity_window, 1000);
        assert!((0.01..=0.02).contains(&c.winner_fraction));
        assert!(c.segment_decay < c.permanence_dec);
    }
}
