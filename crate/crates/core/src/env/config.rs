use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Mode;
use crate::actuation::{ActuatorCatalog, ActuatorParams, PowerPenaltyCfg};
use crate::error::{Error, Result};
use crate::metrics::TerminationThresholds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkCfg {
    /// Point mass at the link tip (kg).
    pub mass: f64,
    pub length: f64,
    /// Actuator name resolved through the catalog.
    pub actuator: String,
}

/// Half-widths of uniform randomization ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationCfg {
    /// Initial joint offset (rad).
    pub pose_noise: f64,
    /// Per-step external joint torque (N·m).
    pub disturbance: f64,
    /// Relative link mass change.
    pub mass_scale: f64,
    /// Relative friction change.
    pub friction_scale: f64,
    /// Hidden shift of the PD default position (rad).
    pub default_offset: f64,
    /// Range multiplier in aggressive mode.
    pub aggressive_factor: f64,
}

impl Default for RandomizationCfg {
    fn default() -> Self {
        Self {
            pose_noise: 0.05,
            disturbance: 0.5,
            mass_scale: 0.1,
            friction_scale: 0.2,
            default_offset: 0.02,
            aggressive_factor: 1.5,
        }
    }
}

impl RandomizationCfg {
    /// Every range zero.
    pub fn none() -> Self {
        Self {
            pose_noise: 0.0,
            disturbance: 0.0,
            mass_scale: 0.0,
            friction_scale: 0.0,
            default_offset: 0.0,
            aggressive_factor: 1.5,
        }
    }

    /// Ranges in effect for `mode`.
    pub fn scaled(&self, mode: Mode) -> Self {
        let k = match mode {
            Mode::Base => 1.0,
            Mode::Aggressive => self.aggressive_factor,
        };
        Self {
            pose_noise: self.pose_noise * k,
            disturbance: self.disturbance * k,
            mass_scale: self.mass_scale * k,
            friction_scale: self.friction_scale * k,
            default_offset: self.default_offset * k,
            aggressive_factor: self.aggressive_factor,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.pose_noise, self.disturbance, self.mass_scale, self.friction_scale, self.default_offset];
        if all.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || !(self.aggressive_factor >= 1.0) {
            return Err(Error::Config("randomization ranges must be non-negative and aggressive_factor >= 1".into()));
        }
        if self.mass_scale * self.aggressive_factor >= 1.0 || self.friction_scale * self.aggressive_factor > 1.0 {
            return Err(Error::Config("mass/friction scale ranges must keep parameters positive".into()));
        }
        Ok(())
    }
}

/// Arm geometry, actuation, randomization and episode settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub links: Vec<LinkCfg>,
    pub gravity: f64,
    /// Control period (s).
    pub dt: f64,
    /// Physics substeps per control step.
    pub substeps: usize,
    pub pd_freq_hz: f64,
    pub pd_damping: f64,
    /// Multiplier on every actuator's torque ceilings.
    pub envelope_scale: f64,
    pub randomization: RandomizationCfg,
    pub thresholds: TerminationThresholds<f64>,
    pub episode_len: usize,
    pub history_len: usize,
    pub power_penalty: PowerPenaltyCfg,
    pub tracking_weight: f64,
    /// Extra or overriding actuator models.
    pub actuators: BTreeMap<String, ActuatorParams<f64>>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            links: vec![
                LinkCfg { mass: 1.0, length: 0.3, actuator: "7520-22.5".into() },
                LinkCfg { mass: 1.0, length: 0.3, actuator: "7520-22.5".into() },
            ],
            gravity: 9.81,
            dt: 0.02,
            substeps: 4,
            pd_freq_hz: 10.0,
            pd_damping: 2.0,
            envelope_scale: 1.0,
            randomization: RandomizationCfg::default(),
            thresholds: TerminationThresholds::default(),
            episode_len: 500,
            history_len: 5,
            power_penalty: PowerPenaltyCfg::default(),
            tracking_weight: 1.0,
            actuators: BTreeMap::new(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.links.is_empty() {
            return Err(Error::Config("arm needs at least one link".into()));
        }
        if self.links.iter().any(|l| !(l.mass > 0.0 && l.length > 0.0)) {
            return Err(Error::Config("link masses and lengths must be positive".into()));
        }
        if !(self.dt > 0.0) || self.substeps == 0 || self.episode_len == 0 {
            return Err(Error::Config("dt, substeps and episode_len must be positive".into()));
        }
        if !(self.gravity.is_finite() && self.pd_freq_hz > 0.0 && self.pd_damping > 0.0 && self.envelope_scale > 0.0) {
            return Err(Error::Config("gravity, PD frequency/damping and envelope scale must be valid".into()));
        }
        self.randomization.validate()?;
        self.thresholds.validate()?;
        self.power_penalty.validate()?;
        Ok(())
    }

    /// Built-in catalog with this config's extra actuators merged in.
    pub fn catalog(&self) -> Result<ActuatorCatalog> {
        let mut map: BTreeMap<String, ActuatorParams<f64>> = ActuatorCatalog::builtin().iter().map(|(k, v)| (k.to_string(), v)).collect();
        map.extend(self.actuators.clone());
        ActuatorCatalog::from_map(map)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
