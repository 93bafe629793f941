use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::ActuatorParams;
use crate::error::{Error, Result};

/// Actuator models by name, e.g. `"7520-22.5"`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorCatalog {
    entries: BTreeMap<String, ActuatorParams<f64>>,
}

const BUILTIN: [(&str, [f64; 8]); 4] = [
    // tau_y1, tau_y2, v_x1, v_x2, mu_s, v_act, mu_d, armature
    ("5020-16", [24.8, 31.9, 30.86, 40.13, 0.6, 0.01, 0.06, 3.610e-03]),
    ("7520-14.3", [71.0, 83.3, 22.63, 35.52, 1.6, 0.01, 0.16, 1.018e-02]),
    ("7520-22.5", [111.0, 131.0, 14.5, 22.7, 2.4, 0.01, 0.24, 2.510e-02]),
    ("4010-25", [4.8, 8.6, 15.3, 24.76, 0.6, 0.01, 0.06, 4.250e-03]),
];

impl ActuatorCatalog {
    /// The four actuator models shipped with the crate.
    pub fn builtin() -> Self {
        let entries = BUILTIN
            .iter()
            .map(|&(name, [tau_y1, tau_y2, v_x1, v_x2, mu_s, v_act, mu_d, armature])| {
                (name.to_string(), ActuatorParams { tau_y1, tau_y2, v_x1, v_x2, mu_s, v_act, mu_d, armature })
            })
            .collect();
        Self { entries }
    }

    pub fn from_map(entries: BTreeMap<String, ActuatorParams<f64>>) -> Result<Self> {
        for (name, p) in &entries {
            p.validate().map_err(|e| Error::Config(format!("actuator {name}: {e}")))?;
        }
        Ok(Self { entries })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map: BTreeMap<String, ActuatorParams<f64>> =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_map(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("catalog serializes")
    }

    /// Looks up an actuator; the error lists every known name.
    pub fn get(&self, name: &str) -> Result<ActuatorParams<f64>> {
        self.entries.get(name).copied().ok_or_else(|| {
            Error::Config(format!(
                "unknown actuator {name:?}; known: {}",
                self.entries.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, ActuatorParams<f64>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl Default for ActuatorCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}
