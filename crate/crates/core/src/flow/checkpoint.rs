//! JSON checkpoints: a versioned header plus the flat parameter array.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{Activation, VelocityField};
use super::SamplerCfg;
use crate::error::{Error, Result};
use crate::fsio::write_atomic;
use crate::scalar::Real;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    layer_shapes: Vec<usize>,
    action_dim: usize,
    obs_dim: usize,
    time_embed_dim: usize,
    time_frequencies: Vec<f64>,
    activation: Activation,
    alpha: f64,
    beta: f64,
    sampler_steps: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    header: Header,
    params: Vec<f64>,
}

/// A network together with the sampler settings it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub net: VelocityField<T>,
    pub sampler: SamplerCfg,
}

impl<T: Real> Checkpoint<T> {
    pub fn to_json(&self) -> String {
        let net = &self.net;
        let file = File {
            header: Header {
                version: CHECKPOINT_VERSION,
                layer_shapes: net.layer_sizes().to_vec(),
                action_dim: net.action_dim(),
                obs_dim: net.obs_dim(),
                time_embed_dim: net.time_embed_dim(),
                time_frequencies: net.frequencies().iter().map(|x| x.as_f64()).collect(),
                activation: net.activation(),
                alpha: self.sampler.alpha,
                beta: self.sampler.beta,
                sampler_steps: self.sampler.steps,
            },
            params: net.params().iter().map(|x| x.as_f64()).collect(),
        };
        serde_json::to_string(&file).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: File = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let h = file.header;
        if h.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (this build reads {CHECKPOINT_VERSION})",
                h.version
            )));
        }
        if h.time_embed_dim != 2 * h.time_frequencies.len() {
            return Err(Error::Checkpoint("time_embed_dim disagrees with the frequency list".into()));
        }
        let net = VelocityField::from_parts(
            h.action_dim,
            h.obs_dim,
            h.time_frequencies.into_iter().map(T::lit).collect(),
            h.layer_shapes,
            h.activation,
            file.params.into_iter().map(T::lit).collect(),
        )?;
        let sampler = SamplerCfg { steps: h.sampler_steps, alpha: h.alpha, beta: h.beta, ..SamplerCfg::default() };
        sampler.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Self { net, sampler })
    }
}

pub fn save_checkpoint<T: Real>(ckpt: &Checkpoint<T>, path: &Path) -> Result<()> {
    write_atomic(path, ckpt.to_json().as_bytes())
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<Checkpoint<T>> {
    Checkpoint::from_json(&fs::read_to_string(path)?)
}

/// Saves a network with the default sampler settings.
pub fn save_policy<T: Real>(net: &VelocityField<T>, path: &Path) -> Result<()> {
    save_checkpoint(&Checkpoint { net: net.clone(), sampler: SamplerCfg::default() }, path)
}

pub fn load_policy<T: Real>(path: &Path) -> Result<VelocityField<T>> {
    Ok(load_checkpoint(path)?.net)
}
