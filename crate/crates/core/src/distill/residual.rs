use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::write_atomic;

pub const RESIDUAL_VERSION: u32 = 1;

/// `a = a_flow + clamp(a_res, ±bound)`.
pub fn residual_compose(a_flow: &[f64], a_res: &[f64], bound: f64) -> Result<Vec<f64>> {
    if a_flow.len() != a_res.len() {
        return Err(Error::dim(format!("base action has {} entries, residual {}", a_flow.len(), a_res.len())));
    }
    if !(bound >= 0.0) {
        return Err(Error::arg(format!("residual bound must be non-negative, got {bound}")));
    }
    Ok(a_flow.iter().zip(a_res).map(|(&a, &r)| a + r.clamp(-bound, bound)).collect())
}

/// Small tanh network mapping `(proprio, command, a_flow)` to a correction
/// bounded by `bound · tanh(·)`.
///
/// Proprioception already carries the previous total action. The output layer
/// starts at zero so a fresh residual leaves the base policy untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPolicy {
    version: u32,
    layer_sizes: Vec<usize>,
    bound: f64,
    params: Vec<f64>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Length of the observation prefix the residual reads: proprioception and
/// command for `n` joints.
pub(crate) fn residual_obs_len(n: usize) -> usize {
    5 * n + 2
}

impl ResidualPolicy {
    pub fn new<R: Rng + ?Sized>(n_joints: usize, hidden: &[usize], bound: f64, rng: &mut R) -> Result<Self> {
        if n_joints == 0 || hidden.contains(&0) {
            return Err(Error::arg("residual layers must be non-empty"));
        }
        if !(bound >= 0.0 && bound.is_finite()) {
            return Err(Error::arg(format!("residual bound must be finite and non-negative, got {bound}")));
        }
        let mut sizes = vec![residual_obs_len(n_joints) + n_joints];
        sizes.extend_from_slice(hidden);
        sizes.push(n_joints);
        let mut params = Vec::with_capacity(param_count(&sizes));
        let last = sizes.len() - 2;
        for (l, w) in sizes.windows(2).enumerate() {
            if l == last {
                params.extend(std::iter::repeat_n(0.0, w[0] * w[1] + w[1]));
            } else {
                let r = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let u = Uniform::new_inclusive(-r, r).map_err(|e| Error::arg(e.to_string()))?;
                params.extend((0..w[0] * w[1]).map(|_| u.sample(rng)));
                params.extend(std::iter::repeat_n(0.0, w[1]));
            }
        }
        Ok(Self { version: RESIDUAL_VERSION, layer_sizes: sizes, bound, params })
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn n_joints(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Correction for an observation and the base action.
    pub fn action(&self, obs: &[f64], a_flow: &[f64], n_joints: usize) -> Result<Vec<f64>> {
        let head = residual_obs_len(n_joints);
        if n_joints != self.n_joints() || a_flow.len() != n_joints || obs.len() < head {
            return Err(Error::dim(format!(
                "residual expects {} joints and an observation of at least {head} entries",
                self.n_joints()
            )));
        }
        let mut x: Vec<f64> = obs[..head].iter().chain(a_flow).copied().collect();
        let n_layers = self.layer_sizes.len() - 1;
        let mut off = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            off += n_in * n_out + n_out;
            x = (0..n_out)
                .map(|o| {
                    let z = b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&x).map(|(a, c)| a * c).sum::<f64>();
                    if l + 1 < n_layers { z.tanh() } else { self.bound * z.tanh() }
                })
                .collect();
        }
        Ok(x)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("residual serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if r.version != RESIDUAL_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported residual version {} (this build reads {RESIDUAL_VERSION})",
                r.version
            )));
        }
        if r.layer_sizes.len() < 2 || r.layer_sizes.contains(&0) || r.params.len() != param_count(&r.layer_sizes) {
            return Err(Error::Checkpoint("residual layer sizes disagree with the parameter count".into()));
        }
        let n = r.n_joints();
        if r.layer_sizes[0] != residual_obs_len(n) + n {
            return Err(Error::Checkpoint("residual input width does not match its joint count".into()));
        }
        if !(r.bound >= 0.0 && r.bound.is_finite()) || r.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Checkpoint("non-finite residual parameters".into()));
        }
        Ok(r)
    }
}

pub fn save_residual(r: &ResidualPolicy, path: &Path) -> Result<()> {
    write_atomic(path, r.to_json().as_bytes())
}

pub fn load_residual(path: &Path) -> Result<ResidualPolicy> {
    ResidualPolicy::from_json(&fs::read_to_string(path)?)
}
