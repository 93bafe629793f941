//! Flow-matching velocity field: network, loss, sampler, optimizer, checkpoints.
//!
//! Training regresses `v(a_t, t, o)` onto `ε - a` along the straight path
//! `a_t = (1 - t) a + t ε`; sampling integrates the field from `t = 1` (noise)
//! back to `t = 0` with explicit Euler steps.

mod adam;
mod checkpoint;
mod loss;
mod net;
mod sampler;

use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use checkpoint::{load_checkpoint, load_policy, save_checkpoint, save_policy, Checkpoint, CHECKPOINT_VERSION};
pub use loss::{draw_noise, fm_loss_and_grad, fm_loss_and_grad_with, FmBatch, FmNoise};
pub use net::{Activation, VelocityField};
pub use sampler::{euler_integrate, euler_sample, sample_timestep, standard_normal};

/// Sampling and timestep-distribution settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerCfg {
    /// Euler integration steps.
    pub steps: usize,
    /// Beta distribution shape parameters for training timesteps.
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for SamplerCfg {
    fn default() -> Self {
        Self { steps: 5, alpha: 1.5, beta: 1.0, seed: 0 }
    }
}

impl SamplerCfg {
    pub fn validate(&self) -> crate::Result<()> {
        if self.steps >= 1 && self.alpha > 0.0 && self.beta > 0.0 {
            Ok(())
        } else {
            Err(crate::Error::Config("sampler needs steps >= 1 and positive Beta shapes".into()))
        }
    }
}
