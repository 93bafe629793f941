//! Distillation of per-motion experts into one flow-matching policy, residual
//! refinement under actuation constraints, and closed-loop evaluation.

mod dagger;
mod es;
mod eval;
mod residual;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{ArmEnv, ExpertPolicy};
use crate::error::{Error, Result};
use crate::flow::{euler_sample, VelocityField};

pub use dagger::{dagger_train, DistillCfg, DistillReport, IterationHook, Record, ReplayBuffer};
pub use es::{es_refine, fitness, EsCfg, EsReport};
pub use eval::{
    episode_metrics, evaluate_policy, rollout, EpisodeLog, EvalCfg, EvalReport, MotionEval,
};
pub use residual::{load_residual, residual_compose, save_residual, ResidualPolicy, RESIDUAL_VERSION};

/// Closed-loop controller acting on an [`ArmEnv`].
pub trait Policy {
    /// Called before every episode with that episode's seed.
    fn begin_episode(&mut self, _seed: u64) {}
    fn act(&mut self, env: &ArmEnv, obs: &[f64]) -> Result<Vec<f64>>;
}

impl Policy for ExpertPolicy {
    fn act(&mut self, env: &ArmEnv, _obs: &[f64]) -> Result<Vec<f64>> {
        self.action(env)
    }
}

/// Samples actions from a velocity field with a fresh Gaussian draw per step;
/// the noise stream is reseeded from every episode seed.
#[derive(Debug, Clone)]
pub struct FlowPolicy<'a> {
    net: &'a VelocityField<f64>,
    steps: usize,
    rng: ChaCha8Rng,
}

impl<'a> FlowPolicy<'a> {
    pub fn new(net: &'a VelocityField<f64>, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::arg("flow policy needs at least one Euler step"));
        }
        Ok(Self { net, steps, rng: ChaCha8Rng::seed_from_u64(0) })
    }

    pub fn net(&self) -> &VelocityField<f64> {
        self.net
    }
}

impl Policy for FlowPolicy<'_> {
    fn begin_episode(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(mix(seed, 0x5eed_f10e));
    }

    fn act(&mut self, _env: &ArmEnv, obs: &[f64]) -> Result<Vec<f64>> {
        euler_sample(self.net, obs, self.steps, &mut self.rng)
    }
}

/// Frozen flow policy plus a residual correction, `a = a_flow + a_res`.
#[derive(Debug, Clone)]
pub struct ResidualStack<'a> {
    pub base: FlowPolicy<'a>,
    pub residual: &'a ResidualPolicy,
}

impl Policy for ResidualStack<'_> {
    fn begin_episode(&mut self, seed: u64) {
        self.base.begin_episode(seed);
    }

    fn act(&mut self, env: &ArmEnv, obs: &[f64]) -> Result<Vec<f64>> {
        let a_flow = self.base.act(env, obs)?;
        let a_res = self.residual.action(obs, &a_flow, env.n_joints())?;
        residual_compose(&a_flow, &a_res, self.residual.bound())
    }
}

/// Outputs a fixed action; useful as a do-nothing baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPolicy(pub Vec<f64>);

impl Policy for ConstantPolicy {
    fn act(&mut self, _env: &ArmEnv, _obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.clone())
    }
}

/// Derives an independent seed from a parent seed and a stream index
/// (SplitMix64 finalizer).
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e019);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests;
