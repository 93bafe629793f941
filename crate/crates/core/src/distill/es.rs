use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mix, rollout, FlowPolicy, ResidualPolicy, ResidualStack};
use crate::env::{ArmEnv, Mode};
use crate::error::{Error, Result};
use crate::flow::{standard_normal, VelocityField};
use crate::motion::MotionClip;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsCfg {
    pub generations: usize,
    /// Offspring per generation (λ).
    pub population: usize,
    pub sigma: f64,
    /// Seeded episodes behind every fitness value.
    pub episodes: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Subtracted from the return of an episode that ends before time-out.
    pub termination_penalty: f64,
    pub sampler_steps: usize,
}

impl Default for EsCfg {
    fn default() -> Self {
        Self {
            generations: 30,
            population: 8,
            sigma: 0.02,
            episodes: 10,
            seed: 0,
            mode: Mode::Aggressive,
            termination_penalty: 10.0,
            sampler_steps: 5,
        }
    }
}

impl EsCfg {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma >= 0.0
            && self.sigma.is_finite()
            && self.episodes > 0
            && self.sampler_steps > 0
            && self.termination_penalty >= 0.0;
        if !ok {
            return Err(Error::Config("refinement needs sigma >= 0, episodes > 0 and sampler_steps > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsReport {
    pub residual: ResidualPolicy,
    /// Fitness of the starting residual.
    pub initial_reward: f64,
    /// Best fitness after each generation.
    pub best_history: Vec<f64>,
}

/// Mean penalized episode return of base + residual over the fixed
/// evaluation episodes of `cfg`.
pub fn fitness(
    base: &VelocityField<f64>,
    residual: &ResidualPolicy,
    env: &mut ArmEnv,
    motions: &[MotionClip],
    cfg: &EsCfg,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..cfg.episodes {
        let mut policy = ResidualStack { base: FlowPolicy::new(base, cfg.sampler_steps)?, residual };
        let seed = mix(cfg.seed, 0xe5_0000 + i as u64);
        let log = rollout(&mut policy, env, &motions[i % motions.len()], seed, cfg.mode)?;
        total += log.total_reward() - if log.terminated { cfg.termination_penalty } else { 0.0 };
    }
    Ok(total / cfg.episodes as f64)
}

/// (1+λ) elitist evolution strategy over the residual parameters with the
/// base network frozen. Every candidate is scored on the same seeded
/// episodes, so the parent's score is exact and the best-so-far curve never
/// decreases.
pub fn es_refine(
    base: &VelocityField<f64>,
    residual: ResidualPolicy,
    env: &mut ArmEnv,
    motions: &[MotionClip],
    cfg: &EsCfg,
) -> Result<EsReport> {
    cfg.validate()?;
    if motions.is_empty() {
        return Err(Error::Config("refinement needs at least one motion".into()));
    }
    if base.action_dim() != env.n_joints() || base.obs_dim() != env.obs_dim() || residual.n_joints() != env.n_joints() {
        return Err(Error::Config("policy dimensions do not match the environment".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0xe5));
    let mut parent = residual;
    let mut parent_fit = fitness(base, &parent, env, motions, cfg)?;
    let initial_reward = parent_fit;
    let mut best_history = Vec::with_capacity(cfg.generations);
    for _ in 0..cfg.generations {
        let mut best: Option<(f64, ResidualPolicy)> = None;
        for _ in 0..cfg.population {
            let mut child = parent.clone();
            for p in child.params_mut() {
                *p += cfg.sigma * standard_normal::<f64, _>(&mut rng);
            }
            let f = fitness(base, &child, env, motions, cfg)?;
            if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
                best = Some((f, child));
            }
        }
        if let Some((f, child)) = best {
            if f > parent_fit {
                parent = child;
                parent_fit = f;
            }
        }
        best_history.push(parent_fit);
    }
    Ok(EsReport { residual: parent, initial_reward, best_history })
}
