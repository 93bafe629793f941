use serde::{Deserialize, Serialize};

use super::{mix, Policy};
use crate::env::{ArmEnv, Mode};
use crate::error::{Error, Result};
use crate::metrics::{aggregate_episodes, delta_acc, delta_vel, mpjpe, EpisodeMetrics, TrackingErrors, TrackingMetrics};
use crate::motion::MotionClip;

/// Everything observed in one episode, one row per control step, logged after
/// the step against the reference frame the step aimed for.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub seed: u64,
    pub q: Vec<Vec<f64>>,
    pub qdot: Vec<Vec<f64>>,
    pub ref_q: Vec<Vec<f64>>,
    pub ref_qdot: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub errors: Vec<TrackingErrors<f64>>,
    pub terminated: bool,
    pub timed_out: bool,
}

impl EpisodeLog {
    pub fn steps(&self) -> usize {
        self.q.len()
    }

    /// Sum of step rewards.
    pub fn total_reward(&self) -> f64 {
        self.rewards.iter().sum()
    }

    /// Mean absolute joint error, averaged over joints then steps.
    pub fn joint_error(&self) -> f64 {
        if self.q.is_empty() {
            return 0.0;
        }
        let per_step = self.q.iter().zip(&self.ref_q).map(|(q, r)| {
            q.iter().zip(r).map(|(a, b)| (a - b).abs()).sum::<f64>() / q.len() as f64
        });
        per_step.sum::<f64>() / self.q.len() as f64
    }
}

/// Runs one episode of `policy` on `motion`.
pub fn rollout(policy: &mut dyn Policy, env: &mut ArmEnv, motion: &MotionClip, seed: u64, mode: Mode) -> Result<EpisodeLog> {
    let mut obs = env.reset(motion, seed, mode)?;
    policy.begin_episode(seed);
    let mut log = EpisodeLog {
        seed,
        q: Vec::new(),
        qdot: Vec::new(),
        ref_q: Vec::new(),
        ref_qdot: Vec::new(),
        rewards: Vec::new(),
        errors: Vec::new(),
        terminated: false,
        timed_out: false,
    };
    loop {
        let action = policy.act(env, &obs)?;
        let out = env.step(&action)?;
        let (rq, rqd) = env.reference_at(env.steps())?;
        log.q.push(env.q().to_vec());
        log.qdot.push(env.qdot().to_vec());
        log.ref_q.push(rq.to_vec());
        log.ref_qdot.push(rqd.to_vec());
        log.rewards.push(out.reward);
        log.errors.push(out.info.errors);
        if out.done {
            log.terminated = out.info.terminated;
            log.timed_out = out.info.timed_out;
            return Ok(log);
        }
        obs = out.obs;
    }
}

/// Body-level metrics of an episode, using link endpoints as bodies.
pub fn episode_metrics(env: &ArmEnv, log: &EpisodeLog) -> Result<EpisodeMetrics<f64>> {
    if log.steps() == 0 {
        return Err(Error::UndefinedMetric("empty episode".into()));
    }
    let arm = env.arm();
    let pos = |q: &[Vec<f64>]| q.iter().map(|r| arm.endpoints(r)).collect::<Vec<_>>();
    let vel = |q: &[Vec<f64>], qd: &[Vec<f64>]| {
        q.iter().zip(qd).map(|(a, b)| arm.endpoint_velocities(a, b)).collect::<Vec<_>>()
    };
    let ref_v = vel(&log.ref_q, &log.ref_qdot);
    let rob_v = vel(&log.q, &log.qdot);
    let dt = env.dt();
    Ok(EpisodeMetrics {
        mpjpe_mm: mpjpe(&pos(&log.ref_q), &pos(&log.q))?,
        dvel: delta_vel(&ref_v, &rob_v, dt)?,
        dacc: if log.steps() >= 2 { Some(delta_acc(&ref_v, &rob_v, dt, &[])?) } else { None },
        success: log.timed_out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalCfg {
    pub rollouts: usize,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for EvalCfg {
    fn default() -> Self {
        Self { rollouts: 10, seed: 0, mode: Mode::Base }
    }
}

/// Metrics of one motion, each averaged per episode first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionEval {
    pub metrics: TrackingMetrics<f64>,
    pub joint_error: f64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_motion: Vec<MotionEval>,
    /// Equal-weight mean over motions.
    pub overall: TrackingMetrics<f64>,
    pub joint_error: f64,
    pub mean_reward: f64,
}

/// Seeded closed-loop evaluation: `cfg.rollouts` episodes per motion,
/// metrics averaged within each episode, then over episodes, then over motions.
pub fn evaluate_policy(
    policy: &mut dyn Policy,
    env: &mut ArmEnv,
    motions: &[MotionClip],
    cfg: &EvalCfg,
) -> Result<EvalReport> {
    if motions.is_empty() || cfg.rollouts == 0 {
        return Err(Error::arg("evaluation needs at least one motion and one rollout"));
    }
    let mut per_motion = Vec::with_capacity(motions.len());
    for (m, motion) in motions.iter().enumerate() {
        let mut eps = Vec::with_capacity(cfg.rollouts);
        let mut joint = 0.0;
        let mut reward = 0.0;
        for r in 0..cfg.rollouts {
            let seed = mix(mix(cfg.seed, m as u64), r as u64);
            let log = rollout(policy, env, motion, seed, cfg.mode)?;
            eps.push(episode_metrics(env, &log)?);
            joint += log.joint_error();
            reward += log.total_reward();
        }
        let n = cfg.rollouts as f64;
        per_motion.push(MotionEval { metrics: aggregate_episodes(&eps)?, joint_error: joint / n, mean_reward: reward / n });
    }
    let k = per_motion.len() as f64;
    let sets: Vec<TrackingMetrics<f64>> = per_motion.iter().map(|p| p.metrics).collect();
    Ok(EvalReport {
        overall: TrackingMetrics::mean_of(&sets)?,
        joint_error: per_motion.iter().map(|p| p.joint_error).sum::<f64>() / k,
        mean_reward: per_motion.iter().map(|p| p.mean_reward).sum::<f64>() / k,
        per_motion,
    })
}
