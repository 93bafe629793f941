//! Torque-controlled planar arm at 50 Hz.
//!
//! Each control step maps a unitless action per joint through the PD law to a
//! torque command, clips it against the actuator's torque–speed envelope,
//! subtracts friction, adds a random disturbance and integrates the rigid
//! chain. Observations, rewards and termination follow the tracking setup.

mod config;
pub mod dynamics;
mod expert;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::actuation::{
    clip_torque, envelope_limit, joint_power, neg_power_penalty, pd_gains, pd_torque, torque_ceiling, ActuatorParams,
    PDGains,
};
use crate::error::{Error, Result};
use crate::metrics::{check_termination, TerminationThresholds, TrackingErrors};
use crate::motion::planar::PlanarArm;
use crate::motion::MotionClip;

pub use config::{EnvConfig, LinkCfg, RandomizationCfg};
pub use dynamics::ChainModel;
pub use expert::ExpertPolicy;

/// Randomization and termination regime of an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Base,
    /// Randomization ranges scaled up and termination thresholds relaxed.
    Aggressive,
}

/// Per-joint actuation log of the last physics substep of a control step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepInfo {
    /// Joint velocity the envelope was evaluated at.
    pub qdot_pre: Vec<f64>,
    pub tau_cmd: Vec<f64>,
    pub tau_clipped: Vec<f64>,
    pub envelope_limit: Vec<f64>,
    pub friction: Vec<f64>,
    pub tau_applied: Vec<f64>,
    pub disturbance: Vec<f64>,
    /// `tau_applied * qdot` after the step (W).
    pub power: Vec<f64>,
    pub power_cost: f64,
    pub tracking_reward: f64,
    pub errors: TrackingErrors<f64>,
    pub terminated: bool,
    pub timed_out: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// Reference joint trajectory with precomputed velocities.
#[derive(Debug, Clone)]
struct Reference {
    q: Vec<Vec<f64>>,
    qdot: Vec<Vec<f64>>,
}

impl Reference {
    fn frame(&self, k: usize) -> usize {
        k.min(self.q.len() - 1)
    }
}

/// Planar arm tracking a reference motion.
#[derive(Debug, Clone)]
pub struct ArmEnv {
    cfg: EnvConfig,
    arm: PlanarArm,
    nominal_actuators: Vec<ActuatorParams<f64>>,
    nominal_gains: Vec<PDGains<f64>>,
    // per-episode physical parameters
    model: ChainModel,
    actuators: Vec<ActuatorParams<f64>>,
    gains: Vec<PDGains<f64>>,
    reference: Option<Reference>,
    q: Vec<f64>,
    qdot: Vec<f64>,
    prev_action: Vec<f64>,
    history: VecDeque<Vec<f64>>,
    steps: usize,
    mode: Mode,
    done: bool,
    rng: ChaCha8Rng,
}

impl ArmEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let catalog = cfg.catalog()?;
        let n = cfg.links.len();
        let lengths: Vec<f64> = cfg.links.iter().map(|l| l.length).collect();
        let mut nominal_actuators = Vec::with_capacity(n);
        let mut nominal_gains = Vec::with_capacity(n);
        for link in &cfg.links {
            let p = catalog.get(&link.actuator)?;
            nominal_gains.push(pd_gains(&p, cfg.pd_freq_hz, cfg.pd_damping, None, 0.0)?);
            nominal_actuators.push(p.with_envelope_scale(cfg.envelope_scale));
        }
        let model = ChainModel {
            masses: cfg.links.iter().map(|l| l.mass).collect(),
            lengths: lengths.clone(),
            armature: nominal_actuators.iter().map(|p| p.armature).collect(),
            gravity: cfg.gravity,
        };
        Ok(Self {
            arm: PlanarArm::hanging(lengths),
            actuators: nominal_actuators.clone(),
            gains: nominal_gains.clone(),
            nominal_actuators,
            nominal_gains,
            model,
            reference: None,
            q: vec![0.0; n],
            qdot: vec![0.0; n],
            prev_action: vec![0.0; n],
            history: VecDeque::new(),
            steps: 0,
            mode: Mode::Base,
            done: true,
            rng: ChaCha8Rng::seed_from_u64(0),
            cfg,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn n_joints(&self) -> usize {
        self.cfg.links.len()
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt
    }

    pub fn episode_len(&self) -> usize {
        self.cfg.episode_len
    }

    pub fn arm(&self) -> &PlanarArm {
        &self.arm
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn qdot(&self) -> &[f64] {
        &self.qdot
    }

    pub fn prev_action(&self) -> &[f64] {
        &self.prev_action
    }

    /// Control steps taken in the current episode.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Gains as known to policies (nominal default position).
    pub fn nominal_gains(&self) -> &[PDGains<f64>] {
        &self.nominal_gains
    }

    pub fn nominal_actuators(&self) -> &[ActuatorParams<f64>] {
        &self.nominal_actuators
    }

    /// Actuators in effect for this episode (after friction randomization).
    pub fn actuators(&self) -> &[ActuatorParams<f64>] {
        &self.actuators
    }

    pub fn model(&self) -> &ChainModel {
        &self.model
    }

    /// Nominal-model gravity torques at `q`.
    pub fn nominal_gravity_torques(&self, q: &[f64]) -> Vec<f64> {
        let nominal = ChainModel { masses: self.cfg.links.iter().map(|l| l.mass).collect(), ..self.model.clone() };
        nominal.gravity_torques(q)
    }

    pub fn thresholds(&self) -> &TerminationThresholds<f64> {
        &self.cfg.thresholds
    }

    pub fn set_thresholds(&mut self, thr: TerminationThresholds<f64>) {
        self.cfg.thresholds = thr;
    }

    /// Observation length: `3N` proprioception, `2N + 2` command, `3N·H` history.
    pub fn obs_dim(&self) -> usize {
        let n = self.n_joints();
        3 * n + (2 * n + 2) + 3 * n * self.cfg.history_len
    }

    fn reference(&self) -> Result<&Reference> {
        self.reference.as_ref().ok_or_else(|| Error::Config("environment has not been reset".into()))
    }

    /// Reference pose and velocity at control step `k`, clamped to the last frame.
    pub fn reference_at(&self, k: usize) -> Result<(&[f64], &[f64])> {
        let r = self.reference()?;
        let f = r.frame(k);
        Ok((&r.q[f], &r.qdot[f]))
    }

    /// Starts an episode on `motion`. The seed fixes every random draw of the
    /// episode: initial pose noise, physical parameters and disturbances.
    pub fn reset(&mut self, motion: &MotionClip, seed: u64, mode: Mode) -> Result<Vec<f64>> {
        let n = self.n_joints();
        if motion.n_joints() != n {
            return Err(Error::arg(format!("motion has {} joints, arm has {n}", motion.n_joints())));
        }
        let ref_q = motion.q().to_vec();
        let ref_qd = motion.joint_velocities();
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.mode = mode;
        let r = self.cfg.randomization.scaled(mode);
        let sym = |rng: &mut ChaCha8Rng, half: f64| if half > 0.0 { rng.random_range(-half..=half) } else { 0.0 };

        let masses = self.cfg.links.iter().map(|l| l.mass * (1.0 + sym(&mut self.rng, r.mass_scale))).collect();
        self.actuators = self
            .nominal_actuators
            .iter()
            .map(|p| p.with_friction_scale(1.0 + sym(&mut self.rng, r.friction_scale)))
            .collect();
        self.gains = self
            .nominal_gains
            .iter()
            .map(|g| PDGains { q0: g.q0 + sym(&mut self.rng, r.default_offset), ..*g })
            .collect();
        self.model = ChainModel { masses, ..self.model.clone() };
        self.q = ref_q[0].iter().map(|&x| x + sym(&mut self.rng, r.pose_noise)).collect();
        self.qdot = ref_qd[0].clone();
        self.prev_action = vec![0.0; n];
        self.reference = Some(Reference { q: ref_q, qdot: ref_qd });
        self.steps = 0;
        self.done = false;
        self.history.clear();
        self.history.push_front(self.proprio());
        Ok(self.build_observation())
    }

    fn proprio(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(3 * self.n_joints());
        p.extend(self.q.iter().zip(&self.nominal_gains).map(|(q, g)| q - g.q0));
        p.extend_from_slice(&self.qdot);
        p.extend_from_slice(&self.prev_action);
        p
    }

    /// Wrapped difference between the reference and actual absolute angle of
    /// the last link; stands in for a torso orientation error.
    fn orientation_error(&self, ref_q: &[f64]) -> f64 {
        let d = ref_q.iter().sum::<f64>() - self.q.iter().sum::<f64>();
        d.sin().atan2(d.cos())
    }

    /// `[q - q0, qdot, a_prev | q_ref, qdot_ref, sin e, cos e | history]`
    /// where the command targets the next control step and the history holds
    /// the latest `H` proprioceptive vectors (newest first, current included),
    /// zero-padded until `H` exist.
    pub fn build_observation(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.obs_dim());
        obs.extend(self.proprio());
        if let Some(r) = &self.reference {
            let f = r.frame(self.steps + 1);
            obs.extend_from_slice(&r.q[f]);
            obs.extend_from_slice(&r.qdot[f]);
            let e = self.orientation_error(&r.q[f]);
            obs.push(e.sin());
            obs.push(e.cos());
        } else {
            obs.extend(std::iter::repeat_n(0.0, 2 * self.n_joints() + 2));
        }
        let width = 3 * self.n_joints();
        for k in 0..self.cfg.history_len {
            match self.history.get(k) {
                Some(p) => obs.extend_from_slice(p),
                None => obs.extend(std::iter::repeat_n(0.0, width)),
            }
        }
        obs
    }

    /// Tracking errors of an arbitrary configuration against a reference pose:
    /// vertical error of every link endpoint and the last-link angle error.
    pub fn tracking_errors(&self, q: &[f64], ref_q: &[f64]) -> TrackingErrors<f64> {
        let body = self.arm.endpoints(q);
        let body_ref = self.arm.endpoints(ref_q);
        let d = ref_q.iter().sum::<f64>() - q.iter().sum::<f64>();
        TrackingErrors {
            body_z_errors: body.iter().zip(&body_ref).map(|(a, b)| (b[2] - a[2]).abs()).collect(),
            gravity_error: d.sin().atan2(d.cos()).abs(),
        }
    }

    /// Advances one control step.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Config("step called on a finished episode; reset first".into()));
        }
        let n = self.n_joints();
        if action.len() != n {
            return Err(Error::dim(format!("action has {} entries, arm has {n} joints", action.len())));
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::arg("non-finite action"));
        }
        let r = self.cfg.randomization.scaled(self.mode);
        let disturbance: Vec<f64> = (0..n)
            .map(|_| if r.disturbance > 0.0 { self.rng.random_range(-r.disturbance..=r.disturbance) } else { 0.0 })
            .collect();
        let h = self.cfg.dt / self.cfg.substeps as f64;
        let mut info = None;
        for _ in 0..self.cfg.substeps {
            let qdot_pre = self.qdot.clone();
            let tau_cmd: Vec<f64> =
                (0..n).map(|j| pd_torque(action[j], self.q[j], self.qdot[j], &self.gains[j])).collect();
            let tau_clipped: Vec<f64> =
                (0..n).map(|j| clip_torque(tau_cmd[j], qdot_pre[j], &self.actuators[j])).collect();
            let limit: Vec<f64> = (0..n)
                .map(|j| {
                    let p = &self.actuators[j];
                    envelope_limit(qdot_pre[j], torque_ceiling(qdot_pre[j], tau_cmd[j], p), p)
                })
                .collect();
            let drive: Vec<f64> = tau_clipped.iter().zip(&disturbance).map(|(a, b)| a + b).collect();
            let friction = match self.model.step(&mut self.q, &mut self.qdot, &drive, &self.actuators, h) {
                Ok(f) => f,
                Err(e) => {
                    self.done = true;
                    return Err(e);
                }
            };
            let tau_applied: Vec<f64> = tau_clipped.iter().zip(&friction).map(|(c, f)| c - f).collect();
            info = Some((qdot_pre, tau_cmd, tau_clipped, limit, friction, tau_applied));
        }
        let (qdot_pre, tau_cmd, tau_clipped, envelope_limit, friction, tau_applied) =
            info.expect("at least one substep");

        self.steps += 1;
        self.prev_action = action.to_vec();
        self.history.push_front(self.proprio());
        self.history.truncate(self.cfg.history_len.max(1));

        let (ref_q, _) = self.reference_at(self.steps)?;
        let ref_q = ref_q.to_vec();
        let errors = self.tracking_errors(&self.q, &ref_q);
        let terminated = check_termination(&errors, &self.cfg.thresholds, self.mode == Mode::Aggressive);
        let timed_out = !terminated && self.steps >= self.cfg.episode_len;
        self.done = terminated || timed_out;

        let power: Vec<f64> = tau_applied.iter().zip(&self.qdot).map(|(&t, &w)| joint_power(t, w)).collect();
        let (power_cost, power_reward) = neg_power_penalty(&power, &self.cfg.power_penalty);
        let tracking_reward =
            -self.cfg.tracking_weight * ref_q.iter().zip(&self.q).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;

        Ok(StepOutcome {
            obs: self.build_observation(),
            reward: tracking_reward + power_reward,
            done: self.done,
            info: StepInfo {
                qdot_pre,
                tau_cmd,
                tau_clipped,
                envelope_limit,
                friction,
                tau_applied,
                disturbance,
                power,
                power_cost,
                tracking_reward,
                errors,
                terminated,
                timed_out,
            },
        })
    }

    /// Total mechanical energy of the arm under the episode's masses.
    pub fn energy(&self) -> f64 {
        self.model.energy(&self.q, &self.qdot)
    }

    /// Overrides the joint state, e.g. to start from a chosen configuration.
    pub fn set_state(&mut self, q: &[f64], qdot: &[f64]) -> Result<()> {
        if q.len() != self.n_joints() || qdot.len() != self.n_joints() {
            return Err(Error::dim("state size does not match the arm"));
        }
        self.q = q.to_vec();
        self.qdot = qdot.to_vec();
        Ok(())
    }
}

#[cfg(test)]
mod tests;
