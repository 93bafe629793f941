use serde::{Deserialize, Serialize};

use super::ArmEnv;
use crate::error::Result;

/// Privileged PD tracker for one reference motion.
///
/// The action places the PD target on the reference pose `lookahead` steps
/// ahead, adds a velocity feedforward through the damping term and cancels
/// nominal gravity, then clips to `±action_clip`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertPolicy {
    pub lookahead: usize,
    /// Gain on the reference-velocity feedforward.
    pub velocity_ff: f64,
    pub gravity_comp: bool,
    pub action_clip: f64,
}

impl Default for ExpertPolicy {
    fn default() -> Self {
        Self { lookahead: 1, velocity_ff: 1.0, gravity_comp: true, action_clip: 10.0 }
    }
}

impl ExpertPolicy {
    /// Action for the environment's current state and reference.
    pub fn action(&self, env: &ArmEnv) -> Result<Vec<f64>> {
        let target_step = env.steps() + self.lookahead;
        let (q_ref, qd_ref) = env.reference_at(target_step)?;
        let gravity = if self.gravity_comp { env.nominal_gravity_torques(env.q()) } else { vec![0.0; env.n_joints()] };
        Ok(env
            .nominal_gains()
            .iter()
            .enumerate()
            .map(|(j, g)| {
                let pos = (q_ref[j] - g.q0) / g.action_scale;
                let ff = (self.velocity_ff * g.kd * qd_ref[j] + gravity[j]) / (g.kp * g.action_scale);
                (pos + ff).clamp(-self.action_clip, self.action_clip)
            })
            .collect())
    }
}
