//! Actuator physics: PD law, torque–speed envelope, friction losses, power.
//!
//! A joint command flows through [`pd_torque`], then [`clip_torque`] against
//! the velocity-dependent envelope, then [`friction_torque`] is subtracted.

mod catalog;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use catalog::ActuatorCatalog;

/// One actuator's torque–speed envelope, friction and armature constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActuatorParams<T> {
    /// Torque ceiling while motoring (torque and velocity aligned), N·m.
    pub tau_y1: T,
    /// Torque ceiling while braking, N·m.
    pub tau_y2: T,
    /// Speed where the envelope starts to fall, rad/s.
    pub v_x1: T,
    /// Speed where the envelope reaches zero, rad/s.
    pub v_x2: T,
    /// Coulomb friction magnitude, N·m.
    pub mu_s: T,
    /// Activation speed of the tanh-smoothed Coulomb term, rad/s.
    pub v_act: T,
    /// Viscous coefficient, N·m·s/rad.
    pub mu_d: T,
    /// Reflected rotor inertia, kg·m².
    pub armature: T,
}

impl<T: Real> ActuatorParams<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let ok = self.v_x1 > z
            && self.v_x1 < self.v_x2
            && self.tau_y1 > z
            && self.tau_y2 > z
            && self.mu_s >= z
            && self.mu_d >= z
            && self.v_act > z
            && self.armature > z;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("inconsistent actuator parameters {self:?}")))
        }
    }

    /// Same actuator with both torque ceilings multiplied by `k`.
    pub fn with_envelope_scale(mut self, k: T) -> Self {
        self.tau_y1 *= k;
        self.tau_y2 *= k;
        self
    }

    /// Same actuator with both friction coefficients multiplied by `k`.
    pub fn with_friction_scale(mut self, k: T) -> Self {
        self.mu_s *= k;
        self.mu_d *= k;
        self
    }

    /// Converts between precisions.
    pub fn cast<U: Real>(&self) -> ActuatorParams<U> {
        let c = |x: T| U::lit(x.as_f64());
        ActuatorParams {
            tau_y1: c(self.tau_y1),
            tau_y2: c(self.tau_y2),
            v_x1: c(self.v_x1),
            v_x2: c(self.v_x2),
            mu_s: c(self.mu_s),
            v_act: c(self.v_act),
            mu_d: c(self.mu_d),
            armature: c(self.armature),
        }
    }
}

/// Joint-level PD gains and action mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PDGains<T> {
    pub kp: T,
    pub kd: T,
    /// Radians of target offset per unit action.
    pub action_scale: T,
    /// Default joint position.
    pub q0: T,
}

/// Gains from a natural frequency `f_hz` and damping ratio `zeta`:
/// `kp = I ω²`, `kd = 2 I ζ ω`, `α = 0.25 τ_max / kp`, with `ω = 2π f_hz`.
/// `tau_max = None` uses the actuator's motoring ceiling.
pub fn pd_gains<T: Real>(p: &ActuatorParams<T>, f_hz: T, zeta: T, tau_max: Option<T>, q0: T) -> Result<PDGains<T>> {
    if !(f_hz > T::zero()) || !(zeta > T::zero()) {
        return Err(Error::arg("natural frequency and damping ratio must be positive"));
    }
    let tau_max = tau_max.unwrap_or(p.tau_y1);
    if !(tau_max > T::zero()) {
        return Err(Error::arg(format!("tau_max must be positive, got {tau_max}")));
    }
    let omega = T::lit(2.0) * T::PI() * f_hz;
    let kp = p.armature * omega * omega;
    let kd = T::lit(2.0) * p.armature * zeta * omega;
    Ok(PDGains { kp, kd, action_scale: T::lit(0.25) * tau_max / kp, q0 })
}

/// Position target `q0 + α·action`.
#[inline]
pub fn pd_target<T: Real>(action: T, g: &PDGains<T>) -> T {
    g.q0 + g.action_scale * action
}

/// `kp (q_target - q) - kd qdot`.
#[inline]
pub fn pd_torque<T: Real>(action: T, q: T, qdot: T, g: &PDGains<T>) -> T {
    g.kp * (pd_target(action, g) - q) - g.kd * qdot
}

/// Stall ceiling: `tau_y1` when velocity and torque point the same way,
/// `tau_y2` otherwise (including when either is zero).
#[inline]
pub fn torque_ceiling<T: Real>(v: T, tau_in: T, p: &ActuatorParams<T>) -> T {
    if v * tau_in > T::zero() {
        p.tau_y1
    } else {
        p.tau_y2
    }
}

/// Magnitude limit of the envelope at speed `|v|` for a given stall ceiling.
#[inline]
pub fn envelope_limit<T: Real>(v: T, ceiling: T, p: &ActuatorParams<T>) -> T {
    let s = v.abs();
    if s < p.v_x1 {
        ceiling
    } else if s <= p.v_x2 {
        ceiling * (T::one() - (s - p.v_x1) / (p.v_x2 - p.v_x1))
    } else {
        T::zero()
    }
}

/// Clamps a commanded torque into `[-L, L]`, where `L` is the envelope limit
/// for the command's motoring/braking branch at speed `v`.
#[inline]
pub fn clip_torque<T: Real>(tau_cmd: T, v: T, p: &ActuatorParams<T>) -> T {
    let limit = envelope_limit(v, torque_ceiling(v, tau_cmd, p), p);
    tau_cmd.max(-limit).min(limit)
}

/// Internal loss `μ_s tanh(v / v_act) + μ_d v`.
#[inline]
pub fn friction_torque<T: Real>(v: T, p: &ActuatorParams<T>) -> T {
    p.mu_s * (v / p.v_act).tanh() + p.mu_d * v
}

/// d(friction)/dv, used by implicit integrators.
#[inline]
pub fn friction_slope<T: Real>(v: T, p: &ActuatorParams<T>) -> T {
    let th = (v / p.v_act).tanh();
    p.mu_s * (T::one() - th * th) / p.v_act + p.mu_d
}

/// Torque reaching the joint: clipped command minus friction.
#[inline]
pub fn actuate<T: Real>(tau_cmd: T, v: T, p: &ActuatorParams<T>) -> T {
    clip_torque(tau_cmd, v, p) - friction_torque(v, p)
}

#[inline]
pub fn joint_power<T: Real>(tau: T, omega: T) -> T {
    tau * omega
}

/// Penalty on regenerative braking beyond a deadband.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerPenaltyCfg {
    /// W.
    pub deadband: f64,
    pub norm: f64,
    pub weight: f64,
    /// Joints the penalty applies to. `None` means every joint.
    pub joints: Option<Vec<usize>>,
}

impl Default for PowerPenaltyCfg {
    fn default() -> Self {
        Self { deadband: 150.0, norm: 500.0, weight: -10.0, joints: None }
    }
}

impl PowerPenaltyCfg {
    pub fn validate(&self) -> Result<()> {
        if self.deadband >= 0.0 && self.norm > 0.0 {
            Ok(())
        } else {
            Err(Error::Config("power penalty needs deadband >= 0 and norm > 0".into()))
        }
    }
}

/// `cost = Σ_j (max(-P_j - P_db, 0) / K)²` over the selected joints and
/// `reward = w · cost`.
pub fn neg_power_penalty<T: Real>(powers: &[T], cfg: &PowerPenaltyCfg) -> (T, T) {
    let db = T::lit(cfg.deadband);
    let k = T::lit(cfg.norm);
    let term = |p: T| {
        let excess = (-p - db).max(T::zero()) / k;
        excess * excess
    };
    let cost: T = match &cfg.joints {
        Some(sel) => sel.iter().filter_map(|&j| powers.get(j)).map(|&p| term(p)).sum(),
        None => powers.iter().map(|&p| term(p)).sum(),
    };
    (cost, T::lit(cfg.weight) * cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big() -> ActuatorParams<f64> {
        ActuatorCatalog::builtin().get("7520-22.5").unwrap()
    }

    fn small() -> ActuatorParams<f64> {
        ActuatorCatalog::builtin().get("5020-16").unwrap()
    }

    #[test]
    fn gains_match_hand_values() {
        let g = pd_gains(&big(), 10.0, 2.0, None, 0.0).unwrap();
        assert!((g.kp - 99.0914).abs() < 1e-3, "{}", g.kp);
        assert!((g.kd - 6.30831).abs() < 1e-4, "{}", g.kd);
        let g = pd_gains(&small(), 10.0, 2.0, None, 0.0).unwrap();
        assert!((g.kp - 14.2517).abs() < 1e-3);
        assert!((g.kd - 0.907291).abs() < 1e-5);
        assert!(pd_gains(&big(), 10.0, 2.0, Some(0.0), 0.0).is_err());
    }

    #[test]
    fn gains_scale_with_armature() {
        let p = big();
        let mut p2 = p;
        p2.armature *= 2.0;
        let (a, b) = (pd_gains(&p, 10.0, 2.0, None, 0.0).unwrap(), pd_gains(&p2, 10.0, 2.0, None, 0.0).unwrap());
        assert!((b.kp - 2.0 * a.kp).abs() < 1e-12);
        assert!((b.kd - 2.0 * a.kd).abs() < 1e-12);
    }

    #[test]
    fn pd_law() {
        let g = pd_gains(&big(), 10.0, 2.0, None, 0.3).unwrap();
        assert_eq!(pd_torque(0.0, 0.3, 0.0, &g), 0.0);
        assert!((pd_torque(1.0, 0.3, 0.0, &g) - 0.25 * 111.0).abs() < 1e-12);
        let q_tar = pd_target(0.5, &g);
        assert!((pd_torque(0.5, q_tar, 2.0, &g) + 2.0 * g.kd).abs() < 1e-12);
    }

    #[test]
    fn ceiling_branches() {
        let p = big();
        assert_eq!(torque_ceiling(5.0, 10.0, &p), 111.0);
        assert_eq!(torque_ceiling(5.0, -10.0, &p), 131.0);
        assert_eq!(torque_ceiling(0.0, 10.0, &p), 131.0);
    }

    #[test]
    fn clip_cases() {
        assert!((clip_torque(200.0, 18.6, &big()) - 111.0 * (1.0 - 4.1 / 8.2)).abs() < 1e-12);
        assert!((clip_torque(200.0, 18.6, &big()) - 55.5).abs() < 1e-9);
        let l = clip_torque(100.0, 35.5, &small());
        assert!((l - 24.8 * (1.0 - 4.64 / 9.27)).abs() < 1e-12);
        assert!((l - 12.39).abs() < 5e-3);
        assert_eq!(clip_torque(500.0, 30.0, &big()), 0.0);
        assert_eq!(clip_torque(-500.0, -30.0, &big()), 0.0);
        // braking command at speed uses the braking ceiling
        assert!((clip_torque(-500.0, 18.6, &big()) + 65.5).abs() < 1e-9);
    }

    #[test]
    fn friction_cases() {
        let p = big();
        assert_eq!(friction_torque(0.0, &p), 0.0);
        assert!((friction_torque(1.0, &p) - 2.64).abs() < 1e-12);
        assert_eq!(friction_torque(-0.7, &p), -friction_torque(0.7, &p));
        assert!((actuate(0.0, 2.0, &p) + 2.88).abs() < 1e-12);
        assert_eq!(actuate(50.0, 0.0, &p), 50.0);
    }

    #[test]
    fn power_and_penalty() {
        assert_eq!(joint_power(0.0, 3.0), 0.0);
        assert_eq!(joint_power(-200.0, 2.0), -400.0);
        assert!(joint_power(3.0, 2.0) > 0.0);
        let cfg = PowerPenaltyCfg::default();
        assert_eq!(neg_power_penalty(&[-400.0], &cfg), (0.25, -2.5));
        assert_eq!(neg_power_penalty(&[-150.0], &cfg), (0.0, 0.0));
        assert_eq!(neg_power_penalty(&[1000.0], &cfg), (0.0, 0.0));
        let knees = PowerPenaltyCfg { joints: Some(vec![1]), ..cfg };
        assert_eq!(neg_power_penalty(&[-400.0, 0.0], &knees).0, 0.0);
    }

    #[test]
    fn single_precision_envelope() {
        let p: ActuatorParams<f32> = big().cast();
        assert!((clip_torque(200.0f32, 18.6, &p) - 55.5).abs() < 1e-4);
    }

    #[test]
    fn envelope_is_continuous_at_knees() {
        for p in ActuatorCatalog::builtin().iter().map(|(_, p)| p) {
            for c in [p.tau_y1, p.tau_y2] {
                let below = envelope_limit(p.v_x1 - 1e-13, c, &p);
                let at = envelope_limit(p.v_x1, c, &p);
                assert!((below - at).abs() < 1e-12);
                assert!(envelope_limit(p.v_x2, c, &p).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn clip_within_limit(tau in -500.0..500.0f64, v in -50.0..50.0f64) {
            let p = big();
            let limit = envelope_limit(v, torque_ceiling(v, tau, &p), &p);
            let c = clip_torque(tau, v, &p);
            prop_assert!(c.abs() <= limit);
            prop_assert!((actuate(tau, v, &p)).abs() <= limit + friction_torque(v, &p).abs() + 1e-12);
        }

        #[test]
        fn friction_odd_and_increasing(v in -30.0..30.0f64, dv in 1e-6..5.0f64) {
            let p = small();
            prop_assert_eq!(friction_torque(-v, &p), -friction_torque(v, &p));
            prop_assert!(friction_torque(v + dv, &p) > friction_torque(v, &p));
        }

        #[test]
        fn penalty_shape(p in -5000.0..5000.0f64, dp in 1e-3..100.0f64) {
            let cfg = PowerPenaltyCfg::default();
            let (c, _) = neg_power_penalty(&[p], &cfg);
            if p >= -cfg.deadband {
                prop_assert_eq!(c, 0.0);
            } else {
                prop_assert!(neg_power_penalty(&[p - dp], &cfg).0 > c);
            }
        }

        #[test]
        fn pd_is_affine(a in -3.0..3.0f64, q in -2.0..2.0f64, qd in -10.0..10.0f64) {
            let g = pd_gains(&big(), 10.0, 2.0, None, 0.1).unwrap();
            let base = pd_torque(0.0, 0.0, 0.0, &g);
            let expect = base + g.kp * g.action_scale * a - g.kp * q - g.kd * qd;
            prop_assert!((pd_torque(a, q, qd, &g) - expect).abs() < 1e-9);
        }
    }
}
