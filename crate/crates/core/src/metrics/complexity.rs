use serde::Serialize;

use crate::error::{Error, Result};
use crate::motion::{finite_difference, MotionClip};
use crate::scalar::Real;

/// Default foot height above which a frame counts as airborne (m).
pub const DEFAULT_H_AIR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KinematicMaxima<T> {
    pub v_max: T,
    pub a_max: T,
    pub j_max: T,
}

/// Largest absolute first, second and third forward differences of a `T×J`
/// series. Needs at least four rows.
pub fn max_kinematics<T: Real>(q: &[Vec<T>], dt: T) -> Result<KinematicMaxima<T>> {
    if q.len() < 4 {
        return Err(Error::Size(format!("need at least 4 frames for jerk, got {}", q.len())));
    }
    let vel = finite_difference(q, dt)?;
    let acc = finite_difference(&vel, dt)?;
    let jerk = finite_difference(&acc, dt)?;
    let abs_max = |s: &[Vec<T>]| s.iter().flatten().fold(T::zero(), |m, &x| m.max(x.abs()));
    Ok(KinematicMaxima { v_max: abs_max(&vel), a_max: abs_max(&acc), j_max: abs_max(&jerk) })
}

/// Peak |d/dt z_com| where `z_com` is the mass-weighted mean body height.
/// `masses = None` weighs all bodies equally.
pub fn com_vertical_speed(clip: &MotionClip, masses: Option<&[f64]>) -> Result<f64> {
    let n = clip.n_bodies();
    let uniform;
    let w = match masses {
        Some(m) => {
            if m.len() != n {
                return Err(Error::dim(format!("{} masses for {n} bodies", m.len())));
            }
            m
        }
        None => {
            uniform = vec![1.0; n];
            &uniform
        }
    };
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::arg("total body mass must be positive"));
    }
    let z: Vec<Vec<f64>> = clip
        .body_pos()
        .iter()
        .map(|bodies| vec![bodies.iter().zip(w).map(|(p, m)| m * p[2]).sum::<f64>() / total])
        .collect();
    let zdot = finite_difference(&z, clip.dt())?;
    Ok(zdot.iter().map(|r| r[0].abs()).fold(0.0, f64::max))
}

/// Fraction of frames where every foot is above `h_air`.
pub fn airborne_ratio(clip: &MotionClip, h_air: f64) -> Result<f64> {
    let feet = clip.feet_indices();
    if feet.is_empty() {
        return Err(Error::arg("airborne ratio needs at least one foot index"));
    }
    let airborne = clip
        .body_pos()
        .iter()
        .filter(|bodies| feet.iter().map(|&b| bodies[b][2]).fold(f64::INFINITY, f64::min) > h_air)
        .count();
    Ok(airborne as f64 / clip.len() as f64)
}

/// Contact state changes per second: frames where any flag differs from the
/// previous frame, divided by `(T-1)·dt`.
pub fn contact_switch_freq<T: Real>(contacts: &[Vec<bool>], dt: T) -> Result<T> {
    let n = contacts.len();
    if n < 2 {
        return Err(Error::Size(format!("need at least 2 frames, got {n}")));
    }
    let flips = contacts.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(T::lit(flips as f64) / (T::lit((n - 1) as f64) * dt))
}

/// Raw complexity maxima of one motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RawComplexity<T> {
    pub v_max: T,
    pub a_max: T,
    pub j_max: T,
    pub ang_max: T,
    pub v_com_z_max: T,
    pub airborne: T,
    pub f_switch: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityScores<T> {
    pub raw: RawComplexity<T>,
    /// `[s_ang, s_v, s_a, s_com, s_air, s_sw]`, each in `[0, 1]`.
    pub scores: [T; 6],
}

/// Clamped linear difficulty scores `[s_ang, s_v, s_a, s_com, s_air, s_sw]`.
pub fn difficulty_scores<T: Real>(raw: &RawComplexity<T>) -> [T; 6] {
    let one = T::one();
    let zero = T::zero();
    let scale = |x: T, denom: f64| (x / T::lit(denom)).min(one).max(zero);
    [
        scale(raw.ang_max, 20.0),
        scale(raw.v_max, 20.0),
        scale(raw.a_max, 200.0),
        scale(raw.v_com_z_max, 2.0),
        raw.airborne.min(one).max(zero),
        scale(raw.f_switch, 10.0),
    ]
}

/// Body-frame angular velocity from consecutive base quaternions `(w,x,y,z)`,
/// via the rotation `conj(q_t) * q_{t+1}`. The last row repeats.
pub fn base_angular_velocity(quats: &[[f64; 4]], dt: f64) -> Result<Vec<[f64; 3]>> {
    if quats.len() < 2 {
        return Err(Error::Size("need at least 2 orientations".into()));
    }
    let mut out: Vec<[f64; 3]> = quats
        .windows(2)
        .map(|w| {
            let [aw, ax, ay, az] = w[0];
            let [bw, bx, by, bz] = w[1];
            // conj(a) * b
            let mut rw = aw * bw + ax * bx + ay * by + az * bz;
            let mut rv = [
                aw * bx - ax * bw - ay * bz + az * by,
                aw * by + ax * bz - ay * bw - az * bx,
                aw * bz - ax * by + ay * bx - az * bw,
            ];
            if rw < 0.0 {
                rw = -rw;
                rv.iter_mut().for_each(|x| *x = -*x);
            }
            let s = (rv[0] * rv[0] + rv[1] * rv[1] + rv[2] * rv[2]).sqrt();
            if s < 1e-300 {
                return [0.0; 3];
            }
            let angle = 2.0 * s.atan2(rw);
            rv.map(|x| x / s * angle / dt)
        })
        .collect();
    out.push(out[out.len() - 1]);
    Ok(out)
}

/// Raw maxima and difficulty scores for one clip. Needs at least 4 frames.
pub fn analyze_clip(clip: &MotionClip, h_air: f64) -> Result<ComplexityScores<f64>> {
    let dt = clip.dt();
    let kin = max_kinematics(clip.q(), dt)?;
    let omega: Vec<Vec<f64>> = base_angular_velocity(clip.base_quat(), dt)?
        .iter()
        .map(|w| vec![(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt()])
        .collect();
    let ang = max_kinematics(&omega, dt)?;
    let airborne = if clip.feet_indices().is_empty() { 0.0 } else { airborne_ratio(clip, h_air)? };
    let raw = RawComplexity {
        v_max: kin.v_max,
        a_max: kin.a_max,
        j_max: kin.j_max,
        ang_max: ang.v_max,
        v_com_z_max: com_vertical_speed(clip, None)?,
        airborne,
        f_switch: contact_switch_freq(clip.contacts(), dt)?,
    };
    Ok(ComplexityScores { raw, scores: difficulty_scores(&raw) })
}
