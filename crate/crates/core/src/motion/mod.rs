//! Motion clips: the unit of ingestion, segmentation and evaluation.

mod io;
pub mod planar;
mod synth;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use io::{load_motion, parse_motion, save_motion, to_json_string};
pub use synth::{synth_motion, SynthMotionSpec};

/// Quaternions further than this from unit norm are rejected on load.
pub const QUAT_REJECT_TOL: f64 = 1e-3;
/// Quaternions within this distance of unit norm are kept verbatim.
pub const QUAT_UNIT_TOL: f64 = 1e-6;

/// Time-indexed joint, base and body trajectories with contact flags.
///
/// Every per-frame array has the same length `T >= 2`. Joint positions are
/// in radians, positions in meters, quaternions are `(w, x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    fps: f64,
    joint_names: Vec<String>,
    q: Vec<Vec<f64>>,
    base_pos: Vec<[f64; 3]>,
    base_quat: Vec<[f64; 4]>,
    body_pos: Vec<Vec<[f64; 3]>>,
    contacts: Vec<Vec<bool>>,
    feet_indices: Vec<usize>,
}

impl MotionClip {
    /// Builds a clip and checks every invariant.
    ///
    /// Quaternions within [`QUAT_REJECT_TOL`] of unit norm are renormalized;
    /// anything further off is a validation error.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fps: f64,
        joint_names: Vec<String>,
        q: Vec<Vec<f64>>,
        base_pos: Vec<[f64; 3]>,
        mut base_quat: Vec<[f64; 4]>,
        body_pos: Vec<Vec<[f64; 3]>>,
        contacts: Vec<Vec<bool>>,
        feet_indices: Vec<usize>,
    ) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Validation(format!("fps must be positive, got {fps}")));
        }
        let t = q.len();
        if t < 2 {
            return Err(Error::Size(format!("a clip needs at least 2 frames, got {t}")));
        }
        for (name, len) in [
            ("base_pos", base_pos.len()),
            ("base_quat", base_quat.len()),
            ("body_pos", body_pos.len()),
            ("contacts", contacts.len()),
        ] {
            if len != t {
                return Err(Error::dim(format!("{name} has {len} frames, q has {t}")));
            }
        }
        let n_joints = joint_names.len();
        let n_bodies = body_pos[0].len();
        let n_contacts = contacts[0].len();
        for f in 0..t {
            if q[f].len() != n_joints {
                return Err(Error::dim(format!(
                    "frame {f}: q has {} entries, expected {n_joints} joints",
                    q[f].len()
                )));
            }
            if body_pos[f].len() != n_bodies {
                return Err(Error::dim(format!(
                    "frame {f}: body_pos has {} bodies, expected {n_bodies}",
                    body_pos[f].len()
                )));
            }
            if contacts[f].len() != n_contacts {
                return Err(Error::dim(format!(
                    "frame {f}: contacts has {} flags, expected {n_contacts}",
                    contacts[f].len()
                )));
            }
            let finite = q[f].iter().all(|x| x.is_finite())
                && base_pos[f].iter().all(|x| x.is_finite())
                && base_quat[f].iter().all(|x| x.is_finite())
                && body_pos[f].iter().flatten().all(|x| x.is_finite());
            if !finite {
                return Err(Error::Validation(format!("frame {f}: non-finite value")));
            }
            let quat = &mut base_quat[f];
            let norm = quat.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > QUAT_REJECT_TOL {
                return Err(Error::Validation(format!(
                    "frame {f}: base_quat norm {norm} is not unit"
                )));
            }
            if (norm - 1.0).abs() > QUAT_UNIT_TOL {
                quat.iter_mut().for_each(|x| *x /= norm);
            }
        }
        if let Some(&bad) = feet_indices.iter().find(|&&i| i >= n_bodies) {
            return Err(Error::Validation(format!(
                "feet index {bad} out of range for {n_bodies} bodies"
            )));
        }
        Ok(Self { fps, joint_names, q, base_pos, base_quat, body_pos, contacts, feet_indices })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.q.len()
    }

    /// Always false: a valid clip has at least two frames.
    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Duration in seconds, counted as `T / fps`.
    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.fps
    }

    pub fn n_joints(&self) -> usize {
        self.joint_names.len()
    }

    pub fn n_bodies(&self) -> usize {
        self.body_pos[0].len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn base_pos(&self) -> &[[f64; 3]] {
        &self.base_pos
    }

    pub fn base_quat(&self) -> &[[f64; 4]] {
        &self.base_quat
    }

    pub fn body_pos(&self) -> &[Vec<[f64; 3]>] {
        &self.body_pos
    }

    pub fn contacts(&self) -> &[Vec<bool>] {
        &self.contacts
    }

    pub fn feet_indices(&self) -> &[usize] {
        &self.feet_indices
    }

    /// Frames `[start, end)` as a new clip.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::arg(format!("bad frame range {start}..{end} for {} frames", self.len())));
        }
        Self::new(
            self.fps,
            self.joint_names.clone(),
            self.q[start..end].to_vec(),
            self.base_pos[start..end].to_vec(),
            self.base_quat[start..end].to_vec(),
            self.body_pos[start..end].to_vec(),
            self.contacts[start..end].to_vec(),
            self.feet_indices.clone(),
        )
    }

    /// Joint velocities by forward differences, aligned with frames.
    pub fn joint_velocities(&self) -> Vec<Vec<f64>> {
        finite_difference(&self.q, self.dt()).expect("clip has >= 2 frames")
    }
}

/// Forward differences `(x[t+1] - x[t]) / dt`, with the last row repeating the
/// previous derivative so the output has as many rows as the input.
pub fn finite_difference<T: Real>(series: &[Vec<T>], dt: T) -> Result<Vec<Vec<T>>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::Size(format!("finite difference needs at least 2 rows, got {n}")));
    }
    if !(dt > T::zero()) {
        return Err(Error::arg("dt must be positive"));
    }
    let width = series[0].len();
    if let Some(row) = series.iter().position(|r| r.len() != width) {
        return Err(Error::dim(format!("row {row} has width {}, expected {width}", series[row].len())));
    }
    let mut out: Vec<Vec<T>> = series
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(&b, &a)| (b - a) / dt).collect())
        .collect();
    out.push(out[n - 2].clone());
    Ok(out)
}

/// Splits a clip into fixed-length pieces of `seconds`.
///
/// A clip no longer than `seconds` comes back whole. Otherwise every full
/// piece is kept, plus a trailing partial piece if it lasts at least one second.
pub fn segment_clips(clip: &MotionClip, seconds: f64) -> Result<Vec<MotionClip>> {
    if !(seconds.is_finite() && seconds > 0.0) {
        return Err(Error::arg(format!("segment length must be positive, got {seconds}")));
    }
    let per_clip = (seconds * clip.fps()).round() as usize;
    if per_clip < 2 {
        return Err(Error::arg(format!("segment of {seconds} s holds fewer than 2 frames")));
    }
    let total = clip.len();
    if total <= per_clip {
        return Ok(vec![clip.clone()]);
    }
    let full = total / per_clip;
    let mut out = Vec::with_capacity(full + 1);
    for k in 0..full {
        out.push(clip.slice(k * per_clip, (k + 1) * per_clip)?);
    }
    let rest = total - full * per_clip;
    if rest >= 2 && rest as f64 / clip.fps() >= 1.0 {
        out.push(clip.slice(full * per_clip, total)?);
    }
    Ok(out)
}
