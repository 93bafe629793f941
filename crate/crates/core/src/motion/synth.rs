//! Synthetic sinusoidal reference motions for the planar arm.

use serde::{Deserialize, Serialize};

use super::planar::PlanarArm;
use super::MotionClip;
use crate::error::{Error, Result};

/// Per-joint sinusoids `q_j(t) = A_j sin(2π f_j t + φ_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMotionSpec {
    pub duration: f64,
    pub fps: f64,
    pub amplitude: Vec<f64>,
    pub frequency: Vec<f64>,
    pub phase: Vec<f64>,
    /// Link lengths used to derive body positions.
    pub link_lengths: Vec<f64>,
}

impl SynthMotionSpec {
    /// Same sinusoid on every joint, with 0.3 m links.
    pub fn uniform(n_joints: usize, duration: f64, fps: f64, amplitude: f64, frequency: f64) -> Self {
        Self {
            duration,
            fps,
            amplitude: vec![amplitude; n_joints],
            frequency: vec![frequency; n_joints],
            phase: vec![0.0; n_joints],
            link_lengths: vec![0.3; n_joints],
        }
    }

    pub fn n_joints(&self) -> usize {
        self.amplitude.len()
    }

    pub fn n_frames(&self) -> usize {
        (self.duration * self.fps).round() as usize
    }

    fn validate(&self) -> Result<()> {
        let j = self.n_joints();
        if j == 0 {
            return Err(Error::arg("synthetic motion needs at least one joint"));
        }
        if self.frequency.len() != j || self.phase.len() != j || self.link_lengths.len() != j {
            return Err(Error::dim("amplitude, frequency, phase and link_lengths must have equal length"));
        }
        if !(self.fps > 0.0) || self.n_frames() < 2 {
            return Err(Error::arg("duration * fps must cover at least 2 frames"));
        }
        let finite = self
            .amplitude
            .iter()
            .chain(&self.frequency)
            .chain(&self.phase)
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::arg("non-finite sinusoid parameter"));
        }
        if self.link_lengths.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::arg("link lengths must be positive"));
        }
        Ok(())
    }
}

/// Samples the sinusoids at `fps`. The base stays at the arm's mount with an
/// identity orientation, bodies are the link endpoints, the tip is the only
/// foot, and the contact flag is set on every frame.
pub fn synth_motion(spec: &SynthMotionSpec) -> Result<MotionClip> {
    spec.validate()?;
    let n = spec.n_frames();
    let dt = 1.0 / spec.fps;
    let arm = PlanarArm::hanging(spec.link_lengths.clone());
    let tau = 2.0 * std::f64::consts::PI;
    let q: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let time = t as f64 * dt;
            (0..spec.n_joints())
                .map(|j| spec.amplitude[j] * (tau * spec.frequency[j] * time + spec.phase[j]).sin())
                .collect()
        })
        .collect();
    let body_pos = q.iter().map(|row| arm.endpoints(row)).collect();
    MotionClip::new(
        spec.fps,
        (0..spec.n_joints()).map(|j| format!("joint_{j}")).collect(),
        q,
        vec![arm.base(); n],
        vec![[1.0, 0.0, 0.0, 0.0]; n],
        body_pos,
        vec![vec![true]; n],
        vec![spec.n_joints() - 1],
    )
}
