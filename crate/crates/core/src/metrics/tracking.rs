use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_shapes<T>(a: &[Vec<[T; 3]>], b: &[Vec<[T; 3]>]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim(format!("{} reference frames vs {} robot frames", a.len(), b.len())));
    }
    for (t, (ra, rb)) in a.iter().zip(b).enumerate() {
        if ra.len() != rb.len() {
            return Err(Error::dim(format!("frame {t}: {} reference bodies vs {} robot bodies", ra.len(), rb.len())));
        }
        if ra.is_empty() {
            return Err(Error::dim(format!("frame {t} has no bodies")));
        }
    }
    if a.is_empty() {
        return Err(Error::UndefinedMetric("no frames".into()));
    }
    Ok(())
}

fn dist<T: Real>(a: &[T; 3], b: &[T; 3]) -> T {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    let d2 = a[2] - b[2];
    (d0 * d0 + d1 * d1 + d2 * d2).sqrt()
}

fn mean_body_error<T: Real>(a: &[[T; 3]], b: &[[T; 3]]) -> T {
    a.iter().zip(b).map(|(x, y)| dist(x, y)).sum::<T>() / T::lit(a.len() as f64)
}

/// Mean per-body position error in millimeters. The reference must already be
/// expressed in the robot's frame.
pub fn mpjpe<T: Real>(ref_body: &[Vec<[T; 3]>], rob_body: &[Vec<[T; 3]>]) -> Result<T> {
    check_shapes(ref_body, rob_body)?;
    let total: T = ref_body.iter().zip(rob_body).map(|(a, b)| mean_body_error(a, b)).sum();
    Ok(T::lit(1000.0) * total / T::lit(ref_body.len() as f64))
}

/// Mean per-body velocity error scaled to millimeters per frame.
pub fn delta_vel<T: Real>(ref_v: &[Vec<[T; 3]>], rob_v: &[Vec<[T; 3]>], dt: T) -> Result<T> {
    check_shapes(ref_v, rob_v)?;
    let total: T = ref_v.iter().zip(rob_v).map(|(a, b)| mean_body_error(a, b)).sum();
    Ok(T::lit(1000.0) * dt * total / T::lit(ref_v.len() as f64))
}

/// Mean per-body acceleration error in millimeters per frame².
///
/// Accelerations are backward differences of the velocities. Step 0 has no
/// predecessor and is skipped; so is every step `r + 1` for `r` in
/// `reset_steps`, where `r` is the last frame logged before a reset.
pub fn delta_acc<T: Real>(ref_v: &[Vec<[T; 3]>], rob_v: &[Vec<[T; 3]>], dt: T, reset_steps: &[usize]) -> Result<T> {
    if ref_v.len() < 2 {
        return Err(Error::Size(format!("need at least 2 frames, got {}", ref_v.len())));
    }
    check_shapes(ref_v, rob_v)?;
    let mut total = T::zero();
    let mut used = 0usize;
    for t in 1..ref_v.len() {
        if reset_steps.iter().any(|&r| r + 1 == t) {
            continue;
        }
        let err = ref_v[t]
            .iter()
            .zip(&ref_v[t - 1])
            .zip(rob_v[t].iter().zip(&rob_v[t - 1]))
            .map(|((rn, rp), (bn, bp))| {
                let a_ref = [(rn[0] - rp[0]) / dt, (rn[1] - rp[1]) / dt, (rn[2] - rp[2]) / dt];
                let a_rob = [(bn[0] - bp[0]) / dt, (bn[1] - bp[1]) / dt, (bn[2] - bp[2]) / dt];
                dist(&a_ref, &a_rob)
            })
            .sum::<T>()
            / T::lit(ref_v[t].len() as f64);
        total += err;
        used += 1;
    }
    if used == 0 {
        return Err(Error::UndefinedMetric("every step is excluded from the acceleration error".into()));
    }
    Ok(T::lit(1000.0) * dt * dt * total / T::lit(used as f64))
}

/// Early-termination limits. Relaxed mode scales both by `relax_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerminationThresholds<T> {
    /// Vertical position error of any tracked body (m).
    pub z_err_max: T,
    /// Orientation (gravity-direction) error (rad).
    pub grav_err_max: T,
    pub relax_factor: T,
}

impl<T: Real> Default for TerminationThresholds<T> {
    fn default() -> Self {
        Self { z_err_max: T::lit(0.25), grav_err_max: T::lit(0.8), relax_factor: T::lit(1.5) }
    }
}

impl<T: Real> TerminationThresholds<T> {
    /// Thresholds that never trigger.
    pub fn disabled() -> Self {
        Self { z_err_max: T::infinity(), grav_err_max: T::infinity(), relax_factor: T::one() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z_err_max > T::zero() && self.grav_err_max > T::zero() && self.relax_factor > T::zero() {
            Ok(())
        } else {
            Err(Error::Config("termination thresholds must be positive".into()))
        }
    }

    /// `(z_err_max, grav_err_max)` in effect.
    pub fn effective(&self, relaxed: bool) -> (T, T) {
        let k = if relaxed { self.relax_factor } else { T::one() };
        (self.z_err_max * k, self.grav_err_max * k)
    }
}

/// Per-step tracking errors consulted by the termination rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingErrors<T> {
    /// |z_ref - z| for the torso and every end-effector.
    pub body_z_errors: Vec<T>,
    /// Angle between reference and actual gravity direction in the torso frame (rad).
    pub gravity_error: T,
}

/// True when any vertical error or the orientation error exceeds its limit.
pub fn check_termination<T: Real>(errs: &TrackingErrors<T>, thr: &TerminationThresholds<T>, relaxed: bool) -> bool {
    let (z_max, g_max) = thr.effective(relaxed);
    errs.body_z_errors.iter().any(|&e| e.abs() > z_max) || errs.gravity_error.abs() > g_max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub terminated_early: bool,
}

/// Fraction of episodes that ran to time-out.
pub fn success_rate(episodes: &[EpisodeOutcome]) -> Result<f64> {
    if episodes.is_empty() {
        return Err(Error::arg("success rate of zero episodes"));
    }
    let ok = episodes.iter().filter(|e| !e.terminated_early).count();
    Ok(ok as f64 / episodes.len() as f64)
}

/// Metrics of one episode, each already averaged over its control steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics<T> {
    pub mpjpe_mm: T,
    pub dvel: T,
    /// `None` when the episode was too short for an acceleration error.
    pub dacc: Option<T>,
    pub success: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingMetrics<T> {
    pub mpjpe_mm: T,
    pub dvel: T,
    pub dacc: Option<T>,
    pub success_rate: T,
    pub episodes: usize,
}

/// Averages per-episode metrics with equal weight per episode, regardless of
/// how many steps each episode lasted.
pub fn aggregate_episodes<T: Real>(eps: &[EpisodeMetrics<T>]) -> Result<TrackingMetrics<T>> {
    if eps.is_empty() {
        return Err(Error::arg("no episodes to aggregate"));
    }
    let n = T::lit(eps.len() as f64);
    let accs: Vec<T> = eps.iter().filter_map(|e| e.dacc).collect();
    let outcomes: Vec<EpisodeOutcome> = eps.iter().map(|e| EpisodeOutcome { terminated_early: !e.success }).collect();
    Ok(TrackingMetrics {
        mpjpe_mm: eps.iter().map(|e| e.mpjpe_mm).sum::<T>() / n,
        dvel: eps.iter().map(|e| e.dvel).sum::<T>() / n,
        dacc: (!accs.is_empty()).then(|| accs.iter().copied().sum::<T>() / T::lit(accs.len() as f64)),
        success_rate: T::lit(success_rate(&outcomes)?),
        episodes: eps.len(),
    })
}

impl<T: Real> TrackingMetrics<T> {
    /// Equal-weight mean over several metric sets (e.g. over clips).
    pub fn mean_of(sets: &[TrackingMetrics<T>]) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::arg("no metric sets to average"));
        }
        let n = T::lit(sets.len() as f64);
        let accs: Vec<T> = sets.iter().filter_map(|m| m.dacc).collect();
        Ok(Self {
            mpjpe_mm: sets.iter().map(|m| m.mpjpe_mm).sum::<T>() / n,
            dvel: sets.iter().map(|m| m.dvel).sum::<T>() / n,
            dacc: (!accs.is_empty()).then(|| accs.iter().copied().sum::<T>() / T::lit(accs.len() as f64)),
            success_rate: sets.iter().map(|m| m.success_rate).sum::<T>() / n,
            episodes: sets.iter().map(|m| m.episodes).sum(),
        })
    }
}
