//! Rigid-body dynamics of a planar chain with point masses at the link tips.

use nalgebra::{DMatrix, DVector};

use crate::actuation::{friction_slope, friction_torque, ActuatorParams};
use crate::error::{Error, Result};

/// Mass, length and rotor inertia of every link, plus gravity.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    pub masses: Vec<f64>,
    pub lengths: Vec<f64>,
    pub armature: Vec<f64>,
    pub gravity: f64,
}

/// `J_i[:, a]` in the (x, z) plane for every tip `i` and joint `a`.
fn tip_jacobians(lengths: &[f64], th: &[f64]) -> Vec<Vec<[f64; 2]>> {
    let n = lengths.len();
    let seg: Vec<[f64; 2]> = th.iter().zip(lengths).map(|(&a, &l)| [l * a.cos(), l * a.sin()]).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|a| {
                    if a > i {
                        [0.0, 0.0]
                    } else {
                        seg[a..=i].iter().fold([0.0, 0.0], |acc, s| [acc[0] + s[0], acc[1] + s[1]])
                    }
                })
                .collect()
        })
        .collect()
}

fn absolute(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

impl ChainModel {
    pub fn n(&self) -> usize {
        self.masses.len()
    }

    /// Joint-space inertia including rotor inertia on the diagonal.
    pub fn mass_matrix(&self, q: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let jac = tip_jacobians(&self.lengths, &absolute(q));
        DMatrix::from_fn(n, n, |a, b| {
            let links: f64 = (0..n).map(|i| self.masses[i] * (jac[i][a][0] * jac[i][b][0] + jac[i][a][1] * jac[i][b][1])).sum();
            links + if a == b { self.armature[a] } else { 0.0 }
        })
    }

    /// Coriolis, centrifugal and gravity torques `h(q, qdot)` in `M q̈ + h = τ`.
    pub fn bias(&self, q: &[f64], qdot: &[f64]) -> Vec<f64> {
        let n = self.n();
        let th = absolute(q);
        let thd = absolute(qdot);
        let jac = tip_jacobians(&self.lengths, &th);
        let mut c = [0.0, 0.0];
        let accel: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let w2 = thd[k] * thd[k] * self.lengths[k];
                c[0] -= w2 * th[k].sin();
                c[1] += w2 * th[k].cos();
                [c[0], c[1] + self.gravity]
            })
            .collect();
        (0..n)
            .map(|a| (0..n).map(|i| self.masses[i] * (jac[i][a][0] * accel[i][0] + jac[i][a][1] * accel[i][1])).sum())
            .collect()
    }

    /// Gravity torques alone.
    pub fn gravity_torques(&self, q: &[f64]) -> Vec<f64> {
        self.bias(q, &vec![0.0; self.n()])
    }

    /// Kinetic plus potential energy, potential measured from the mount height.
    pub fn energy(&self, q: &[f64], qdot: &[f64]) -> f64 {
        let th = absolute(q);
        let thd = absolute(qdot);
        let (mut x, mut z, mut vx, mut vz) = (0.0, 0.0, 0.0, 0.0);
        let mut e = 0.0;
        for i in 0..self.n() {
            let l = self.lengths[i];
            x += l * th[i].sin();
            z -= l * th[i].cos();
            vx += l * thd[i] * th[i].cos();
            vz += l * thd[i] * th[i].sin();
            let _ = x;
            e += 0.5 * self.masses[i] * (vx * vx + vz * vz) + self.masses[i] * self.gravity * z;
            e += 0.5 * self.armature[i] * qdot[i] * qdot[i];
        }
        e
    }

    /// One semi-implicit Euler step of length `h` under joint torques `tau`
    /// (before friction). Friction is treated implicitly: the new velocity
    /// `w` solves `M (w - qdot) = h (tau - bias - f(w))`. Returns the new
    /// velocity and the friction torque `f(w)`; `q` advances with `w`.
    pub fn step(
        &self,
        q: &mut [f64],
        qdot: &mut [f64],
        tau: &[f64],
        actuators: &[ActuatorParams<f64>],
        h: f64,
    ) -> Result<Vec<f64>> {
        let n = self.n();
        let m = self.mass_matrix(q);
        let bias = self.bias(q, qdot);
        let rhs = DVector::from_fn(n, |a, _| tau[a] - bias[a]);
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalBlowup("mass matrix is not positive definite".into()))?;
        let v_free = DVector::from_column_slice(qdot) + chol.solve(&rhs) * h;
        let w = solve_implicit_friction(&m, &v_free, actuators, h)?;
        let friction: Vec<f64> = w.iter().zip(actuators).map(|(&v, p)| friction_torque(v, p)).collect();
        for a in 0..n {
            qdot[a] = w[a];
            q[a] += h * w[a];
        }
        if q.iter().chain(qdot.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NumericalBlowup("non-finite joint state".into()));
        }
        Ok(friction)
    }
}

/// `∫ friction dv`, an even convex potential.
fn friction_potential(v: f64, p: &ActuatorParams<f64>) -> f64 {
    let x = (v / p.v_act).abs();
    // ln cosh x = x + ln(1 + e^{-2x}) - ln 2
    let lncosh = x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2;
    p.mu_s * p.v_act * lncosh + 0.5 * p.mu_d * v * v
}

/// Minimizes `½ (w - v)ᵀ M (w - v) + h Σ F(w_j)` by damped Newton steps; the
/// stationarity condition is `M (w - v) + h f(w) = 0`.
fn solve_implicit_friction(
    m: &DMatrix<f64>,
    v_free: &DVector<f64>,
    actuators: &[ActuatorParams<f64>],
    h: f64,
) -> Result<DVector<f64>> {
    let n = v_free.len();
    let objective = |w: &DVector<f64>| {
        let d = w - v_free;
        0.5 * d.dot(&(m * &d)) + h * w.iter().zip(actuators).map(|(&x, p)| friction_potential(x, p)).sum::<f64>()
    };
    let mut w = v_free.clone();
    let mut f_w = objective(&w);
    for _ in 0..100 {
        let grad = m * (&w - v_free) + DVector::from_fn(n, |a, _| h * friction_torque(w[a], &actuators[a]));
        let scale = 1.0 + v_free.amax() + m.amax();
        if grad.amax() <= 1e-13 * scale {
            return Ok(w);
        }
        let mut hess = m.clone();
        for a in 0..n {
            hess[(a, a)] += h * friction_slope(w[a], &actuators[a]);
        }
        let dir = hess
            .cholesky()
            .ok_or_else(|| Error::NumericalBlowup("friction Newton system is singular".into()))?
            .solve(&(-&grad));
        let slope = grad.dot(&dir);
        let mut step = 1.0;
        loop {
            let cand = &w + &dir * step;
            let f_c = objective(&cand);
            if f_c <= f_w + 1e-4 * step * slope || step < 1e-12 {
                if step < 1e-12 {
                    return Ok(w);
                }
                w = cand;
                f_w = f_c;
                break;
            }
            step *= 0.5;
        }
    }
    Ok(w)
}
