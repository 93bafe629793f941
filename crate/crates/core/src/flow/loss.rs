use rand::Rng;

use super::net::VelocityField;
use super::sampler::{sample_timestep, standard_normal};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Observation / expert-action pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FmBatch<T> {
    obs: Vec<Vec<T>>,
    actions: Vec<Vec<T>>,
}

impl<T: Real> FmBatch<T> {
    pub fn new(obs: Vec<Vec<T>>, actions: Vec<Vec<T>>) -> Result<Self> {
        if obs.is_empty() || obs.len() != actions.len() {
            return Err(Error::dim(format!("batch needs equal, non-zero row counts ({} vs {})", obs.len(), actions.len())));
        }
        Ok(Self { obs, actions })
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn obs(&self) -> &[Vec<T>] {
        &self.obs
    }

    pub fn actions(&self) -> &[Vec<T>] {
        &self.actions
    }
}

/// Per-sample flow time and Gaussian endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct FmNoise<T> {
    pub t: Vec<T>,
    pub eps: Vec<Vec<T>>,
}

/// One `t ~ Beta(alpha, beta)` and one `ε ~ N(0, I)` per sample.
pub fn draw_noise<T: Real, R: Rng + ?Sized>(
    n: usize,
    action_dim: usize,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> Result<FmNoise<T>> {
    let mut t = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    for _ in 0..n {
        t.push(sample_timestep(rng, alpha, beta)?);
        eps.push((0..action_dim).map(|_| standard_normal(rng)).collect());
    }
    Ok(FmNoise { t, eps })
}

/// Flow-matching loss `mean_i ‖v(a_t, t, o) - (ε - a)‖²` and its exact
/// gradient for fixed draws.
pub fn fm_loss_and_grad_with<T: Real>(
    net: &VelocityField<T>,
    batch: &FmBatch<T>,
    noise: &FmNoise<T>,
) -> Result<(T, Vec<T>)> {
    if noise.t.len() != batch.len() || noise.eps.len() != batch.len() {
        return Err(Error::dim("noise draws do not match the batch"));
    }
    let n = T::lit(batch.len() as f64);
    let mut grads = vec![T::zero(); net.n_params()];
    let mut loss = T::zero();
    for i in 0..batch.len() {
        let a = &batch.actions[i];
        let eps = &noise.eps[i];
        if a.len() != net.action_dim() || eps.len() != net.action_dim() {
            return Err(Error::dim(format!("sample {i}: action has {} entries, net expects {}", a.len(), net.action_dim())));
        }
        let t = noise.t[i];
        let a_t: Vec<T> = a.iter().zip(eps).map(|(&x, &e)| (T::one() - t) * x + t * e).collect();
        let input = net.assemble_input(&a_t, t, &batch.obs[i])?;
        let trace = net.forward_trace(input);
        let out = trace_output(&trace);
        let resid: Vec<T> = out.iter().zip(a.iter().zip(eps)).map(|(&v, (&x, &e))| v - (e - x)).collect();
        loss += resid.iter().map(|&r| r * r).sum::<T>();
        let g: Vec<T> = resid.iter().map(|&r| T::lit(2.0) * r / n).collect();
        net.backward(&trace, &g, &mut grads);
    }
    Ok((loss / n, grads))
}

fn trace_output<T: Real>(trace: &super::net::Trace<T>) -> Vec<T> {
    trace.output().to_vec()
}

/// Draws fresh `(t, ε)` per sample and evaluates the loss and gradient.
pub fn fm_loss_and_grad<T: Real, R: Rng + ?Sized>(
    net: &VelocityField<T>,
    batch: &FmBatch<T>,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> Result<(T, Vec<T>)> {
    let noise = draw_noise(batch.len(), net.action_dim(), alpha, beta, rng)?;
    fm_loss_and_grad_with(net, batch, &noise)
}
