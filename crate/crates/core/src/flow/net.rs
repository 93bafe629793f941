use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

/// Feedforward velocity field over `[a_t, embed(t), obs]`.
///
/// Parameters live in one flat buffer: for each layer, a row-major
/// `out × in` weight block followed by `out` biases. Hidden layers use tanh;
/// the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField<T> {
    action_dim: usize,
    obs_dim: usize,
    frequencies: Vec<T>,
    sizes: Vec<usize>,
    activation: Activation,
    params: Vec<T>,
}

/// Per-layer activations kept for backpropagation.
pub(crate) struct Trace<T> {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<T>>,
}

impl<T> Trace<T> {
    pub(crate) fn output(&self) -> &[T] {
        self.acts.last().expect("trace has an output")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl<T: Real> VelocityField<T> {
    /// Network with every parameter zero. `time_embed_dim` must be even; the
    /// embedding uses frequencies `π·2^k`.
    pub fn zeros(action_dim: usize, obs_dim: usize, time_embed_dim: usize, hidden: &[usize]) -> Result<Self> {
        if action_dim == 0 || !time_embed_dim.is_multiple_of(2) {
            return Err(Error::arg("action_dim must be positive and time_embed_dim even"));
        }
        let frequencies = (0..time_embed_dim / 2).map(|k| T::PI() * T::lit(2f64.powi(k as i32))).collect();
        let mut sizes = vec![action_dim + time_embed_dim + obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(action_dim);
        if sizes.contains(&0) {
            return Err(Error::arg("layer sizes must be positive"));
        }
        let params = vec![T::zero(); param_count(&sizes)];
        Ok(Self { action_dim, obs_dim, frequencies, sizes, activation: Activation::Tanh, params })
    }

    /// Uniform Glorot initialization for every weight, zero biases.
    pub fn random<R: Rng + ?Sized>(
        action_dim: usize,
        obs_dim: usize,
        time_embed_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(action_dim, obs_dim, time_embed_dim, hidden)?;
        let mut off = 0;
        for w in net.sizes.clone().windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[off..off + fan_in * fan_out] {
                *p = T::lit(rng.random_range(-bound..bound));
            }
            off += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    /// Rebuilds a network from its parts, checking every shape.
    pub fn from_parts(
        action_dim: usize,
        obs_dim: usize,
        frequencies: Vec<T>,
        sizes: Vec<usize>,
        activation: Activation,
        params: Vec<T>,
    ) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Checkpoint(format!("bad layer shapes {sizes:?}")));
        }
        if sizes[0] != action_dim + 2 * frequencies.len() + obs_dim || sizes[sizes.len() - 1] != action_dim {
            return Err(Error::Checkpoint(format!(
                "layer shapes {sizes:?} do not match action_dim {action_dim}, obs_dim {obs_dim}, embed {}",
                2 * frequencies.len()
            )));
        }
        let expected = param_count(&sizes);
        if params.len() != expected {
            return Err(Error::Checkpoint(format!("expected {expected} parameters, found {}", params.len())));
        }
        if params.iter().chain(&frequencies).any(|p| !p.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self { action_dim, obs_dim, frequencies, sizes, activation, params })
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn time_embed_dim(&self) -> usize {
        2 * self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[T] {
        &self.frequencies
    }

    /// `[input, hidden..., output]`.
    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    /// Offset of layer `l`'s weight block in the flat parameter buffer.
    pub fn layer_offset(&self, l: usize) -> usize {
        param_count(&self.sizes[..=l])
    }

    /// `[sin(ω_k t)..., cos(ω_k t)...]`.
    pub fn embed_time(&self, t: T) -> Vec<T> {
        let s = self.frequencies.iter().map(|&w| (w * t).sin());
        let c = self.frequencies.iter().map(|&w| (w * t).cos());
        s.chain(c).collect()
    }

    pub(crate) fn assemble_input(&self, a_t: &[T], t: T, obs: &[T]) -> Result<Vec<T>> {
        if a_t.len() != self.action_dim || obs.len() != self.obs_dim {
            return Err(Error::dim(format!(
                "velocity field expects action {} / obs {}, got {} / {}",
                self.action_dim,
                self.obs_dim,
                a_t.len(),
                obs.len()
            )));
        }
        let mut x = Vec::with_capacity(self.sizes[0]);
        x.extend_from_slice(a_t);
        x.extend(self.embed_time(t));
        x.extend_from_slice(obs);
        Ok(x)
    }

    /// Velocity at `(a_t, t, obs)`.
    pub fn forward(&self, a_t: &[T], t: T, obs: &[T]) -> Result<Vec<T>> {
        let x = self.assemble_input(a_t, t, obs)?;
        Ok(self.run(x, None))
    }

    pub(crate) fn forward_trace(&self, input: Vec<T>) -> Trace<T> {
        let mut acts = Vec::with_capacity(self.sizes.len());
        self.run(input, Some(&mut acts));
        Trace { acts }
    }

    fn run(&self, input: Vec<T>, mut keep: Option<&mut Vec<Vec<T>>>) -> Vec<T> {
        let n_layers = self.sizes.len() - 1;
        let mut x = input;
        let mut off = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let mut y: Vec<T> = b.to_vec();
            for (o, yo) in y.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *yo += row.iter().zip(&x).map(|(&a, &b)| a * b).sum::<T>();
            }
            if l + 1 < n_layers {
                match self.activation {
                    Activation::Tanh => y.iter_mut().for_each(|v| *v = v.tanh()),
                }
            }
            off += n_in * n_out + n_out;
            if let Some(k) = keep.as_deref_mut() {
                k.push(std::mem::replace(&mut x, y));
            } else {
                x = y;
            }
        }
        if let Some(k) = keep {
            k.push(x.clone());
        }
        x
    }

    /// Adds `∂(grad_out · output)/∂θ` into `grads`.
    pub(crate) fn backward(&self, trace: &Trace<T>, grad_out: &[T], grads: &mut [T]) {
        let n_layers = self.sizes.len() - 1;
        let mut delta = grad_out.to_vec();
        let mut off = self.params.len();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            off -= n_in * n_out + n_out;
            let x = &trace.acts[l];
            for o in 0..n_out {
                let d = delta[o];
                let g_row = &mut grads[off + o * n_in..off + (o + 1) * n_in];
                g_row.iter_mut().zip(x).for_each(|(g, &xi)| *g += d * xi);
                grads[off + n_in * n_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + n_in * n_out];
            let mut prev = vec![T::zero(); n_in];
            for o in 0..n_out {
                let d = delta[o];
                prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]).for_each(|(p, &wi)| *p += d * wi);
            }
            // x is tanh output of layer l-1
            match self.activation {
                Activation::Tanh => prev.iter_mut().zip(x).for_each(|(p, &h)| *p *= T::one() - h * h),
            }
            delta = prev;
        }
    }

    /// Converts between precisions.
    pub fn cast<U: Real>(&self) -> VelocityField<U> {
        let c = |v: &[T]| v.iter().map(|&x| U::lit(x.as_f64())).collect();
        VelocityField {
            action_dim: self.action_dim,
            obs_dim: self.obs_dim,
            frequencies: c(&self.frequencies),
            sizes: self.sizes.clone(),
            activation: self.activation,
            params: c(&self.params),
        }
    }
}
