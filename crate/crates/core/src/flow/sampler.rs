use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::net::VelocityField;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Flow time `t ~ Beta(alpha, beta)`.
pub fn sample_timestep<T: Real, R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> Result<T> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::arg(format!("Beta shapes must be positive, got ({alpha}, {beta})")));
    }
    let dist = Beta::new(alpha, beta).map_err(|e| Error::arg(e.to_string()))?;
    Ok(T::lit(dist.sample(rng)))
}

pub fn standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(StandardNormal.sample(rng))
}

/// Integrates the field from `x1` at `t = 1` down to `t = 0` in `steps`
/// uniform Euler steps, evaluating at `t_k = 1 - k/steps`.
///
/// The state is kept as `x1 - m_k · k/steps` with `m_k` the running mean of
/// the field values, which is the Euler recursion in closed form. A constant
/// field `u` keeps `m_k = u` exactly, so the result is `x1 - u` bit for bit.
pub fn euler_integrate<T: Real>(net: &VelocityField<T>, x1: &[T], obs: &[T], steps: usize) -> Result<Vec<T>> {
    if steps == 0 {
        return Err(Error::arg("Euler sampler needs at least one step"));
    }
    let d = T::lit(steps as f64);
    let mut x = x1.to_vec();
    let mut mean = vec![T::zero(); x1.len()];
    for k in 0..steps {
        let t = T::one() - T::lit(k as f64) / d;
        let v = net.forward(&x, t, obs)?;
        let count = T::lit((k + 1) as f64);
        let frac = count / d;
        for ((xi, mi), (&x1i, vi)) in x.iter_mut().zip(mean.iter_mut()).zip(x1.iter().zip(v)) {
            *mi += (vi - *mi) / count;
            *xi = x1i - *mi * frac;
        }
    }
    Ok(x)
}

/// Draws `x1 ~ N(0, I)` and integrates it to an action.
pub fn euler_sample<T: Real, R: Rng + ?Sized>(net: &VelocityField<T>, obs: &[T], steps: usize, rng: &mut R) -> Result<Vec<T>> {
    let x1: Vec<T> = (0..net.action_dim()).map(|_| standard_normal(rng)).collect();
    euler_integrate(net, &x1, obs, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_field(u: &[f64]) -> VelocityField<f64> {
        let mut net = VelocityField::zeros(u.len(), 1, 2, &[]).unwrap();
        let off = net.layer_sizes()[0] * u.len();
        net.params_mut()[off..off + u.len()].copy_from_slice(u);
        net
    }

    #[test]
    fn uniform_beta_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_timestep::<f64, _>(&mut rng, 1.0, 1.0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn beta22_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_timestep(&mut rng, 2.0, 2.0).unwrap()).collect();
        assert!(xs.iter().all(|x| (0.0..=1.0).contains(x)));
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((var - 0.05).abs() < 0.005, "{var}");
    }

    #[test]
    fn bad_shape_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_timestep::<f64, _>(&mut rng, 0.0, 1.0).is_err());
        assert!(sample_timestep::<f64, _>(&mut rng, 1.0, -2.0).is_err());
    }

    #[test]
    fn constant_field_is_exact() {
        let u = [0.3, -1.7, 1e-3];
        let net = constant_field(&u);
        let x1 = [0.8123456789, -0.25, 1.1];
        for d in [1, 5, 100] {
            let x0 = euler_integrate(&net, &x1, &[0.0], d).unwrap();
            let expect: Vec<f64> = x1.iter().zip(&u).map(|(a, b)| a - b).collect();
            assert_eq!(x0, expect, "D = {d}");
        }
    }

    #[test]
    fn seeded_sampling_repeats() {
        let net = constant_field(&[0.5, 0.5]);
        let a = euler_sample(&net, &[0.0], 5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = euler_sample(&net, &[0.0], 5, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }
}
