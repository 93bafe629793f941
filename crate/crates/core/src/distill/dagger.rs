use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mix, FlowPolicy, Policy};
use crate::env::{ArmEnv, ExpertPolicy, Mode};
use crate::error::{Error, Result};
use crate::flow::{fm_loss_and_grad, Adam, FmBatch, SamplerCfg, VelocityField};
use crate::motion::MotionClip;

/// A visited observation labelled with the expert's action.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub obs: Vec<f64>,
    pub motion: usize,
    pub action: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBuffer {
    records: Vec<Record>,
}

impl ReplayBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Minibatch drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<FmBatch<f64>> {
        if self.records.is_empty() {
            return Err(Error::arg("cannot sample from an empty buffer"));
        }
        let (obs, actions) = (0..size)
            .map(|_| {
                let r = &self.records[rng.random_range(0..self.records.len())];
                (r.obs.clone(), r.action.clone())
            })
            .unzip();
        FmBatch::new(obs, actions)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillCfg {
    pub iterations: usize,
    pub episodes_per_iter: usize,
    pub gradient_steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub sampler: SamplerCfg,
    pub seed: u64,
    /// Keep records across iterations (classic DAgger) instead of clearing.
    pub accumulate: bool,
    /// Hidden widths of a freshly built network.
    pub hidden: Vec<usize>,
    pub time_embed_dim: usize,
}

impl Default for DistillCfg {
    fn default() -> Self {
        Self {
            iterations: 12,
            episodes_per_iter: 4,
            gradient_steps: 300,
            batch_size: 128,
            lr: 2e-3,
            sampler: SamplerCfg::default(),
            seed: 0,
            accumulate: false,
            hidden: vec![64, 64],
            time_embed_dim: 8,
        }
    }
}

impl DistillCfg {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        let positive = self.episodes_per_iter > 0
            && self.gradient_steps > 0
            && self.batch_size > 0
            && self.lr > 0.0
            && self.lr.is_finite()
            && !self.hidden.contains(&0);
        if !positive {
            return Err(Error::Config("distillation settings must be positive".into()));
        }
        Ok(())
    }

    /// Fresh network sized for `env`.
    pub fn build_net(&self, env: &ArmEnv) -> Result<VelocityField<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, 0x11e7));
        VelocityField::random(env.n_joints(), env.obs_dim(), self.time_embed_dim, &self.hidden, &mut rng)
    }
}

/// Callback after every iteration with its index, the updated net and the loss.
pub type IterationHook<'a> = dyn FnMut(usize, &VelocityField<f64>, f64) -> Result<()> + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct DistillReport {
    pub net: VelocityField<f64>,
    /// Mean flow-matching loss of each iteration's gradient steps.
    pub loss_history: Vec<f64>,
    /// Records collected in each iteration.
    pub collected: Vec<usize>,
    /// Buffer size each iteration trained on.
    pub buffer_sizes: Vec<usize>,
}

/// DAgger distillation: each iteration clears the buffer (unless
/// `accumulate`), rolls out the current student on uniformly drawn motions,
/// labels every visited state with that motion's expert, then fits the
/// flow-matching loss on buffer minibatches with Adam.
pub fn dagger_train(
    env: &mut ArmEnv,
    experts: &[ExpertPolicy],
    motions: &[MotionClip],
    net: VelocityField<f64>,
    cfg: &DistillCfg,
    on_iteration: &mut IterationHook,
) -> Result<DistillReport> {
    cfg.validate()?;
    if motions.is_empty() {
        return Err(Error::Config("distillation needs at least one motion".into()));
    }
    if experts.len() < motions.len() {
        return Err(Error::Config(format!("motion {} has no expert", experts.len())));
    }
    if net.action_dim() != env.n_joints() || net.obs_dim() != env.obs_dim() {
        return Err(Error::Config(format!(
            "net maps {} obs to {} actions; environment has {} obs and {} joints",
            net.obs_dim(),
            net.action_dim(),
            env.obs_dim(),
            env.n_joints()
        )));
    }
    let mut net = net;
    let mut adam = Adam::new(net.n_params(), cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0xda66e7));
    let mut buffer = ReplayBuffer::new();
    let mut loss_history = Vec::with_capacity(cfg.iterations);
    let mut collected = Vec::with_capacity(cfg.iterations);
    let mut buffer_sizes = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        if !cfg.accumulate {
            buffer.clear();
        }
        let before = buffer.len();
        for ep in 0..cfg.episodes_per_iter {
            let m = rng.random_range(0..motions.len());
            let seed = mix(mix(cfg.seed, it as u64), ep as u64);
            let mut student = FlowPolicy::new(&net, cfg.sampler.steps)?;
            student.begin_episode(seed);
            let mut obs = env.reset(&motions[m], seed, Mode::Base)?;
            loop {
                let label = experts[m].action(env)?;
                let action = student.act(env, &obs)?;
                buffer.push(Record { obs, motion: m, action: label });
                let out = env.step(&action)?;
                if out.done {
                    break;
                }
                obs = out.obs;
            }
        }
        collected.push(buffer.len() - before);
        buffer_sizes.push(buffer.len());
        let mut total = 0.0;
        for _ in 0..cfg.gradient_steps {
            let batch = buffer.sample(cfg.batch_size, &mut rng)?;
            let (loss, grads) = fm_loss_and_grad(&net, &batch, cfg.sampler.alpha, cfg.sampler.beta, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::NumericalBlowup(format!("flow-matching loss diverged at iteration {it}")));
            }
            adam.step(net.params_mut(), &grads);
            total += loss;
        }
        let mean = total / cfg.gradient_steps as f64;
        loss_history.push(mean);
        on_iteration(it, &net, mean)?;
    }
    Ok(DistillReport { net, loss_history, collected, buffer_sizes })
}
