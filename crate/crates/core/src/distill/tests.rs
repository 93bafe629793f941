use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::env::{EnvConfig, Mode};
use crate::metrics::{aggregate_episodes, mpjpe, EpisodeMetrics, TerminationThresholds};
use crate::motion::{synth_motion, MotionClip, SynthMotionSpec};

fn sine(amp: f64, freq: f64, seconds: f64) -> MotionClip {
    synth_motion(&SynthMotionSpec::uniform(2, seconds, 50.0, amp, freq)).unwrap()
}

fn short_env(len: usize) -> ArmEnv {
    let mut env = ArmEnv::new(EnvConfig { episode_len: len, ..EnvConfig::default() }).unwrap();
    env.set_thresholds(TerminationThresholds::disabled());
    env
}

fn tiny_cfg() -> DistillCfg {
    DistillCfg { iterations: 3, episodes_per_iter: 2, gradient_steps: 40, batch_size: 32, hidden: vec![16], ..DistillCfg::default() }
}

#[test]
fn compose_adds_within_bound() {
    assert_eq!(residual_compose(&[0.2, -0.4], &[0.0, 0.0], 0.5).unwrap(), vec![0.2, -0.4]);
    let a = residual_compose(&[0.2, 0.2], &[0.1, 0.1], 0.5).unwrap();
    assert!(a.iter().all(|x| (x - 0.3).abs() < 1e-15));
    assert_eq!(residual_compose(&[0.0, 1.0], &[5.0, -5.0], 0.5).unwrap(), vec![0.5, 0.5]);
    assert!(matches!(residual_compose(&[0.0], &[0.0, 0.0], 1.0), Err(Error::Dimension(_))));
}

#[test]
fn residual_output_is_bounded_and_starts_at_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut r = ResidualPolicy::new(2, &[8], 0.3, &mut rng).unwrap();
    let obs = vec![0.7; 40];
    assert_eq!(r.action(&obs, &[1.0, -1.0], 2).unwrap(), vec![0.0, 0.0]);
    for p in r.params_mut() {
        *p = 50.0;
    }
    assert!(r.action(&obs, &[1.0, -1.0], 2).unwrap().iter().all(|a| a.abs() <= 0.3));
    let back = ResidualPolicy::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn buffer_is_on_policy_and_sized_by_rollouts() {
    let mut env = short_env(20);
    let motions = vec![sine(0.3, 0.5, 2.0)];
    let cfg = tiny_cfg();
    let net = cfg.build_net(&env).unwrap();
    let rep = dagger_train(&mut env, &[ExpertPolicy::default()], &motions, net.clone(), &cfg, &mut |_, _, _| Ok(())).unwrap();
    assert_eq!(rep.collected, vec![2 * 20; 3]);
    assert_eq!(rep.buffer_sizes, vec![2 * 20; 3]);
    assert_eq!(rep.loss_history.len(), 3);

    let acc = DistillCfg { accumulate: true, ..cfg };
    let rep = dagger_train(&mut env, &[ExpertPolicy::default()], &motions, net, &acc, &mut |_, _, _| Ok(())).unwrap();
    assert_eq!(rep.collected, vec![40; 3]);
    assert_eq!(rep.buffer_sizes, vec![40, 80, 120]);
}

#[test]
fn zero_iterations_leave_net_unchanged() {
    let mut env = short_env(10);
    let cfg = DistillCfg { iterations: 0, ..tiny_cfg() };
    let net = cfg.build_net(&env).unwrap();
    let rep = dagger_train(&mut env, &[ExpertPolicy::default()], &[sine(0.3, 0.5, 1.0)], net.clone(), &cfg, &mut |_, _, _| Ok(())).unwrap();
    assert_eq!(rep.net, net);
    assert!(rep.loss_history.is_empty());
}

#[test]
fn missing_expert_is_a_config_error() {
    let mut env = short_env(10);
    let cfg = tiny_cfg();
    let net = cfg.build_net(&env).unwrap();
    let motions = vec![sine(0.3, 0.5, 1.0), sine(0.3, 0.25, 1.0)];
    let err = dagger_train(&mut env, &[ExpertPolicy::default()], &motions, net, &cfg, &mut |_, _, _| Ok(())).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn distillation_loss_falls() {
    let mut env = short_env(50);
    let cfg = DistillCfg { iterations: 4, gradient_steps: 100, ..tiny_cfg() };
    let net = cfg.build_net(&env).unwrap();
    let rep = dagger_train(&mut env, &[ExpertPolicy::default()], &[sine(0.3, 0.5, 2.0)], net, &cfg, &mut |_, _, _| Ok(())).unwrap();
    assert!(rep.loss_history.last().unwrap() < rep.loss_history.first().unwrap(), "{:?}", rep.loss_history);
}

#[test]
fn zero_bound_residual_matches_base_exactly() {
    let mut env = ArmEnv::new(EnvConfig { episode_len: 60, ..EnvConfig::default() }).unwrap();
    let cfg = tiny_cfg();
    let net = cfg.build_net(&env).unwrap();
    let mut residual = ResidualPolicy::new(2, &[8], 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    for p in residual.params_mut() {
        *p = 1.0;
    }
    let motions = vec![sine(0.2, 0.5, 2.0)];
    let ecfg = EvalCfg { rollouts: 3, ..EvalCfg::default() };
    let base = evaluate_policy(&mut FlowPolicy::new(&net, 5).unwrap(), &mut env, &motions, &ecfg).unwrap();
    let mut stack = ResidualStack { base: FlowPolicy::new(&net, 5).unwrap(), residual: &residual };
    let both = evaluate_policy(&mut stack, &mut env, &motions, &ecfg).unwrap();
    assert_eq!(base, both);
}

#[test]
fn es_without_offspring_keeps_residual() {
    let mut env = ArmEnv::new(EnvConfig { episode_len: 20, ..EnvConfig::default() }).unwrap();
    let net = tiny_cfg().build_net(&env).unwrap();
    let residual = ResidualPolicy::new(2, &[8], 0.5, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let motions = vec![sine(0.2, 0.5, 1.0)];
    let cfg = EsCfg { generations: 3, population: 0, episodes: 2, ..EsCfg::default() };
    let out = es_refine(&net, residual.clone(), &mut env, &motions, &cfg).unwrap();
    assert_eq!(out.residual, residual);
    assert_eq!(out.best_history, vec![out.initial_reward; 3]);

    let cfg = EsCfg { generations: 4, population: 3, episodes: 2, ..EsCfg::default() };
    let out = es_refine(&net, residual, &mut env, &motions, &cfg).unwrap();
    assert!(out.best_history.windows(2).all(|w| w[1] >= w[0]));
    assert!(out.best_history[0] >= out.initial_reward);
}

#[test]
fn expert_succeeds_and_random_policy_fails() {
    let mut env = ArmEnv::new(EnvConfig::default()).unwrap();
    let ecfg = EvalCfg { rollouts: 3, ..EvalCfg::default() };
    let benign = vec![sine(0.3, 0.25, 10.0)];
    let r = evaluate_policy(&mut ExpertPolicy::default(), &mut env, &benign, &ecfg).unwrap();
    assert_eq!(r.overall.success_rate, 1.0);

    let fast = vec![sine(1.2, 1.5, 10.0)];
    let net = tiny_cfg().build_net(&env).unwrap();
    let r = evaluate_policy(&mut FlowPolicy::new(&net, 5).unwrap(), &mut env, &fast, &ecfg).unwrap();
    assert_eq!(r.overall.success_rate, 0.0);
    let again = evaluate_policy(&mut FlowPolicy::new(&net, 5).unwrap(), &mut env, &fast, &ecfg).unwrap();
    assert_eq!(r, again);
}

#[test]
fn rollout_log_is_consistent_with_metrics() {
    let mut env = ArmEnv::new(EnvConfig { episode_len: 30, ..EnvConfig::default() }).unwrap();
    let motion = sine(0.3, 0.5, 2.0);
    let log = rollout(&mut ExpertPolicy::default(), &mut env, &motion, 5, Mode::Base).unwrap();
    assert_eq!(log.steps(), 30);
    assert!(log.timed_out && !log.terminated);
    assert_eq!(log.ref_q[0], motion.q()[1]);
    let m = episode_metrics(&env, &log).unwrap();
    assert!(m.success && m.mpjpe_mm > 0.0 && m.dacc.is_some());
}

#[test]
fn per_episode_mean_differs_from_pooled_frames() {
    // Episode A: 1 frame off by 10 mm. Episode B: 3 frames off by 2 mm.
    let frame = |d: f64| vec![[d, 0.0, 0.0]];
    let zeros = |n: usize| vec![frame(0.0); n];
    let a = mpjpe(&zeros(1), &[frame(0.010)]).unwrap();
    let b = mpjpe(&zeros(3), &vec![frame(0.002); 3]).unwrap();
    let eps = [a, b].map(|e| EpisodeMetrics { mpjpe_mm: e, dvel: 0.0, dacc: None, success: true });
    let per_episode = aggregate_episodes(&eps).unwrap().mpjpe_mm;
    let pooled = (10.0 + 3.0 * 2.0) / 4.0;
    assert!((per_episode - 6.0).abs() < 1e-9);
    assert!((per_episode - pooled).abs() > 1.0);
}

#[test]
fn seed_mixing_separates_streams() {
    assert_ne!(mix(0, 0), mix(0, 1));
    assert_ne!(mix(0, 1), mix(1, 0));
    assert_eq!(mix(7, 3), mix(7, 3));
}
