use super::*;
use crate::actuation::ActuatorCatalog;
use crate::motion::{synth_motion, SynthMotionSpec};

fn calm_cfg() -> EnvConfig {
    EnvConfig { randomization: RandomizationCfg::none(), ..EnvConfig::default() }
}

fn sine(amp: f64, freq: f64, seconds: f64) -> MotionClip {
    synth_motion(&SynthMotionSpec::uniform(2, seconds, 50.0, amp, freq)).unwrap()
}

#[test]
fn zero_gravity_rest_is_fixed_point() {
    let mut env = ArmEnv::new(EnvConfig { gravity: 0.0, ..calm_cfg() }).unwrap();
    env.reset(&sine(0.0, 1.0, 2.0), 1, Mode::Base).unwrap();
    for _ in 0..20 {
        env.step(&[0.0, 0.0]).unwrap();
    }
    assert_eq!(env.q(), &[0.0, 0.0]);
    assert_eq!(env.qdot(), &[0.0, 0.0]);
}

#[test]
fn zero_noise_reset_matches_frame_zero() {
    let mut spec = SynthMotionSpec::uniform(2, 2.0, 50.0, 0.4, 0.5);
    spec.phase = vec![0.3, -1.0];
    let motion = synth_motion(&spec).unwrap();
    let mut env = ArmEnv::new(calm_cfg()).unwrap();
    let obs = env.reset(&motion, 7, Mode::Base).unwrap();
    assert_eq!(env.q(), motion.q()[0].as_slice());
    assert_eq!(&obs[..2], motion.q()[0].as_slice());
}

#[test]
fn reset_is_seeded() {
    let motion = sine(0.3, 0.5, 2.0);
    let mut a = ArmEnv::new(EnvConfig::default()).unwrap();
    let mut b = ArmEnv::new(EnvConfig::default()).unwrap();
    assert_eq!(a.reset(&motion, 42, Mode::Base).unwrap(), b.reset(&motion, 42, Mode::Base).unwrap());
    assert_eq!(a.model(), b.model());
    let c = a.reset(&motion, 43, Mode::Base).unwrap();
    assert_ne!(c, b.build_observation());
}

#[test]
fn aggressive_noise_stays_within_scaled_range() {
    let motion = sine(0.0, 0.5, 2.0);
    let cfg = EnvConfig::default();
    let base = cfg.randomization.pose_noise;
    let mut env = ArmEnv::new(cfg).unwrap();
    let mut widest: f64 = 0.0;
    for seed in 0..300 {
        env.reset(&motion, seed, Mode::Aggressive).unwrap();
        widest = env.q().iter().fold(widest, |m, x| m.max(x.abs()));
    }
    assert!(widest <= 1.5 * base + 1e-15);
    assert!(widest > base, "aggressive draws should exceed the base range sometimes");
}

#[test]
fn observation_layout() {
    let mut env = ArmEnv::new(calm_cfg()).unwrap();
    let obs = env.reset(&sine(0.2, 0.5, 2.0), 0, Mode::Base).unwrap();
    let n = 2;
    let h = env.config().history_len;
    assert_eq!(obs.len(), 3 * n + 2 * n + 2 + h * 3 * n);
    assert_eq!(obs.len(), env.obs_dim());
    // history: current proprio first, then zeros
    let hist = &obs[3 * n + 2 * n + 2..];
    assert_eq!(&hist[..3 * n], &obs[..3 * n]);
    assert!(hist[3 * n..].iter().all(|&x| x == 0.0));
    env.step(&[0.1, 0.1]).unwrap();
    let obs = env.build_observation();
    let hist = &obs[3 * n + 2 * n + 2..];
    assert!(hist[..6 * n].iter().any(|&x| x != 0.0));
    assert!(hist[6 * n..].iter().all(|&x| x == 0.0));
}

#[test]
fn envelope_limit_shows_in_info() {
    let mut env = ArmEnv::new(EnvConfig { gravity: 0.0, substeps: 1, ..calm_cfg() }).unwrap();
    env.reset(&sine(0.0, 0.5, 2.0), 0, Mode::Base).unwrap();
    env.set_state(&[0.0, 0.0], &[18.6, -18.6]).unwrap();
    let out = env.step(&[-50.0, 50.0]).unwrap();
    let p = env.actuators()[0];
    for j in 0..2 {
        let expect = clip_torque(out.info.tau_cmd[j], out.info.qdot_pre[j], &p);
        assert_eq!(out.info.tau_clipped[j], expect);
        assert!((out.info.tau_clipped[j].abs() - out.info.envelope_limit[j]).abs() < 1e-12);
        assert!(out.info.tau_cmd[j].abs() > out.info.envelope_limit[j]);
    }
}

#[test]
fn rejects_bad_actions_and_motions() {
    let mut env = ArmEnv::new(calm_cfg()).unwrap();
    let one_joint = synth_motion(&SynthMotionSpec::uniform(1, 1.0, 50.0, 0.1, 1.0)).unwrap();
    assert!(matches!(env.reset(&one_joint, 0, Mode::Base), Err(Error::Argument(_))));
    env.reset(&sine(0.1, 0.5, 1.0), 0, Mode::Base).unwrap();
    assert!(matches!(env.step(&[f64::NAN, 0.0]), Err(Error::Argument(_))));
    assert!(matches!(env.step(&[0.0]), Err(Error::Dimension(_))));
}

fn expert_episode(env: &mut ArmEnv, motion: &MotionClip, expert: &ExpertPolicy, seed: u64) -> (f64, usize, bool) {
    env.reset(motion, seed, Mode::Base).unwrap();
    let mut err = 0.0;
    let mut steps = 0;
    loop {
        let a = expert.action(env).unwrap();
        let out = env.step(&a).unwrap();
        let (r, _) = env.reference_at(env.steps()).unwrap();
        err += r.iter().zip(env.q()).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        steps += 1;
        if out.done {
            return (err / steps as f64, steps, out.info.timed_out);
        }
    }
}

#[test]
fn expert_tracks_slow_sine() {
    let motion = sine(0.3, 0.25, 10.0);
    let mut env = ArmEnv::new(EnvConfig::default()).unwrap();
    let (err, steps, timed_out) = expert_episode(&mut env, &motion, &ExpertPolicy::default(), 3);
    assert!(err < 0.1 * 0.3, "mean joint error {err}");
    assert_eq!(steps, 500);
    assert!(timed_out);
}

#[test]
fn expert_without_feedforward_targets_reference() {
    let motion = sine(0.3, 0.25, 2.0);
    let mut env = ArmEnv::new(EnvConfig { gravity: 0.0, ..calm_cfg() }).unwrap();
    env.reset(&motion, 0, Mode::Base).unwrap();
    let expert = ExpertPolicy { lookahead: 0, velocity_ff: 0.0, gravity_comp: false, action_clip: 100.0 };
    let a = expert.action(&env).unwrap();
    for (j, g) in env.nominal_gains().iter().enumerate() {
        assert!((crate::actuation::pd_target(a[j], g) - motion.q()[0][j]).abs() < 1e-12);
    }
    assert_eq!(a, expert.action(&env).unwrap());
}

#[test]
fn friction_dissipates_energy() {
    let cat = ActuatorCatalog::builtin();
    let acts = vec![cat.get("7520-22.5").unwrap(); 3];
    for gravity in [0.0, 9.81] {
        let model = ChainModel { masses: vec![1.0, 0.8, 0.5], lengths: vec![0.3, 0.25, 0.2], armature: acts.iter().map(|p| p.armature).collect(), gravity };
        let mut q = vec![1.2, -0.8, 0.5];
        let mut qd = vec![2.0, -3.0, 4.0];
        let h = 0.005;
        let mut e = model.energy(&q, &qd);
        for k in 0..2000 {
            model.step(&mut q, &mut qd, &[0.0; 3], &acts, h).unwrap();
            let e2 = model.energy(&q, &qd);
            assert!(e2 <= e + 1e-6 * h, "g={gravity} step {k}: {e} -> {e2}");
            e = e2;
        }
    }
}
