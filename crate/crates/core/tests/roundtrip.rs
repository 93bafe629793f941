use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flowtrack::distill::{load_residual, save_residual, ResidualPolicy};
use flowtrack::flow::{load_checkpoint, save_checkpoint, Checkpoint, SamplerCfg, VelocityField};
use flowtrack::motion::{load_motion, parse_motion, save_motion, to_json_string, MotionClip};

fn clip_strategy() -> impl Strategy<Value = MotionClip> {
    (1usize..4, 2usize..8, 1usize..4).prop_flat_map(|(j, t, b)| {
        let q = prop::collection::vec(prop::collection::vec(-10.0..10.0f64, j), t);
        let base = prop::collection::vec(prop::array::uniform3(-5.0..5.0f64), t);
        let quat = prop::collection::vec(prop::array::uniform4(-1.0..1.0f64), t);
        let bodies = prop::collection::vec(prop::collection::vec(prop::array::uniform3(-5.0..5.0f64), b), t);
        let contacts = prop::collection::vec(prop::collection::vec(any::<bool>(), 2), t);
        (Just(j), Just(b), 1.0..240.0f64, q, base, quat, bodies, contacts).prop_filter_map(
            "degenerate quaternion",
            |(j, b, fps, q, base, quat, bodies, contacts)| {
                let quat: Option<Vec<[f64; 4]>> = quat
                    .into_iter()
                    .map(|w| {
                        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                        (n > 0.1).then(|| w.map(|x| x / n))
                    })
                    .collect();
                MotionClip::new(
                    fps,
                    (0..j).map(|i| format!("j{i}")).collect(),
                    q,
                    base,
                    quat?,
                    bodies,
                    contacts,
                    vec![0, b - 1],
                )
                .ok()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn motion_text_round_trip_is_identity(clip in clip_strategy()) {
        let back = parse_motion(&to_json_string(&clip).unwrap()).unwrap();
        prop_assert_eq!(back, clip);
    }
}

#[test]
fn motion_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for i in 0..10 {
        let clip = clip_strategy().new_tree(&mut runner).unwrap().current();
        let path = dir.path().join(format!("{i}.json"));
        save_motion(&clip, &path).unwrap();
        assert_eq!(load_motion(&path).unwrap(), clip);
    }
}

#[test]
fn checkpoints_round_trip_in_both_precisions() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net: VelocityField<f64> = VelocityField::random(3, 7, 6, &[9, 4], &mut rng).unwrap();
    let ckpt = Checkpoint { net: net.clone(), sampler: SamplerCfg { steps: 9, alpha: 2.5, beta: 0.5, seed: 0 } };
    let p = dir.path().join("a.json");
    save_checkpoint(&ckpt, &p).unwrap();
    assert_eq!(load_checkpoint::<f64>(&p).unwrap(), ckpt);

    let small = Checkpoint { net: net.cast::<f32>(), sampler: ckpt.sampler };
    save_checkpoint(&small, &p).unwrap();
    assert_eq!(load_checkpoint::<f32>(&p).unwrap(), small);
}

#[test]
fn residual_round_trip_and_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = ResidualPolicy::new(2, &[5, 3], 0.4, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    r.params_mut()[0] = 0.1 + 0.2;
    let p = dir.path().join("r.json");
    save_residual(&r, &p).unwrap();
    assert_eq!(load_residual(&p).unwrap(), r);
    std::fs::write(&p, r.to_json().replace("\"version\":1", "\"version\":2")).unwrap();
    assert!(load_residual(&p).is_err());
}
