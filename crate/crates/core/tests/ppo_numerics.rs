// SPDX-License-Identifier: Apache-2.0

mod common;

use common::numerics::*;
use common::flat_design;
use hfp_core::bench::{generate, GeneratorSpec};
use hfp_core::ppo::agent::{clip_surrogate_dp, discounted_returns};
use hfp_core::ppo::{advantages, clip_surrogate, PpoAgent, PpoConfig, Trajectory};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gradients_match_central_differences() {
    for seed in 0..25 {
        let (p, v) = gradient_errors(seed);
        assert!(p <= 1e-5, "seed {seed}: policy gradient error {p}");
        assert!(v <= 1e-5, "seed {seed}: value gradient error {v}");
    }
}

#[test]
fn rewards_telescope_per_episode() {
    for (seed, keep) in [(1, false), (2, true), (3, false)] {
        let d = generate(&GeneratorSpec { n_blocks: 10, dies: vec![0], seed, ..GeneratorSpec::default() }).unwrap();
        let (episodes, gap) = telescoping_gap(&d, seed, 200, keep);
        assert!(episodes >= 10);
        assert!(gap <= 1e-9, "seed {seed}: {gap}");
    }
    let d = flat_design(&[40.0, 30.0, 20.0, 50.0], &[&[0, 1], &[2, 3]], 1);
    assert!(telescoping_gap(&d, 4, 64, true).1 <= 1e-9);
}

#[test]
fn zero_learning_rate_leaves_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = PpoConfig { lr_policy: 0.0, lr_value: 0.0, policy_hidden: vec![6], value_hidden: vec![6], ..PpoConfig::default() };
    let mut agent = PpoAgent::new(30, 4, &cfg, &mut rng).unwrap();
    let (p, v) = (agent.policy.params(), agent.value.params());
    let mut traj = Trajectory {
        steps: transitions(&[1.0, -2.0, 0.5, 0.0], &[0.1, 0.2, 0.3, 0.4]),
        ..Trajectory::default()
    };
    for s in &mut traj.steps {
        s.features = vec![0.3; 30];
        s.log_prob = (0.25f64).ln();
    }
    traj.finish(cfg.eta);
    agent.update(&[traj], &cfg, &mut rng).unwrap();
    assert_eq!(agent.policy.params(), p);
    assert_eq!(agent.value.params(), v);
}

#[test]
fn untrained_policy_is_near_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let agent = PpoAgent::new(30, 4, &PpoConfig::default(), &mut rng).unwrap();
    let probs = agent.policy.forward(&PpoAgent::preprocess(&[100.0; 30])).unwrap();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    assert!(probs.iter().all(|p| (p - 0.25).abs() < 0.05), "{probs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn advantages_match_double_loop(rv in prop::collection::vec((-10.0f64..10.0, -5.0f64..5.0), 1..=20), eta in 0.01f64..=1.0) {
        let rewards: Vec<f64> = rv.iter().map(|x| x.0).collect();
        let values: Vec<f64> = rv.iter().map(|x| x.1).collect();
        let (adv, ret) = advantages(&transitions(&rewards, &values), eta);
        let (oa, or) = advantage_oracle(&rewards, &values, eta);
        prop_assert_eq!(adv, oa);
        prop_assert_eq!(ret.clone(), or);
        prop_assert_eq!(ret, discounted_returns(&rewards, eta));
    }

    #[test]
    fn clip_surrogate_is_monotone_and_flat_outside_band(adv in -5.0f64..5.0, lambda in 0.05f64..0.5) {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.005).collect();
        for w in grid.windows(2) {
            let (a, b) = (clip_surrogate(w[0], adv, lambda), clip_surrogate(w[1], adv, lambda));
            if adv > 0.0 {
                prop_assert!(b >= a);
            } else {
                prop_assert!(b <= a);
            }
        }
        if adv > 0.0 {
            prop_assert_eq!(clip_surrogate(1.0 + lambda + 0.1, adv, lambda), clip_surrogate(1.0 + lambda + 0.5, adv, lambda));
            prop_assert_eq!(clip_surrogate_dp(1.0 + lambda + 0.1, adv, lambda), 0.0);
        } else if adv < 0.0 {
            prop_assert_eq!(clip_surrogate(1.0 - lambda - 0.01, adv, lambda), clip_surrogate(0.0, adv, lambda));
            prop_assert_eq!(clip_surrogate_dp(0.1f64.min(1.0 - lambda - 0.01), adv, lambda), 0.0);
        }
    }
}
