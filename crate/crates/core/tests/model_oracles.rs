// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use hfp_core::model::{
    block_ppa, die_cost, die_yield, evaluate, hpwl_of_points, net_hpwl, rect_dims, AreaWindow, Net, ObjectiveConfig,
    ObjectiveWeights, PlacedBlock,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn yield_anchor_at_one_square_centimetre() {
    let y = die_yield(1e8, &tech("t", 1.0));
    assert!((y - 0.91433).abs() < 5e-5, "{y}");
    assert!(rel_err(y, 1.009f64.powi(-10)) <= 1e-12);
    assert_eq!(die_yield(0.0, &tech("t", 1.0)), 1.0);
}

#[test]
fn zero_weights_give_zero_objective() {
    let d = generated(12, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let placed: Vec<PlacedBlock> = (0..d.blocks.len())
        .map(|_| PlacedBlock {
            die: 0,
            tech: 0,
            ratio: 1.0,
            x: rng.gen_range(0.0..100.0),
            y: rng.gen_range(0.0..100.0),
            w: 1.0,
            h: 1.0,
        })
        .collect();
    let mut cfg = ObjectiveConfig::default();
    cfg.weights = ObjectiveWeights { omega: 0.0, beta: 0.0, gamma: 0.0, tau: 0.0, ..cfg.weights };
    let win = AreaWindow::new(1.0, &cfg.weights);
    let b = evaluate(&d, &cfg, &win, &placed, &[Some((10.0, 10.0)), Some((5.0, 5.0))]).unwrap();
    assert_eq!(b.f, 0.0);
}

#[test]
fn three_pin_net_across_two_dies_counts_once() {
    let nets = vec![Net { id: "n".into(), pins: vec![0, 1, 2], weight: 1.0 }];
    let counts = hfp_core::model::inter_die_counts(&nets, |b| [0, 1, 1][b], 2);
    assert_eq!(counts[0][1], 1);
    assert_eq!(pair_counts_oracle(&nets, &[0, 1, 1], 2), vec![(0, 1, 1)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn yield_matches_series_form(area in 0.0f64..5e9, delta in 0.01f64..2.0, alpha in 0.5f64..20.0) {
        let mut t = tech("t", 1.0);
        t.defect_density = delta;
        t.alpha = alpha;
        let y = die_yield(area, &t);
        prop_assert!(rel_err(y, yield_oracle(area, delta, alpha)) <= 1e-9);
        prop_assert!(rel_err(die_cost(area, &t, false), 1.0 / y) <= 1e-12);
        prop_assert!(rel_err(die_cost(area, &t, true), area / y) <= 1e-12 || area == 0.0);
    }

    #[test]
    fn yield_decreases_and_cost_increases(a in 1e6f64..1e9, da in 1e5f64..1e9) {
        let t = tech("t", 1.0);
        prop_assert!(die_yield(a + da, &t) < die_yield(a, &t));
        prop_assert!(die_cost(a + da, &t, false) > die_cost(a, &t, false));
    }

    #[test]
    fn hpwl_matches_pairwise_oracle(pts in prop::collection::vec((-1e4f64..1e4, -1e4f64..1e4), 0..=10), w in 0.1f64..4.0) {
        let expect = if pts.len() < 2 { 0.0 } else { hpwl_oracle(&pts) };
        prop_assert_eq!(hpwl_of_points(pts.iter().copied()), expect);
        let net = Net { id: "n".into(), pins: (0..pts.len()).collect(), weight: w };
        prop_assert_eq!(net_hpwl(&net, &pts).unwrap(), w * expect);
    }

    #[test]
    fn hpwl_is_translation_invariant(pts in prop::collection::vec((-1000i32..1000, -1000i32..1000), 2..=10), dx in -500i32..500, dy in -500i32..500) {
        let a: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let b: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| ((x + dx) as f64, (y + dy) as f64)).collect();
        prop_assert_eq!(hpwl_of_points(a), hpwl_of_points(b));
    }

    #[test]
    fn rect_dims_reproduce_area_and_swap(area in 1e-3f64..1e7, ratio in 0.1f64..10.0) {
        let (w, h) = rect_dims(area, ratio);
        prop_assert!(rel_err(w * h, area) <= 1e-9);
        prop_assert!(rel_err(h / w, ratio) <= 1e-9);
        let (w2, h2) = rect_dims(area, 1.0 / ratio);
        prop_assert!(rel_err(w, h2) <= 1e-12 && rel_err(h, w2) <= 1e-12);
    }

    #[test]
    fn ratio_penalty_symmetric_and_minimal_at_one(ratio in 0.1f64..10.0, kappa in 0.0f64..1.0) {
        let base = ppa(100.0, 10.0, 4.0, kappa);
        let a = block_ppa(&base, ratio);
        let b = block_ppa(&base, 1.0 / ratio);
        prop_assert!(rel_err(a.power, b.power) <= 1e-12);
        prop_assert!(rel_err(a.tns_magnitude, b.tns_magnitude) <= 1e-12);
        let one = block_ppa(&base, 1.0);
        prop_assert!(a.power >= one.power && a.tns_magnitude >= one.tns_magnitude);
        prop_assert_eq!(one.power, 10.0);
        prop_assert_eq!(a.area, 100.0);
    }

    #[test]
    fn evaluate_matches_independent_sum(seed in any::<u64>(), n in 4usize..20, margin in 0.0f64..20.0) {
        let d = generated(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let placed: Vec<PlacedBlock> = d
            .blocks
            .iter()
            .map(|b| {
                let die = rng.gen_range(0..2usize);
                let tech = d.dies[die].tech;
                let ratio = b.ratio_options[rng.gen_range(0..b.ratio_options.len())];
                let (w, h) = rect_dims(b.ppa[tech].unwrap().area, ratio);
                PlacedBlock { die, tech, ratio, x: rng.gen_range(0.0..500.0), y: rng.gen_range(0.0..500.0), w, h }
            })
            .collect();
        let ext = [(rng.gen_range(50.0..600.0), rng.gen_range(50.0..600.0)), (rng.gen_range(50.0..600.0), rng.gen_range(50.0..600.0))];
        let cfg = ObjectiveConfig { die_margin: margin, ..ObjectiveConfig::default() };
        let w = cfg.weights;
        let win = AreaWindow::new(ext[0].0 * ext[0].1, &w);
        let got = evaluate(&d, &cfg, &win, &placed, &[Some(ext[0]), Some(ext[1])]).unwrap();

        let (f, hpwl, power, cost, tns, areas) = objective_oracle(&d, &cfg, &placed, &ext);
        prop_assert!(rel_err(got.total_hpwl, hpwl) <= 1e-9);
        prop_assert!(rel_err(got.total_power, power) <= 1e-9);
        prop_assert!(rel_err(got.total_tns_magnitude, tns) <= 1e-9);
        prop_assert!(rel_err(got.total_cost, cost) <= 1e-9);
        prop_assert!(rel_err(got.f, f) <= 1e-9);
        for (i, a) in areas.iter().enumerate() {
            prop_assert!(rel_err(got.die_areas[i], *a) <= 1e-12);
        }
        let die_of: Vec<usize> = placed.iter().map(|p| p.die).collect();
        let pairs = pair_counts_oracle(&d.nets, &die_of, 2);
        prop_assert_eq!(&got.inter_die_net_counts, &pairs);
        let feasible = pairs.iter().all(|p| p.2 <= w.n_max) && areas.iter().all(|a| *a >= win.min && *a <= win.max);
        prop_assert_eq!(got.feasible, feasible);
        prop_assert_eq!(got.penalty == 0.0, feasible);
        // bit-identical on repeat
        prop_assert_eq!(got, evaluate(&d, &cfg, &win, &placed, &[Some(ext[0]), Some(ext[1])]).unwrap());
    }
}
