// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use hfp_core::bench::{generate, GeneratorSpec};
use hfp_core::bstar::{Packing, Rect};
use hfp_core::model::{BasePpa, Block, Design, Die, Net, Technology};

pub fn tech(id: &str, scale: f64) -> Technology {
    Technology {
        id: id.into(),
        scale_to_oldest: scale,
        defect_density: 0.09,
        alpha: 10.0,
        cost_per_area: 1.0,
    }
}

pub fn ppa(area: f64, power: f64, tns: f64, kappa: f64) -> BasePpa {
    BasePpa {
        area,
        power,
        tns_magnitude: tns,
        ratio_penalty: kappa,
    }
}

/// One technology, `n_dies` dies, blocks with the given areas and unit ratio only.
pub fn flat_design(areas: &[f64], nets: &[&[usize]], n_dies: usize) -> Design {
    let blocks = areas
        .iter()
        .enumerate()
        .map(|(i, &a)| Block {
            id: format!("b{i}"),
            ppa: vec![Some(ppa(a, 10.0, 5.0, 0.1))],
            ratio_options: vec![0.5, 1.0, 2.0],
            hard_ip: None,
        })
        .collect();
    let nets = nets
        .iter()
        .enumerate()
        .map(|(i, p)| Net {
            id: format!("n{i}"),
            pins: p.to_vec(),
            weight: 1.0,
        })
        .collect();
    let dies = (0..n_dies).map(|d| Die { id: format!("d{d}"), tech: 0 }).collect();
    Design::new(vec![tech("t0", 1.0)], blocks, nets, dies).unwrap()
}

pub fn generated(n_blocks: usize, seed: u64) -> Design {
    generate(&GeneratorSpec {
        n_blocks,
        seed,
        ..GeneratorSpec::default()
    })
    .unwrap()
}

/// O(n²) overlap check on open interiors.
pub fn any_overlap(rects: &[Rect]) -> Option<(usize, usize)> {
    for i in 0..rects.len() {
        for j in i + 1..rects.len() {
            let (a, b) = (&rects[i], &rects[j]);
            let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
            let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
            let tol = 1e-9 * (a.w + a.h + b.w + b.h);
            if ix > tol && iy > tol {
                return Some((i, j));
            }
        }
    }
    None
}

/// Rectangles lie in the first quadrant and the packing's extent is their tight bounding box.
pub fn tight_bbox(p: &Packing) -> bool {
    let w = p.rects.iter().map(|r| r.x + r.w).fold(0.0, f64::max);
    let h = p.rects.iter().map(|r| r.y + r.h).fold(0.0, f64::max);
    let inside = p.rects.iter().all(|r| r.x >= 0.0 && r.y >= 0.0);
    inside && (p.width - w).abs() <= 1e-9 * w.max(1.0) && (p.height - h).abs() <= 1e-9 * h.max(1.0)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Yield from its series form: `exp(−α·ln(1 + δA/α))`, area in µm².
pub fn yield_oracle(area_um2: f64, delta: f64, alpha: f64) -> f64 {
    (-alpha * (delta * area_um2 * 1e-8 / alpha).ln_1p()).exp()
}

/// Half-perimeter as the largest pairwise x gap plus the largest pairwise y gap.
pub fn hpwl_oracle(points: &[(f64, f64)]) -> f64 {
    let (mut dx, mut dy) = (0.0f64, 0.0f64);
    for a in points {
        for b in points {
            dx = dx.max(a.0 - b.0);
            dy = dy.max(a.1 - b.1);
        }
    }
    dx + dy
}

/// Number of nets that touch both dies of each pair `i < j`, by direct enumeration.
pub fn pair_counts_oracle(nets: &[Net], die_of: &[usize], n_dies: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n_dies {
        for j in i + 1..n_dies {
            let n = nets
                .iter()
                .filter(|net| net.pins.iter().any(|&p| die_of[p] == i) && net.pins.iter().any(|&p| die_of[p] == j))
                .count();
            out.push((i, j, n));
        }
    }
    out
}

pub mod numerics {
    use hfp_core::bstar::random_tree;
    use hfp_core::floorplan::{DieEnv, Floorplan};
    use hfp_core::model::{AreaWindow, BlockState, Design, ObjectiveConfig, ObjectiveWeights};
    use hfp_core::ppo::agent::{policy_gradient, policy_objective, value_gradient, value_loss, Sample};
    use hfp_core::ppo::{Activation, DenseNet, PpoAgent, PpoConfig, RlStepper, Transition};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub const EPS: f64 = 1e-6;

    /// `‖a − b‖ / max(‖a‖, ‖b‖)`.
    pub fn vec_rel_err(a: &[f64], b: &[f64]) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let scale = norm(a).max(norm(b));
        if scale == 0.0 {
            0.0
        } else {
            norm(&diff) / scale
        }
    }

    /// Central differences of `f` at `net`'s parameters.
    pub fn numeric_grad(net: &DenseNet, f: impl Fn(&DenseNet) -> f64) -> Vec<f64> {
        let p0 = net.params();
        let mut probe = net.clone();
        (0..p0.len())
            .map(|i| {
                let mut p = p0.clone();
                p[i] = p0[i] + EPS;
                probe.set_params(&p).unwrap();
                let up = f(&probe);
                p[i] = p0[i] - EPS;
                probe.set_params(&p).unwrap();
                let down = f(&probe);
                (up - down) / (2.0 * EPS)
            })
            .collect()
    }

    fn batch(net: &DenseNet, n_in: usize, rng: &mut ChaCha8Rng) -> Vec<Sample> {
        (0..6)
            .map(|_| {
                let features: Vec<f64> = (0..n_in).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let probs = net.forward(&features).unwrap();
                let action = rng.gen_range(0..probs.len());
                Sample {
                    // ratios stay strictly inside the clip band
                    log_prob_old: probs[action].ln() + rng.gen_range(-0.1..0.1),
                    features,
                    action,
                    advantage: rng.gen_range(-2.0..2.0),
                    ret: rng.gen_range(-3.0..3.0),
                }
            })
            .collect()
    }

    /// Worst relative error of the policy and value gradients on a random small network.
    pub fn gradient_errors(seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_in = rng.gen_range(2..5);
        let hidden = rng.gen_range(2..5);
        let policy = DenseNet::new(&[n_in, hidden, 4], Activation::Relu, Activation::Softmax, &mut rng).unwrap();
        let value = DenseNet::new(&[n_in, hidden, 1], Activation::Relu, Activation::Identity, &mut rng).unwrap();
        assert!(policy.n_params() <= 50 && value.n_params() <= 50);
        let b = batch(&policy, n_in, &mut rng);
        let (lambda, ent) = (0.2, 0.01);
        let (g, _, _) = policy_gradient(&policy, &b, lambda, ent).unwrap();
        let n = numeric_grad(&policy, |p| policy_objective(p, &b, lambda, ent).unwrap());
        let (gv, _) = value_gradient(&value, &b).unwrap();
        let nv = numeric_grad(&value, |v| value_loss(v, &b).unwrap());
        (vec_rel_err(&g, &n), vec_rel_err(&gv, &nv))
    }

    /// `Â_t = Σ_{l≥0} η^l r_{t+l} − V(s_t)` by a double loop.
    pub fn advantage_oracle(rewards: &[f64], values: &[f64], eta: f64) -> (Vec<f64>, Vec<f64>) {
        let mut adv = Vec::new();
        let mut ret = Vec::new();
        for t in 0..rewards.len() {
            let mut g = 0.0;
            for l in (0..rewards.len() - t).rev() {
                g = rewards[t + l] + eta * g;
            }
            ret.push(g);
            adv.push(g - values[t]);
        }
        (adv, ret)
    }

    pub fn transitions(rewards: &[f64], values: &[f64]) -> Vec<Transition> {
        rewards
            .iter()
            .zip(values)
            .map(|(&reward, &value)| Transition {
                features: vec![],
                action: 0,
                log_prob: 0.0,
                reward,
                value,
            })
            .collect()
    }

    /// Runs `steps` RL actions on a one-die floorplan; returns the largest
    /// `|Σr − (f_start − f_end)|` over finished episodes relative to `f_start`.
    pub fn telescoping_gap(design: &Design, seed: u64, steps: usize, keep_worse: bool) -> (usize, f64) {
        let n = design.blocks.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = vec![BlockState { die: 0, tech: 0, ratio: 1.0 }; n];
        let tree = random_tree(&(0..n).collect::<Vec<_>>(), &mut rng);
        let z: f64 = design.blocks.iter().map(|b| b.ppa[0].unwrap().area).sum();
        let ocfg = ObjectiveConfig { penalty_weight: 0.0, ..ObjectiveConfig::default() };
        let mut fp = Floorplan::new(design, ocfg, AreaWindow::new(z, &ObjectiveWeights::default()), 15.0, states, vec![tree]).unwrap();
        let cfg = PpoConfig { steps_per_trajectory: 16, keep_worse, policy_hidden: vec![8], value_hidden: vec![8], ..PpoConfig::default() };
        let mut agent = PpoAgent::new(5 * cfg.feature_height, 4, &cfg, &mut rng).unwrap();
        let mut env = DieEnv::new(&mut fp, 0);
        let mut stepper = RlStepper::new();
        for _ in 0..steps {
            stepper.step(&mut env, &mut agent, &cfg, &mut rng).unwrap();
        }
        let worst = stepper
            .episode_log
            .iter()
            .map(|e| (e.total_reward - (e.start_cost - e.end_cost)).abs() / e.start_cost.abs().max(1.0))
            .fold(0.0, f64::max);
        (stepper.episode_log.len(), worst)
    }
}

/// Independent `(f, hpwl, power, cost, tns, die areas)` of a placement.
pub fn objective_oracle(
    d: &Design,
    cfg: &hfp_core::model::ObjectiveConfig,
    placed: &[hfp_core::model::PlacedBlock],
    extents: &[(f64, f64)],
) -> (f64, f64, f64, f64, f64, Vec<f64>) {
    let centers: Vec<(f64, f64)> = placed.iter().map(|p| (p.x + p.w / 2.0, p.y + p.h / 2.0)).collect();
    let hpwl: f64 = d
        .nets
        .iter()
        .map(|n| n.weight * hpwl_oracle(&n.pins.iter().map(|&p| centers[p]).collect::<Vec<_>>()))
        .sum();
    let (mut power, mut tns) = (0.0, 0.0);
    for (b, p) in placed.iter().enumerate() {
        let base = d.blocks[b].ppa[p.tech].unwrap();
        let s = 1.0 + base.ratio_penalty * (p.ratio + 1.0 / p.ratio - 2.0);
        power += base.power * s;
        tns += base.tns_magnitude * s;
    }
    let m = cfg.die_margin;
    let areas: Vec<f64> = extents.iter().map(|(x, y)| (x + 2.0 * m) * (y + 2.0 * m)).collect();
    let cost: f64 = d
        .dies
        .iter()
        .zip(&areas)
        .map(|(die, &a)| {
            let t = &d.technologies[die.tech];
            let c = t.cost_per_area / yield_oracle(a, t.defect_density, t.alpha);
            if cfg.cost_scale_by_area {
                c * a
            } else {
                c
            }
        })
        .sum();
    let w = &cfg.weights;
    let f = w.omega * hpwl + w.beta * power + w.gamma * cost + w.tau * tns;
    (f, hpwl, power, cost, tns, areas)
}
