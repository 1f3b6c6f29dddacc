// SPDX-License-Identifier: Apache-2.0

//! End-to-end pipeline: initial assignment, round-robin intra-die optimization with
//! periodic inter-die refinement, and the partition-based baseline.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assign::{estimate_z, initial_plan};
use crate::bstar::{random_tree, BStarTree, MoveKind, Packing, Side};
use crate::error::ModelError;
use crate::floorplan::{DieEnv, DieState, Floorplan, Snapshot};
use crate::model::{
    constraint_violation, AreaWindow, BlockState, Design, ObjectiveBreakdown, ObjectiveConfig, PlacedBlock,
};
use crate::partition::{partition, Hypergraph};
use crate::ppo::{PpoAgent, PpoConfig, RlStepper};
use crate::sa::{Convergence, SaConfig, SaStepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Baseline,
    Sa,
    Rl,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Baseline, Method::Sa, Method::Rl];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Sa => "sa",
            Method::Rl => "rl",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "baseline" => Ok(Method::Baseline),
            "sa" => Ok(Method::Sa),
            "rl" => Ok(Method::Rl),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub k_interval: usize,
    pub min_die_spacing: f64,
    pub spacing_per_net: f64,
    /// Skip the "objective not worse" gate.
    pub accept_any: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            k_interval: 20,
            min_die_spacing: 15.0,
            spacing_per_net: 0.0,
            accept_any: false,
        }
    }
}

impl RefineConfig {
    pub fn gap(&self, n_max: usize) -> f64 {
        self.min_die_spacing.max(self.spacing_per_net * n_max as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub objective: ObjectiveConfig,
    pub refine: RefineConfig,
    pub sa: SaConfig,
    pub ppo: PpoConfig,
    /// Shared budget of optimizer moves plus refinements.
    pub max_total_steps: usize,
    /// Optional cap on optimizer moves per die.
    pub per_die_steps: Option<usize>,
    pub stop_epsilon: f64,
    /// Convergence window per active die.
    pub window_per_die: usize,
    pub partition_tolerance: f64,
    pub partition_starts: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            objective: ObjectiveConfig::default(),
            refine: RefineConfig::default(),
            sa: SaConfig::default(),
            ppo: PpoConfig::default(),
            max_total_steps: 2500,
            per_die_steps: None,
            stop_epsilon: 1e-4,
            window_per_die: 100,
            partition_tolerance: 0.1,
            partition_starts: 4,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.objective.weights.validate()?;
        self.sa.validate()?;
        self.ppo.validate()?;
        if self.refine.k_interval == 0 {
            return Err(ModelError::Config("k_interval must be >= 1".into()));
        }
        if !(self.refine.min_die_spacing >= 0.0 && self.refine.spacing_per_net >= 0.0 && self.objective.die_margin >= 0.0) {
            return Err(ModelError::Config("spacings and margin must be >= 0".into()));
        }
        if !(self.stop_epsilon > 0.0) || self.window_per_die == 0 {
            return Err(ModelError::Config("stop_epsilon and window must be positive".into()));
        }
        if !(self.objective.penalty_weight >= 0.0) {
            return Err(ModelError::Config("penalty weight must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    pub f: f64,
    pub cost: f64,
    pub best_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmfpSolution {
    pub method: Method,
    pub seed: u64,
    pub window: AreaWindow,
    pub gap: f64,
    pub states: Vec<BlockState>,
    pub trees: Vec<BStarTree>,
    pub packings: Vec<Packing>,
    pub origins: Vec<(f64, f64)>,
    pub placed: Vec<PlacedBlock>,
    pub breakdown: ObjectiveBreakdown,
    pub log: Vec<LogEntry>,
    pub steps: usize,
    pub refinements_tried: usize,
    pub refinements_applied: usize,
}

impl MmfpSolution {
    fn from_floorplan(fp: &Floorplan<'_>, method: Method, seed: u64, log: Vec<LogEntry>, stats: DriveStats) -> Result<Self, ModelError> {
        Ok(Self {
            method,
            seed,
            window: fp.window,
            gap: fp.gap,
            states: fp.states().to_vec(),
            trees: (0..fp.n_dies()).map(|d| fp.die(d).tree.clone()).collect(),
            packings: (0..fp.n_dies()).map(|d| fp.die(d).packing.clone()).collect(),
            origins: fp.origins().to_vec(),
            placed: fp.placed_blocks(),
            breakdown: fp.evaluate()?,
            log,
            steps: stats.steps,
            refinements_tried: stats.refine_tried,
            refinements_applied: stats.refine_applied,
        })
    }

    /// Rebuilds the floorplan from states and trees and evaluates it again.
    pub fn reevaluate(&self, design: &Design, cfg: &ObjectiveConfig) -> Result<ObjectiveBreakdown, ModelError> {
        let fp = Floorplan::new(design, *cfg, self.window, self.gap, self.states.clone(), self.trees.clone())?;
        fp.evaluate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineOutcome {
    pub applied: bool,
    pub block: Option<usize>,
    pub from: usize,
    pub to: usize,
}

/// Distance from a point to an axis-aligned rectangle (zero inside).
fn point_rect_distance(p: (f64, f64), origin: (f64, f64), extent: (f64, f64)) -> f64 {
    let dx = (origin.0 - p.0).max(0.0).max(p.0 - (origin.0 + extent.0));
    let dy = (origin.1 - p.1).max(0.0).max(p.1 - (origin.1 + extent.1));
    dx.hypot(dy)
}

/// Free slot of die `to` whose attachment point lies nearest die `from`.
fn nearest_slot(fp: &Floorplan<'_>, to: usize, from: usize) -> Option<(usize, Side)> {
    let df = fp.die(to);
    let (ox, oy) = fp.origins()[to];
    let m = fp.cfg.die_margin;
    let target_origin = fp.origins()[from];
    let target_extent = fp.die_extent(from);
    let mut best: Option<(f64, (usize, Side))> = None;
    for (node, side) in df.tree.free_slots() {
        let r = df.packing.rects[node];
        let (x, y) = match side {
            Side::Left => (r.x + r.w, r.y),
            Side::Right => (r.x, r.y + r.h),
        };
        let d = point_rect_distance((ox + m + x, oy + m + y), target_origin, target_extent);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, (node, side)));
        }
    }
    best.map(|(_, s)| s)
}

fn violation_of(bd: &ObjectiveBreakdown, window: &AreaWindow, n_max: usize) -> f64 {
    constraint_violation(&bd.inter_die_net_counts, &bd.die_areas, window, n_max)
}

/// Moves one random block to another die when constraints and (unless `accept_any`)
/// the penalized objective allow it; otherwise leaves the floorplan unchanged.
pub fn refine_step<R: Rng + ?Sized>(fp: &mut Floorplan<'_>, rng: &mut R, cfg: &RefineConfig) -> Result<RefineOutcome, ModelError> {
    let nd = fp.n_dies();
    let n = fp.states().len();
    let none = RefineOutcome {
        applied: false,
        block: None,
        from: 0,
        to: 0,
    };
    if nd < 2 || n == 0 {
        return Ok(none);
    }
    let design = fp.design;
    let b = rng.gen_range(0..n);
    let from = fp.states()[b].die;
    let blk = &design.blocks[b];
    let targets: Vec<usize> = (0..nd)
        .filter(|&j| j != from)
        .filter(|&j| {
            let t = design.dies[j].tech;
            match blk.hard_ip {
                Some(lock) => lock.tech == t,
                None => blk.supports(t),
            }
        })
        .collect();
    let Some(&to) = targets.choose(rng) else {
        return Ok(RefineOutcome {
            block: Some(b),
            from,
            ..none
        });
    };
    let before = fp.evaluate()?;
    let snap = fp.snapshot();
    let slot = nearest_slot(fp, to, from);
    fp.move_block(b, to, slot)?;
    let after = fp.evaluate()?;
    let n_max = fp.cfg.weights.n_max;
    let v_before = violation_of(&before, &fp.window, n_max);
    let v_after = violation_of(&after, &fp.window, n_max);
    let constraints_ok = v_after == 0.0 || v_after < v_before;
    let applied = constraints_ok && (cfg.accept_any || after.cost() <= before.cost());
    if !applied {
        fp.restore(&snap);
    }
    Ok(RefineOutcome {
        applied,
        block: Some(b),
        from,
        to,
    })
}

enum Optimizer {
    Sa(Vec<SaStepper>),
    Rl {
        agent: Box<PpoAgent>,
        steppers: Vec<RlStepper<DieState>>,
    },
}

#[derive(Debug, Clone, Copy, Default)]
struct DriveStats {
    steps: usize,
    refine_tried: usize,
    refine_applied: usize,
}

fn audit_locks(fp: &Floorplan<'_>) -> Result<(), ModelError> {
    for (b, blk) in fp.design.blocks.iter().enumerate() {
        if let Some(lock) = blk.hard_ip {
            let s = fp.states()[b];
            if s.tech != lock.tech || s.ratio != lock.ratio {
                return Err(ModelError::State(format!("hard IP `{}` left its lock", blk.id)));
            }
        }
    }
    Ok(())
}

fn drive<R: Rng + ?Sized>(
    fp: &mut Floorplan<'_>,
    opt: &mut Optimizer,
    cfg: &RunConfig,
    refine: bool,
    rng: &mut R,
    observe: &mut dyn FnMut(usize, &[BlockState]),
) -> Result<(Vec<LogEntry>, DriveStats), ModelError> {
    let nd = fp.n_dies();
    let active = (0..nd).filter(|&d| !fp.die(d).tree.is_empty()).count().max(1);
    let mut conv = Convergence::new(cfg.window_per_die * active, cfg.stop_epsilon);
    let first = fp.evaluate()?;
    let mut best_cost = first.cost();
    let mut best_f = first.f;
    let mut best_feasible = first.feasible;
    let mut best: Snapshot = fp.snapshot();
    let mut log = vec![LogEntry {
        step: 0,
        f: first.f,
        cost: first.cost(),
        best_cost,
    }];
    let mut stats = DriveStats::default();
    let mut die_moves = vec![0usize; nd];
    let mut moves = 0usize;
    let mut cursor = 0usize;
    // A die whose own cost stalled while its area is in the window sits out until a
    // refinement touches it.
    let mut parked = vec![false; nd];
    let mut die_conv = vec![Convergence::new(cfg.window_per_die, cfg.stop_epsilon); nd];
    let mut die_best = vec![f64::INFINITY; nd];
    while stats.steps < cfg.max_total_steps {
        let eligible = |d: usize, parked: &[bool]| {
            !parked[d] && !fp.die(d).tree.is_empty() && cfg.per_die_steps.is_none_or(|cap| die_moves[d] < cap)
        };
        let mut next = (0..nd).map(|i| (cursor + i) % nd).find(|&d| eligible(d, &parked));
        if next.is_none() && parked.iter().any(|&p| p) {
            if best_feasible {
                break;
            }
            parked.iter_mut().for_each(|p| *p = false);
            die_conv.iter_mut().for_each(Convergence::reset);
            next = (0..nd).map(|i| (cursor + i) % nd).find(|&d| eligible(d, &parked));
        }
        let Some(d) = next else { break };
        cursor = (d + 1) % nd;
        let out = {
            let mut env = DieEnv::new(fp, d);
            match opt {
                Optimizer::Sa(st) => st[d].step(&mut env, &cfg.sa, rng)?,
                Optimizer::Rl { agent, steppers } => steppers[d].step(&mut env, agent, &cfg.ppo, rng)?,
            }
        };
        die_best[d] = die_best[d].min(out.cost);
        if die_conv[d].push(die_best[d]) && fp.window.contains(fp.die_area(d)) {
            parked[d] = true;
        }
        die_moves[d] += 1;
        moves += 1;
        stats.steps += 1;
        if refine && nd >= 2 && moves.is_multiple_of(cfg.refine.k_interval) && stats.steps < cfg.max_total_steps {
            let r = refine_step(fp, rng, &cfg.refine)?;
            stats.steps += 1;
            stats.refine_tried += 1;
            if r.applied {
                stats.refine_applied += 1;
                for e in [r.from, r.to] {
                    parked[e] = false;
                    die_conv[e].reset();
                    die_best[e] = f64::INFINITY;
                }
                if let Optimizer::Rl { steppers, .. } = opt {
                    steppers[r.from].invalidate();
                    steppers[r.to].invalidate();
                }
            }
        }
        audit_locks(fp)?;
        observe(stats.steps, fp.states());
        let bd = fp.evaluate()?;
        if bd.cost() < best_cost {
            best_cost = bd.cost();
            best_f = bd.f;
            best_feasible = bd.feasible;
            best = fp.snapshot();
        }
        log.push(LogEntry {
            step: stats.steps,
            f: bd.f,
            cost: bd.cost(),
            best_cost,
        });
        if conv.push_scaled(best_cost, best_f) && best_feasible {
            break;
        }
    }
    fp.restore(&best);
    Ok((log, stats))
}

fn random_trees<R: Rng + ?Sized>(states: &[BlockState], n_dies: usize, rng: &mut R) -> Vec<BStarTree> {
    (0..n_dies)
        .map(|d| {
            let blocks: Vec<usize> = (0..states.len()).filter(|&b| states[b].die == d).collect();
            random_tree(&blocks, rng)
        })
        .collect()
}

/// Full pipeline with SA or RL intra-die optimization.
pub fn run_mmfp(design: &Design, method: Method, cfg: &RunConfig, seed: u64) -> Result<MmfpSolution, ModelError> {
    run_observed(design, method, cfg, seed, &mut |_, _| {})
}

fn mmfp_observed(
    design: &Design,
    method: Method,
    cfg: &RunConfig,
    seed: u64,
    observe: &mut dyn FnMut(usize, &[BlockState]),
) -> Result<MmfpSolution, ModelError> {
    cfg.validate()?;
    let weights = cfg.objective.weights;
    let plan = initial_plan(design, &weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = design.dies.len();
    let trees = random_trees(&plan.states, nd, &mut rng);
    let window = AreaWindow::new(plan.z, &weights);
    let mut fp = Floorplan::new(design, cfg.objective, window, cfg.refine.gap(weights.n_max), plan.states, trees)?;
    let mut opt = match method {
        Method::Sa => Optimizer::Sa(vec![SaStepper::new(&cfg.sa); nd]),
        _ => Optimizer::Rl {
            agent: Box::new(PpoAgent::new(5 * cfg.ppo.feature_height, MoveKind::ALL.len(), &cfg.ppo, &mut rng)?),
            steppers: vec![RlStepper::new(); nd],
        },
    };
    let (log, stats) = drive(&mut fp, &mut opt, cfg, true, &mut rng, observe)?;
    MmfpSolution::from_floorplan(&fp, method, seed, log, stats)
}

/// Ratio option closest to 1 (ties to the smaller one).
fn unit_ratio(options: &[f64]) -> f64 {
    options
        .iter()
        .copied()
        .min_by(|a, b| {
            (a - 1.0)
                .abs()
                .partial_cmp(&(b - 1.0).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
        })
        .expect("nonempty ratio options")
}

/// Baseline: balanced min-cut partition, parts assigned to dies at random, unit
/// ratios, SA without ratio changes and without refinement.
pub fn run_baseline(design: &Design, cfg: &RunConfig, seed: u64) -> Result<MmfpSolution, ModelError> {
    baseline_observed(design, cfg, seed, &mut |_, _| {})
}

fn baseline_observed(
    design: &Design,
    cfg: &RunConfig,
    seed: u64,
    observe: &mut dyn FnMut(usize, &[BlockState]),
) -> Result<MmfpSolution, ModelError> {
    cfg.validate()?;
    design.check_hard_ip_dies()?;
    let weights = cfg.objective.weights;
    let z = estimate_z(design)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = design.dies.len();
    let hg = Hypergraph::new(
        (0..design.blocks.len()).map(|b| design.oldest_equivalent_area(b)).collect(),
        design.nets.iter().map(|n| n.pins.clone()).collect(),
    )?;
    let parts = partition(&hg, nd, cfg.partition_tolerance, cfg.partition_starts, &mut rng)?;
    let mut die_of_part: Vec<usize> = (0..nd).collect();
    die_of_part.shuffle(&mut rng);
    let states: Vec<BlockState> = design
        .blocks
        .iter()
        .enumerate()
        .map(|(b, blk)| match blk.hard_ip {
            Some(lock) => {
                let mut die = die_of_part[parts[b]];
                if design.dies[die].tech != lock.tech {
                    die = (0..nd).find(|&d| design.dies[d].tech == lock.tech).expect("checked above");
                }
                BlockState {
                    die,
                    tech: lock.tech,
                    ratio: lock.ratio,
                }
            }
            None => {
                let die = die_of_part[parts[b]];
                BlockState {
                    die,
                    tech: design.dies[die].tech,
                    ratio: unit_ratio(&blk.ratio_options),
                }
            }
        })
        .collect();
    let trees = random_trees(&states, nd, &mut rng);
    let window = AreaWindow::new(z, &weights);
    let mut fp = Floorplan::new(design, cfg.objective, window, cfg.refine.gap(weights.n_max), states, trees)?;
    let sa = SaConfig {
        moves: vec![MoveKind::Swap, MoveKind::Rotate, MoveKind::RemoveInsert],
        ..cfg.sa.clone()
    };
    let run_cfg = RunConfig { sa, ..cfg.clone() };
    let mut opt = Optimizer::Sa(vec![SaStepper::new(&run_cfg.sa); nd]);
    let (log, stats) = drive(&mut fp, &mut opt, &run_cfg, false, &mut rng, observe)?;
    MmfpSolution::from_floorplan(&fp, Method::Baseline, seed, log, stats)
}

pub fn run(design: &Design, method: Method, cfg: &RunConfig, seed: u64) -> Result<MmfpSolution, ModelError> {
    run_observed(design, method, cfg, seed, &mut |_, _| {})
}

/// [`run`] calling `observe(step, states)` after every optimizer step.
pub fn run_observed(
    design: &Design,
    method: Method,
    cfg: &RunConfig,
    seed: u64,
    observe: &mut dyn FnMut(usize, &[BlockState]),
) -> Result<MmfpSolution, ModelError> {
    match method {
        Method::Baseline => baseline_observed(design, cfg, seed, observe),
        m => mmfp_observed(design, m, cfg, seed, observe),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{ppa, simple_design, tech};
    use crate::model::{Block, Die, HardIp, Net, ObjectiveWeights};

    fn short(steps: usize) -> RunConfig {
        RunConfig {
            max_total_steps: steps,
            ..RunConfig::default()
        }
    }

    fn design6() -> Design {
        simple_design(
            &[100.0, 50.0, 80.0, 30.0, 60.0, 70.0],
            &[&[0, 1], &[2, 3, 4], &[0, 5], &[1, 3]],
            2,
        )
    }

    #[test]
    fn runs_are_deterministic_and_logs_monotone() {
        let d = design6();
        for m in Method::ALL {
            let a = run(&d, m, &short(300), 7).unwrap();
            let b = run(&d, m, &short(300), 7).unwrap();
            assert_eq!(a.log, b.log, "{m:?}");
            assert!(a.log.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
            assert!(a.steps <= 300);
            assert_eq!(a.reevaluate(&d, &RunConfig::default().objective).unwrap(), a.breakdown);
        }
    }

    #[test]
    fn one_die_with_no_refinement() {
        let d = simple_design(&[100.0, 50.0, 80.0], &[&[0, 1, 2]], 1);
        let cfg = RunConfig {
            refine: RefineConfig {
                k_interval: usize::MAX,
                ..RefineConfig::default()
            },
            ..short(200)
        };
        let s = run(&d, Method::Sa, &cfg, 1).unwrap();
        assert_eq!(s.refinements_tried, 0);
    }

    #[test]
    fn refinement_never_exceeds_budget() {
        let d = design6();
        for k in [1, 3, 500] {
            let cfg = RunConfig {
                refine: RefineConfig {
                    k_interval: k,
                    ..RefineConfig::default()
                },
                ..short(250)
            };
            let s = run(&d, Method::Sa, &cfg, 3).unwrap();
            assert!(s.steps <= 250);
        }
    }

    #[test]
    fn baseline_keeps_technology_of_die() {
        let d = design6();
        let s = run_baseline(&d, &short(200), 2).unwrap();
        for (b, st) in s.states.iter().enumerate() {
            assert_eq!(st.tech, d.dies[st.die].tech, "block {b}");
            assert_eq!(st.ratio, 1.0);
        }
    }

    #[test]
    fn infeasible_hard_ip_is_reported() {
        let t = vec![tech("45nm", 1.0), tech("7nm", 9.0)];
        let blocks = vec![Block {
            id: "ip".into(),
            ppa: vec![Some(ppa(1.0)), None],
            ratio_options: vec![1.0],
            hard_ip: Some(HardIp { tech: 0, ratio: 1.0 }),
        }];
        let d = Design::new(t, blocks, vec![], vec![Die { id: "d".into(), tech: 1 }]).unwrap();
        for m in Method::ALL {
            assert!(matches!(run(&d, m, &short(10), 0), Err(ModelError::Infeasible(_))));
        }
    }

    #[test]
    fn refine_respects_area_window() {
        // every die already at its max; any move overfills the target
        let d = simple_design(&[100.0, 100.0], &[&[0, 1]], 2);
        let states = vec![
            BlockState { die: 0, tech: 0, ratio: 1.0 },
            BlockState { die: 1, tech: 0, ratio: 1.0 },
        ];
        let w = ObjectiveWeights::default();
        let trees = vec![BStarTree::single(0), BStarTree::single(1)];
        let mut fp = Floorplan::new(&d, ObjectiveConfig::default(), AreaWindow::new(100.0, &w), 15.0, states, trees).unwrap();
        let before = fp.snapshot();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let r = refine_step(&mut fp, &mut rng, &RefineConfig::default()).unwrap();
            assert!(!r.applied);
            assert_eq!(fp.snapshot(), before);
        }
    }

    #[test]
    fn refine_pulls_dangling_block_toward_neighbors() {
        // die 0: {0, 1, 2}; die 1: {3, 4, 5}; block 2 is only connected to die 1 blocks
        let d = {
            let mut d = simple_design(&[100.0; 6], &[], 2);
            d = Design::new(
                d.technologies.clone(),
                d.blocks.clone(),
                vec![
                    Net { id: "a".into(), pins: vec![0, 1], weight: 1.0 },
                    Net { id: "b".into(), pins: vec![2, 3], weight: 5.0 },
                    Net { id: "c".into(), pins: vec![2, 4], weight: 5.0 },
                    Net { id: "e".into(), pins: vec![3, 4, 5], weight: 1.0 },
                ],
                d.dies.clone(),
            )
            .unwrap();
            d
        };
        let w = ObjectiveWeights {
            a_min_factor: 0.1,
            a_max_factor: 10.0,
            ..ObjectiveWeights::default()
        };
        let cfg = ObjectiveConfig {
            weights: w,
            ..ObjectiveConfig::default()
        };
        let states: Vec<BlockState> = (0..6).map(|b| BlockState { die: b / 3, tech: 0, ratio: 1.0 }).collect();
        let mk = |bs: &[usize]| {
            let mut t = BStarTree::single(bs[0]);
            let r = t.root().unwrap();
            let n1 = t.insert(bs[1], Some((r, Side::Left))).unwrap();
            t.insert(bs[2], Some((n1, Side::Left))).unwrap();
            t
        };
        let trees = vec![mk(&[0, 1, 2]), mk(&[3, 4, 5])];
        let mut fp = Floorplan::new(&d, cfg, AreaWindow::new(300.0, &w), 15.0, states, trees).unwrap();
        let f0 = fp.evaluate().unwrap().f;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut moved = false;
        for _ in 0..200 {
            let r = refine_step(&mut fp, &mut rng, &RefineConfig::default()).unwrap();
            if r.applied && r.block == Some(2) {
                moved = true;
                break;
            }
        }
        assert!(moved);
        assert_eq!(fp.states()[2].die, 1);
        assert!(fp.evaluate().unwrap().f < f0);
    }
}
