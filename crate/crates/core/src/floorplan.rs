// SPDX-License-Identifier: Apache-2.0

//! Mutable multi-die floorplan state shared by the optimizers and the refinement step.

use rand::Rng;

use crate::bstar::{extract_features, BStarTree, BlockShapes, FeatureVector, MoveKind, NoEligible, Packing};
use crate::error::ModelError;
use crate::model::{
    die_area, die_cost, evaluate, net_hpwl, violation_penalty, AreaWindow, BlockState, Design, ObjectiveBreakdown,
    ObjectiveConfig, PlacedBlock,
};

/// Die origins for a row-major layout: one row for up to two dies, otherwise a grid
/// `⌈√m⌉` wide. `extents` are full die footprints (margin included).
pub fn layout_dies(extents: &[(f64, f64)], gap: f64) -> Vec<(f64, f64)> {
    let m = extents.len();
    if m == 0 {
        return Vec::new();
    }
    let cols = if m <= 2 { m } else { (m as f64).sqrt().ceil() as usize };
    let rows = m.div_ceil(cols);
    let mut col_w = vec![0.0f64; cols];
    let mut row_h = vec![0.0f64; rows];
    for (i, &(w, h)) in extents.iter().enumerate() {
        col_w[i % cols] = col_w[i % cols].max(w);
        row_h[i / cols] = row_h[i / cols].max(h);
    }
    let mut xs = vec![0.0; cols];
    for c in 1..cols {
        xs[c] = xs[c - 1] + col_w[c - 1] + gap;
    }
    let mut ys = vec![0.0; rows];
    for r in 1..rows {
        ys[r] = ys[r - 1] + row_h[r - 1] + gap;
    }
    (0..m).map(|i| (xs[i % cols], ys[i / cols])).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DieFloorplan {
    pub tree: BStarTree,
    pub packing: Packing,
}

/// Restorable copy of the search state.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub states: Vec<BlockState>,
    pub trees: Vec<BStarTree>,
}

/// Tree and block ratios of one die.
#[derive(Debug, Clone, PartialEq)]
pub struct DieState {
    pub tree: BStarTree,
    pub ratios: Vec<(usize, f64)>,
}

/// Per-die copy, used to undo one move.
#[derive(Debug, Clone, PartialEq)]
pub struct DieSnapshot {
    pub die: usize,
    pub tree: BStarTree,
    pub packing: Packing,
    pub reshaped: Option<(usize, f64)>,
}

pub struct Floorplan<'a> {
    pub design: &'a Design,
    pub cfg: ObjectiveConfig,
    pub window: AreaWindow,
    /// Gap between neighboring dies, µm.
    pub gap: f64,
    states: Vec<BlockState>,
    dims: Vec<(f64, f64)>,
    dies: Vec<DieFloorplan>,
    origins: Vec<(f64, f64)>,
}

struct Shapes<'s> {
    design: &'s Design,
    states: &'s mut [BlockState],
}

impl BlockShapes for Shapes<'_> {
    fn ratio(&self, block: usize) -> f64 {
        self.states[block].ratio
    }
    fn ratio_options(&self, block: usize) -> &[f64] {
        &self.design.blocks[block].ratio_options
    }
    fn is_locked(&self, block: usize) -> bool {
        self.design.blocks[block].is_locked()
    }
    fn set_ratio(&mut self, block: usize, ratio: f64) {
        self.states[block].ratio = ratio;
    }
}

impl<'a> Floorplan<'a> {
    /// Builds and packs a floorplan. `trees[d]` must hold exactly the blocks whose state names die `d`.
    pub fn new(
        design: &'a Design,
        cfg: ObjectiveConfig,
        window: AreaWindow,
        gap: f64,
        states: Vec<BlockState>,
        trees: Vec<BStarTree>,
    ) -> Result<Self, ModelError> {
        if states.len() != design.blocks.len() || trees.len() != design.dies.len() {
            return Err(ModelError::State("state does not match design".into()));
        }
        let mut seen = vec![false; states.len()];
        for (d, t) in trees.iter().enumerate() {
            t.validate()?;
            for b in t.blocks() {
                if b >= states.len() || seen[b] || states[b].die != d {
                    return Err(ModelError::State(format!("block {b} misplaced in die tree {d}")));
                }
                seen[b] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(ModelError::State("some block is in no die tree".into()));
        }
        let dims = states
            .iter()
            .enumerate()
            .map(|(b, s)| design.blocks[b].dims(s.tech, s.ratio))
            .collect::<Result<Vec<_>, _>>()?;
        let mut fp = Self {
            design,
            cfg,
            window,
            gap,
            states,
            dims,
            dies: trees
                .into_iter()
                .map(|tree| DieFloorplan {
                    tree,
                    packing: Packing::default(),
                })
                .collect(),
            origins: Vec::new(),
        };
        for d in 0..fp.dies.len() {
            fp.repack(d);
        }
        Ok(fp)
    }

    pub fn states(&self) -> &[BlockState] {
        &self.states
    }

    pub fn die(&self, d: usize) -> &DieFloorplan {
        &self.dies[d]
    }

    pub fn n_dies(&self) -> usize {
        self.dies.len()
    }

    pub fn origins(&self) -> &[(f64, f64)] {
        &self.origins
    }

    pub fn block_dims(&self, b: usize) -> (f64, f64) {
        self.dims[b]
    }

    /// Die footprint including margin.
    pub fn die_extent(&self, d: usize) -> (f64, f64) {
        let p = &self.dies[d].packing;
        let m = self.cfg.die_margin;
        (p.width + 2.0 * m, p.height + 2.0 * m)
    }

    pub fn die_area(&self, d: usize) -> f64 {
        let p = &self.dies[d].packing;
        die_area(p.width, p.height, self.cfg.die_margin)
    }

    pub fn repack(&mut self, d: usize) {
        let dims = &self.dims;
        let df = &mut self.dies[d];
        df.packing = df.tree.pack(|b| dims[b]);
        self.place_dies();
    }

    fn place_dies(&mut self) {
        let extents: Vec<(f64, f64)> = (0..self.dies.len()).map(|d| self.die_extent(d)).collect();
        self.origins = layout_dies(&extents, self.gap);
    }

    /// Global lower-left corner of every block.
    pub fn placed_blocks(&self) -> Vec<PlacedBlock> {
        let m = self.cfg.die_margin;
        let mut out: Vec<Option<PlacedBlock>> = vec![None; self.states.len()];
        for (d, df) in self.dies.iter().enumerate() {
            let (ox, oy) = self.origins[d];
            for (i, node) in df.tree.nodes().iter().enumerate() {
                let r = df.packing.rects[i];
                let s = self.states[node.block];
                out[node.block] = Some(PlacedBlock {
                    die: d,
                    tech: s.tech,
                    ratio: s.ratio,
                    x: ox + m + r.x,
                    y: oy + m + r.y,
                    w: r.w,
                    h: r.h,
                });
            }
        }
        out.into_iter().map(|p| p.expect("every block is in a tree")).collect()
    }

    fn centers(&self) -> Vec<(f64, f64)> {
        let m = self.cfg.die_margin;
        let mut c = vec![(0.0, 0.0); self.states.len()];
        for (d, df) in self.dies.iter().enumerate() {
            let (ox, oy) = self.origins[d];
            for (i, node) in df.tree.nodes().iter().enumerate() {
                let (x, y) = df.packing.rects[i].center();
                c[node.block] = (ox + m + x, oy + m + y);
            }
        }
        c
    }

    pub fn evaluate(&self) -> Result<ObjectiveBreakdown, ModelError> {
        let placed = self.placed_blocks();
        let extents: Vec<Option<(f64, f64)>> = self
            .dies
            .iter()
            .map(|df| Some((df.packing.width, df.packing.height)))
            .collect();
        evaluate(self.design, &self.cfg, &self.window, &placed, &extents)
    }

    /// Objective restricted to die `d` with all other dies held fixed: HPWL of nets
    /// touching `d`, power, TNS and cost of `d`, plus the penalty for `d`'s own area
    /// and for die pairs involving `d`.
    pub fn die_objective(&self, d: usize) -> Result<f64, ModelError> {
        let design = self.design;
        let w = &self.cfg.weights;
        let centers = self.centers();
        let nd = self.dies.len();
        let mut hpwl = 0.0;
        let mut pair_counts = vec![0usize; nd];
        let mut on = vec![false; nd];
        for net in &design.nets {
            on.iter_mut().for_each(|o| *o = false);
            for &p in &net.pins {
                on[self.states[p].die] = true;
            }
            if !on[d] {
                continue;
            }
            hpwl += net_hpwl(net, &centers)?;
            for (j, &o) in on.iter().enumerate() {
                if o && j != d {
                    pair_counts[j] += 1;
                }
            }
        }
        let (mut power, mut tns) = (0.0, 0.0);
        for b in self.dies[d].tree.blocks() {
            let s = self.states[b];
            let ppa = design.blocks[b].ppa_at(s.tech, s.ratio)?;
            power += ppa.power;
            tns += ppa.tns_magnitude;
        }
        let area = self.die_area(d);
        let cost = die_cost(area, &design.technologies[design.dies[d].tech], self.cfg.cost_scale_by_area);
        let mut violation = self.window.violation(area);
        for &n in &pair_counts {
            if n > w.n_max {
                violation += (n - w.n_max) as f64 / w.n_max as f64;
            }
        }
        let f = w.omega * hpwl + w.beta * power + w.gamma * cost + w.tau * tns;
        Ok(f + violation_penalty(self.cfg.penalty_weight, violation))
    }

    /// Applies one perturbation to die `d` and repacks it; returns the undo record.
    pub fn perturb<R: Rng + ?Sized>(&mut self, d: usize, kind: MoveKind, rng: &mut R) -> Result<DieSnapshot, NoEligible> {
        let before_tree = self.dies[d].tree.clone();
        let before_packing = self.dies[d].packing.clone();
        let mut shapes = Shapes {
            design: self.design,
            states: &mut self.states,
        };
        let applied = self.dies[d].tree.perturb(kind, &mut shapes, rng)?;
        let reshaped = match applied {
            crate::bstar::Applied::Reshaped { block, old_ratio } => {
                let s = self.states[block];
                self.dims[block] = self.design.blocks[block]
                    .dims(s.tech, s.ratio)
                    .expect("ratio change keeps the technology");
                Some((block, old_ratio))
            }
            _ => None,
        };
        self.repack(d);
        Ok(DieSnapshot {
            die: d,
            tree: before_tree,
            packing: before_packing,
            reshaped,
        })
    }

    pub fn undo(&mut self, snap: DieSnapshot) {
        if let Some((b, r)) = snap.reshaped {
            self.set_block(b, self.states[b].die, self.states[b].tech, r);
        }
        let df = &mut self.dies[snap.die];
        df.tree = snap.tree;
        df.packing = snap.packing;
        self.place_dies();
    }

    fn set_block(&mut self, b: usize, die: usize, tech: usize, ratio: f64) {
        self.states[b] = BlockState { die, tech, ratio };
        self.dims[b] = self.design.blocks[b].dims(tech, ratio).expect("supported technology");
    }

    /// Moves block `b` into die `to`, placing it at `slot` of that die's tree
    /// (or as root if the tree is empty). Both dies are repacked.
    pub fn move_block(&mut self, b: usize, to: usize, slot: Option<(usize, crate::bstar::Side)>) -> Result<(), ModelError> {
        let from = self.states[b].die;
        let tech = self.design.dies[to].tech;
        self.design.blocks[b].base(tech)?;
        self.dies[from].tree.remove_block(b)?;
        self.dies[to].tree.insert(b, slot)?;
        let ratio = self.states[b].ratio;
        self.set_block(b, to, tech, ratio);
        self.repack(from);
        self.repack(to);
        Ok(())
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            states: self.states.clone(),
            trees: self.dies.iter().map(|d| d.tree.clone()).collect(),
        }
    }

    pub fn restore(&mut self, snap: &Snapshot) {
        for (b, s) in snap.states.iter().enumerate() {
            self.set_block(b, s.die, s.tech, s.ratio);
        }
        for (d, t) in snap.trees.iter().enumerate() {
            self.dies[d].tree = t.clone();
            let dims = &self.dims;
            self.dies[d].packing = self.dies[d].tree.pack(|b| dims[b]);
        }
        self.place_dies();
    }

    /// Replaces die `d`'s tree (same block set) and repacks.
    pub fn set_tree(&mut self, d: usize, tree: BStarTree) -> Result<(), ModelError> {
        let mut a: Vec<usize> = tree.blocks().collect();
        let mut b: Vec<usize> = self.dies[d].tree.blocks().collect();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(ModelError::State(format!("tree for die {d} has a different block set")));
        }
        self.dies[d].tree = tree;
        self.repack(d);
        Ok(())
    }

    pub fn die_state(&self, d: usize) -> DieState {
        let tree = self.dies[d].tree.clone();
        let ratios = tree.blocks().map(|b| (b, self.states[b].ratio)).collect();
        DieState { tree, ratios }
    }

    /// Restores a die state saved earlier; fails if the die's block set changed since.
    pub fn load_die_state(&mut self, d: usize, s: &DieState) -> Result<(), ModelError> {
        self.set_tree(d, s.tree.clone())?;
        for &(b, r) in &s.ratios {
            let st = self.states[b];
            self.set_block(b, st.die, st.tech, r);
        }
        self.repack(d);
        Ok(())
    }

    pub fn features(&self, d: usize, h: usize) -> Result<FeatureVector, ModelError> {
        let df = &self.dies[d];
        extract_features(&df.tree, &df.packing, &self.design.nets, h)
    }
}

/// One die of a floorplan viewed as a search environment.
pub trait SearchEnv {
    /// Objective minimized by the search.
    fn cost(&mut self) -> Result<f64, ModelError>;
    /// Applies a perturbation; on success it can be reverted with [`SearchEnv::revert`].
    fn propose<R: Rng + ?Sized>(&mut self, kind: MoveKind, rng: &mut R) -> Result<(), NoEligible>;
    fn revert(&mut self);
    fn features(&mut self, h: usize) -> Result<FeatureVector, ModelError>;
    type Saved: Clone;
    fn save(&self) -> Self::Saved;
    /// Returns false if the saved state no longer applies.
    fn load(&mut self, saved: &Self::Saved) -> bool;
}

pub struct DieEnv<'f, 'a> {
    pub fp: &'f mut Floorplan<'a>,
    pub die: usize,
    undo: Option<DieSnapshot>,
}

impl<'f, 'a> DieEnv<'f, 'a> {
    pub fn new(fp: &'f mut Floorplan<'a>, die: usize) -> Self {
        Self { fp, die, undo: None }
    }
}

impl SearchEnv for DieEnv<'_, '_> {
    fn cost(&mut self) -> Result<f64, ModelError> {
        self.fp.die_objective(self.die)
    }

    fn propose<R: Rng + ?Sized>(&mut self, kind: MoveKind, rng: &mut R) -> Result<(), NoEligible> {
        self.undo = Some(self.fp.perturb(self.die, kind, rng)?);
        Ok(())
    }

    fn revert(&mut self) {
        if let Some(s) = self.undo.take() {
            self.fp.undo(s);
        }
    }

    fn features(&mut self, h: usize) -> Result<FeatureVector, ModelError> {
        self.fp.features(self.die, h)
    }

    type Saved = DieState;

    fn save(&self) -> DieState {
        self.fp.die_state(self.die)
    }

    fn load(&mut self, saved: &DieState) -> bool {
        self.undo = None;
        self.fp.load_die_state(self.die, saved).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bstar::random_tree;
    use crate::model::fixtures::simple_design;
    use crate::model::ObjectiveWeights;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_die_fp(design: &Design, seed: u64) -> Floorplan<'_> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = design.blocks.len();
        let states: Vec<BlockState> = (0..n)
            .map(|b| BlockState {
                die: b % 2,
                tech: 0,
                ratio: 1.0,
            })
            .collect();
        let trees = (0..2)
            .map(|d| random_tree(&(0..n).filter(|b| b % 2 == d).collect::<Vec<_>>(), &mut rng))
            .collect();
        let w = ObjectiveWeights::default();
        Floorplan::new(design, ObjectiveConfig::default(), AreaWindow::new(200.0, &w), 15.0, states, trees).unwrap()
    }

    #[test]
    fn layout_examples() {
        assert_eq!(layout_dies(&[(3.0, 4.0)], 15.0), vec![(0.0, 0.0)]);
        assert_eq!(layout_dies(&[(10.0, 10.0), (8.0, 8.0)], 15.0), vec![(0.0, 0.0), (25.0, 0.0)]);
        let o = layout_dies(&[(1.0, 1.0); 4], 2.0);
        assert_eq!(o, vec![(0.0, 0.0), (3.0, 0.0), (0.0, 3.0), (3.0, 3.0)]);
    }

    #[test]
    fn perturb_and_undo_restore_state() {
        let d = simple_design(&[100.0, 50.0, 80.0, 30.0, 60.0, 40.0], &[&[0, 1, 2], &[3, 5], &[1, 4]], 2);
        let mut fp = two_die_fp(&d, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let before = fp.evaluate().unwrap();
        let snap = fp.snapshot();
        for k in 0..200 {
            let kind = MoveKind::ALL[k % 4];
            if let Ok(u) = fp.perturb(k % 2, kind, &mut rng) {
                fp.undo(u);
            }
            assert_eq!(fp.snapshot(), snap);
        }
        assert_eq!(fp.evaluate().unwrap(), before);
    }

    #[test]
    fn die_objective_tracks_global_delta_for_two_dies() {
        let d = simple_design(&[100.0, 50.0, 80.0, 30.0, 60.0, 40.0], &[&[0, 1, 2], &[3, 5], &[1, 4]], 2);
        let mut fp = two_die_fp(&d, 3);
        fp.cfg.penalty_weight = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 0..50 {
            let g0 = fp.evaluate().unwrap().f;
            let l0 = fp.die_objective(1).unwrap();
            if fp.perturb(1, MoveKind::ALL[k % 4], &mut rng).is_err() {
                continue;
            }
            let dg = fp.evaluate().unwrap().f - g0;
            let dl = fp.die_objective(1).unwrap() - l0;
            assert!((dg - dl).abs() <= 1e-9 * g0.abs().max(1.0), "{dg} vs {dl}");
        }
    }

    #[test]
    fn move_block_switches_technology_dims() {
        let d = simple_design(&[100.0, 50.0, 80.0, 30.0], &[&[0, 1]], 2);
        let mut fp = two_die_fp(&d, 5);
        fp.move_block(0, 1, fp.die(1).tree.free_slots().first().copied()).unwrap();
        assert_eq!(fp.states()[0].die, 1);
        assert_eq!(fp.die(0).tree.len(), 1);
        assert_eq!(fp.die(1).tree.len(), 3);
        let (w, h) = fp.block_dims(0);
        assert!((w * h - 100.0).abs() < 1e-9);
    }
}
