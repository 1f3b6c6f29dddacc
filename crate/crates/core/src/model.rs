// SPDX-License-Identifier: Apache-2.0

//! Domain types and the analytic objective model.
//!
//! Geometry is in µm and µm², power in mW, slack magnitudes in ns. The yield
//! model converts areas to cm² internally.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// µm² per cm².
pub const UM2_PER_CM2: f64 = 1e8;

const RATIO_TOL: f64 = 1e-9;

/// True when two aspect ratios denote the same option.
pub fn same_ratio(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATIO_TOL * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Technology {
    pub id: String,
    /// Factor converting this technology's area into oldest-technology area.
    pub scale_to_oldest: f64,
    /// Defects per cm².
    pub defect_density: f64,
    pub alpha: f64,
    pub cost_per_area: f64,
}

/// Per-technology PPA of a block at unit aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePpa {
    pub area: f64,
    pub power: f64,
    pub tns_magnitude: f64,
    /// Sensitivity of power and slack to a non-unit aspect ratio.
    pub ratio_penalty: f64,
}

/// PPA of a block at a concrete technology and aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ppa {
    pub area: f64,
    pub power: f64,
    pub tns_magnitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardIp {
    pub tech: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub id: String,
    /// Indexed by technology index; `None` where the block cannot be built.
    pub ppa: Vec<Option<BasePpa>>,
    pub ratio_options: Vec<f64>,
    pub hard_ip: Option<HardIp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub id: String,
    pub pins: Vec<usize>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Die {
    pub id: String,
    pub tech: usize,
}

/// Mutable per-block decision: die, technology and aspect ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockState {
    pub die: usize,
    pub tech: usize,
    pub ratio: f64,
}

/// Width and height of a rectangle with the given area and height/width ratio.
pub fn rect_dims(area: f64, ratio: f64) -> (f64, f64) {
    ((area / ratio).sqrt(), (area * ratio).sqrt())
}

/// The `(ρ + 1/ρ − 2)` aspect-ratio penalty term; zero at ρ = 1.
pub fn ratio_deviation(ratio: f64) -> f64 {
    ratio + 1.0 / ratio - 2.0
}

/// Analytic PPA estimate at aspect ratio `ratio`.
pub fn block_ppa(base: &BasePpa, ratio: f64) -> Ppa {
    let scale = 1.0 + base.ratio_penalty * ratio_deviation(ratio);
    Ppa {
        area: base.area,
        power: base.power * scale,
        tns_magnitude: base.tns_magnitude * scale,
    }
}

impl Block {
    pub fn base(&self, tech: usize) -> Result<&BasePpa, ModelError> {
        self.ppa
            .get(tech)
            .and_then(Option::as_ref)
            .ok_or_else(|| ModelError::MissingPpa {
                block: self.id.clone(),
                tech: format!("#{tech}"),
            })
    }

    pub fn supports(&self, tech: usize) -> bool {
        matches!(self.ppa.get(tech), Some(Some(_)))
    }

    pub fn dims(&self, tech: usize, ratio: f64) -> Result<(f64, f64), ModelError> {
        Ok(rect_dims(self.base(tech)?.area, ratio))
    }

    pub fn ppa_at(&self, tech: usize, ratio: f64) -> Result<Ppa, ModelError> {
        Ok(block_ppa(self.base(tech)?, ratio))
    }

    pub fn is_locked(&self) -> bool {
        self.hard_ip.is_some()
    }

    pub fn has_ratio_option(&self, ratio: f64) -> bool {
        self.ratio_options.iter().any(|&r| same_ratio(r, ratio))
    }
}

/// Die yield `(1 + δ·A/α)^(−α)` with `area` in µm².
pub fn die_yield(area: f64, tech: &Technology) -> f64 {
    let area_cm2 = area / UM2_PER_CM2;
    (1.0 + tech.defect_density * area_cm2 / tech.alpha).powf(-tech.alpha)
}

/// Cost per yielded area `Φ / Y`, or `Φ·A / Y` when `scale_by_area` is set.
pub fn die_cost(area: f64, tech: &Technology, scale_by_area: bool) -> f64 {
    let per_yield = tech.cost_per_area / die_yield(area, tech);
    if scale_by_area {
        per_yield * area
    } else {
        per_yield
    }
}

/// Half-perimeter of the bounding box of `points`; zero for fewer than two.
pub fn hpwl_of_points<I>(points: I) -> f64
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut it = points.into_iter();
    let Some((x0, y0)) = it.next() else {
        return 0.0;
    };
    let (mut lx, mut hx, mut ly, mut hy) = (x0, x0, y0, y0);
    for (x, y) in it {
        lx = lx.min(x);
        hx = hx.max(x);
        ly = ly.min(y);
        hy = hy.max(y);
    }
    (hx - lx) + (hy - ly)
}

/// Weighted HPWL of a net given block centers indexed by block.
pub fn net_hpwl(net: &Net, centers: &[(f64, f64)]) -> Result<f64, ModelError> {
    let mut pts = Vec::with_capacity(net.pins.len());
    for &p in &net.pins {
        let c = centers
            .get(p)
            .ok_or_else(|| ModelError::State(format!("net `{}`: pin #{p} has no center", net.id)))?;
        pts.push(*c);
    }
    Ok(net.weight * hpwl_of_points(pts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub omega: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub n_max: usize,
    pub a_min_factor: f64,
    pub a_max_factor: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            omega: 1.0,
            beta: 1.0,
            gamma: 0.5,
            tau: 2.0,
            n_max: 30,
            a_min_factor: 0.8,
            a_max_factor: 1.2,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ws = [self.omega, self.beta, self.gamma, self.tau];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(ModelError::Config("objective weights must be finite and >= 0".into()));
        }
        if self.n_max == 0 {
            return Err(ModelError::Config("n_max must be positive".into()));
        }
        if !(self.a_min_factor > 0.0 && self.a_min_factor < self.a_max_factor) {
            return Err(ModelError::Config("need 0 < a_min_factor < a_max_factor".into()));
        }
        Ok(())
    }
}

/// Objective weights plus evaluation options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub weights: ObjectiveWeights,
    /// Margin in µm added on every side of a die's block bounding box.
    pub die_margin: f64,
    /// Use `Φ·A/Y` instead of `Φ/Y` as die cost.
    pub cost_scale_by_area: bool,
    /// Weight of the constraint-violation penalty added to `f` during search.
    pub penalty_weight: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            weights: ObjectiveWeights::default(),
            die_margin: 0.0,
            cost_scale_by_area: false,
            penalty_weight: 1e6,
        }
    }
}

/// Allowed die-area range derived from the average die area `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaWindow {
    pub z: f64,
    pub min: f64,
    pub max: f64,
}

impl AreaWindow {
    pub fn new(z: f64, weights: &ObjectiveWeights) -> Self {
        Self {
            z,
            min: weights.a_min_factor * z,
            max: weights.a_max_factor * z,
        }
    }

    pub fn contains(&self, area: f64) -> bool {
        area >= self.min && area <= self.max
    }

    /// Violation relative to `z`; zero inside the window.
    pub fn violation(&self, area: f64) -> f64 {
        ((area - self.max).max(0.0) + (self.min - area).max(0.0)) / self.z
    }
}

/// Die area: block bounding box grown by `margin` on every side.
pub fn die_area(width: f64, height: f64, margin: f64) -> f64 {
    (width + 2.0 * margin) * (height + 2.0 * margin)
}

/// A block at its global position (lower-left corner).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedBlock {
    pub die: usize,
    pub tech: usize,
    pub ratio: f64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl PlacedBlock {
    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub total_hpwl: f64,
    pub total_power: f64,
    pub total_cost: f64,
    pub total_tns_magnitude: f64,
    pub f: f64,
    /// Search penalty for constraint violation; zero on feasible solutions.
    pub penalty: f64,
    /// `(i, j, N_ij)` for every die pair `i < j`.
    pub inter_die_net_counts: Vec<(usize, usize, usize)>,
    pub die_areas: Vec<f64>,
    pub feasible: bool,
}

impl ObjectiveBreakdown {
    /// Objective minimized during search: `f` plus penalty.
    pub fn cost(&self) -> f64 {
        self.f + self.penalty
    }

    pub fn total_area(&self) -> f64 {
        self.die_areas.iter().sum()
    }
}

/// Penalty for a relative violation `v`: zero when `v == 0`, else `w·(1 + v)`.
pub fn violation_penalty(weight: f64, violation: f64) -> f64 {
    if violation > 0.0 {
        weight * (1.0 + violation)
    } else {
        0.0
    }
}

/// Counts, for each unordered die pair, the nets with pins on both dies.
pub fn inter_die_counts(nets: &[Net], block_die: impl Fn(usize) -> usize, n_dies: usize) -> Vec<Vec<usize>> {
    let mut counts = vec![vec![0usize; n_dies]; n_dies];
    let mut seen = vec![false; n_dies];
    let mut present = Vec::with_capacity(n_dies);
    for net in nets {
        present.clear();
        for &p in &net.pins {
            let d = block_die(p);
            if !seen[d] {
                seen[d] = true;
                present.push(d);
            }
        }
        for (a, &i) in present.iter().enumerate() {
            for &j in &present[a + 1..] {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                counts[lo][hi] += 1;
            }
        }
        for &d in &present {
            seen[d] = false;
        }
    }
    counts
}

/// An immutable, validated design.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub technologies: Vec<Technology>,
    pub blocks: Vec<Block>,
    pub nets: Vec<Net>,
    pub dies: Vec<Die>,
    oldest: usize,
    block_nets: Vec<Vec<usize>>,
}

fn check_unique<'a>(kind: &str, ids: impl Iterator<Item = &'a str>) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ModelError::Config(format!("duplicate {kind} id `{id}`")));
        }
    }
    Ok(())
}

impl Design {
    pub fn new(
        technologies: Vec<Technology>,
        blocks: Vec<Block>,
        nets: Vec<Net>,
        dies: Vec<Die>,
    ) -> Result<Self, ModelError> {
        let cfg = |m: String| ModelError::Config(m);
        if technologies.is_empty() {
            return Err(cfg("design has no technologies".into()));
        }
        if blocks.is_empty() {
            return Err(cfg("design has no blocks".into()));
        }
        if dies.is_empty() {
            return Err(cfg("design has no dies".into()));
        }
        check_unique("technology", technologies.iter().map(|t| t.id.as_str()))?;
        check_unique("block", blocks.iter().map(|b| b.id.as_str()))?;
        check_unique("net", nets.iter().map(|n| n.id.as_str()))?;
        check_unique("die", dies.iter().map(|d| d.id.as_str()))?;

        for t in &technologies {
            if !(t.scale_to_oldest.is_finite() && t.scale_to_oldest >= 1.0) {
                return Err(cfg(format!("technology `{}`: scale_to_oldest must be >= 1", t.id)));
            }
            if !(t.alpha.is_finite() && t.alpha > 0.0) {
                return Err(cfg(format!("technology `{}`: alpha must be > 0", t.id)));
            }
            if !(t.defect_density.is_finite() && t.defect_density >= 0.0) {
                return Err(cfg(format!("technology `{}`: defect_density must be >= 0", t.id)));
            }
            if !(t.cost_per_area.is_finite() && t.cost_per_area > 0.0) {
                return Err(cfg(format!("technology `{}`: cost_per_area must be > 0", t.id)));
            }
        }
        let oldest: Vec<usize> = technologies
            .iter()
            .enumerate()
            .filter(|(_, t)| t.scale_to_oldest == 1.0)
            .map(|(i, _)| i)
            .collect();
        if oldest.len() != 1 {
            return Err(cfg(format!(
                "exactly one technology must have scale_to_oldest = 1, found {}",
                oldest.len()
            )));
        }
        let nt = technologies.len();

        for b in &blocks {
            if b.ppa.len() != nt {
                return Err(cfg(format!("block `{}`: PPA table has wrong length", b.id)));
            }
            if b.ratio_options.is_empty() {
                return Err(cfg(format!("block `{}`: no aspect-ratio options", b.id)));
            }
            if b.ratio_options.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(cfg(format!("block `{}`: aspect ratios must be positive", b.id)));
            }
            for p in b.ppa.iter().flatten() {
                let ok = p.area.is_finite()
                    && p.area > 0.0
                    && p.power.is_finite()
                    && p.power >= 0.0
                    && p.tns_magnitude.is_finite()
                    && p.tns_magnitude >= 0.0
                    && p.ratio_penalty.is_finite()
                    && p.ratio_penalty >= 0.0;
                if !ok {
                    return Err(cfg(format!("block `{}`: invalid PPA entry", b.id)));
                }
            }
            match b.hard_ip {
                Some(lock) => {
                    if lock.tech >= nt || !b.supports(lock.tech) {
                        return Err(cfg(format!("block `{}`: hard-IP technology has no PPA entry", b.id)));
                    }
                    if !b.has_ratio_option(lock.ratio) {
                        return Err(cfg(format!("block `{}`: hard-IP ratio is not an option", b.id)));
                    }
                }
                None => {
                    if let Some(t) = (0..nt).find(|&t| !b.supports(t)) {
                        return Err(ModelError::MissingPpa {
                            block: b.id.clone(),
                            tech: technologies[t].id.clone(),
                        });
                    }
                }
            }
        }

        let mut block_nets = vec![Vec::new(); blocks.len()];
        for (ni, n) in nets.iter().enumerate() {
            if n.pins.len() < 2 {
                return Err(cfg(format!("net `{}`: needs at least two pins", n.id)));
            }
            if !(n.weight.is_finite() && n.weight > 0.0) {
                return Err(cfg(format!("net `{}`: weight must be positive", n.id)));
            }
            let mut seen = HashSet::new();
            for &p in &n.pins {
                if p >= blocks.len() {
                    return Err(cfg(format!("net `{}`: pin #{p} out of range", n.id)));
                }
                if !seen.insert(p) {
                    return Err(cfg(format!("net `{}`: duplicate pin `{}`", n.id, blocks[p].id)));
                }
                block_nets[p].push(ni);
            }
        }
        for d in &dies {
            if d.tech >= nt {
                return Err(cfg(format!("die `{}`: unknown technology", d.id)));
            }
        }

        Ok(Self {
            technologies,
            blocks,
            nets,
            dies,
            oldest: oldest[0],
            block_nets,
        })
    }

    pub fn oldest_tech(&self) -> usize {
        self.oldest
    }

    /// Nets incident to block `b`.
    pub fn nets_of(&self, b: usize) -> &[usize] {
        &self.block_nets[b]
    }

    /// Area at unit aspect ratio expressed in oldest-technology µm².
    pub fn oldest_equivalent_area(&self, b: usize) -> f64 {
        let block = &self.blocks[b];
        match block.hard_ip {
            Some(lock) => {
                block.ppa[lock.tech].map(|p| p.area).unwrap_or(0.0)
                    * self.technologies[lock.tech].scale_to_oldest
            }
            None => block.ppa[self.oldest].map(|p| p.area).unwrap_or(0.0),
        }
    }

    pub fn tech_index(&self, id: &str) -> Option<usize> {
        self.technologies.iter().position(|t| t.id == id)
    }

    pub fn block_index(&self, id: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.id == id)
    }

    /// Hard-IP blocks whose locked technology has no die.
    pub fn check_hard_ip_dies(&self) -> Result<(), ModelError> {
        for b in &self.blocks {
            if let Some(lock) = b.hard_ip {
                if !self.dies.iter().any(|d| d.tech == lock.tech) {
                    return Err(ModelError::Infeasible(format!(
                        "hard IP `{}` is locked to technology `{}` but no die uses it",
                        b.id, self.technologies[lock.tech].id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Total relative constraint violation: area excursions outside the window (relative
/// to `z`) plus net-count excess `(N − n_max)/n_max` per die pair. Zero iff feasible.
pub fn constraint_violation(pairs: &[(usize, usize, usize)], die_areas: &[f64], window: &AreaWindow, n_max: usize) -> f64 {
    let mut v = 0.0;
    for &(_, _, n) in pairs {
        if n > n_max {
            v += (n - n_max) as f64 / n_max as f64;
        }
    }
    for &a in die_areas {
        v += window.violation(a);
    }
    v
}

/// Evaluates the weighted objective and constraint status of a fully placed solution.
///
/// `die_extents[d]` is the block bounding box of die `d` (width, height), or `None`
/// if the die has not been packed.
pub fn evaluate(
    design: &Design,
    cfg: &ObjectiveConfig,
    window: &AreaWindow,
    blocks: &[PlacedBlock],
    die_extents: &[Option<(f64, f64)>],
) -> Result<ObjectiveBreakdown, ModelError> {
    if blocks.len() != design.blocks.len() {
        return Err(ModelError::State("placement does not cover every block".into()));
    }
    let n_dies = design.dies.len();
    let mut die_areas = Vec::with_capacity(n_dies);
    for (d, ext) in die_extents.iter().enumerate().take(n_dies) {
        let (w, h) = ext.ok_or_else(|| ModelError::State(format!("die `{}` is not packed", design.dies[d].id)))?;
        die_areas.push(die_area(w, h, cfg.die_margin));
    }
    if die_areas.len() != n_dies {
        return Err(ModelError::State("missing die extents".into()));
    }

    let centers: Vec<(f64, f64)> = blocks.iter().map(PlacedBlock::center).collect();
    let mut total_hpwl = 0.0;
    for net in &design.nets {
        total_hpwl += net_hpwl(net, &centers)?;
    }
    let mut total_power = 0.0;
    let mut total_tns = 0.0;
    for (b, pb) in blocks.iter().enumerate() {
        let ppa = design.blocks[b].ppa_at(pb.tech, pb.ratio)?;
        total_power += ppa.power;
        total_tns += ppa.tns_magnitude;
    }
    let total_cost: f64 = design
        .dies
        .iter()
        .zip(&die_areas)
        .map(|(d, &a)| die_cost(a, &design.technologies[d.tech], cfg.cost_scale_by_area))
        .sum();

    let w = &cfg.weights;
    let f = w.omega * total_hpwl + w.beta * total_power + w.gamma * total_cost + w.tau * total_tns;

    let counts = inter_die_counts(&design.nets, |b| blocks[b].die, n_dies);
    let mut pairs = Vec::new();
    for (i, row) in counts.iter().enumerate() {
        for (j, &n) in row.iter().enumerate().skip(i + 1) {
            pairs.push((i, j, n));
        }
    }
    let violation = constraint_violation(&pairs, &die_areas, window, w.n_max);
    let feasible = violation == 0.0;

    Ok(ObjectiveBreakdown {
        total_hpwl,
        total_power,
        total_cost,
        total_tns_magnitude: total_tns,
        f,
        penalty: violation_penalty(cfg.penalty_weight, violation),
        inter_die_net_counts: pairs,
        die_areas,
        feasible,
    })
}

/// Technology ids by index, for reports.
pub fn tech_ids(design: &Design) -> BTreeMap<usize, &str> {
    design
        .technologies
        .iter()
        .enumerate()
        .map(|(i, t)| (i, t.id.as_str()))
        .collect()
}
