// SPDX-License-Identifier: Apache-2.0

//! Initial die assignment: average die area, greedy block-to-die assignment and
//! per-block aspect-ratio selection.

use std::cmp::Ordering;

use crate::error::ModelError;
use crate::model::{same_ratio, BlockState, Design, ObjectiveWeights};

#[derive(Debug, Clone, PartialEq)]
pub struct DiePlan {
    /// Average die area in oldest-technology µm².
    pub z: f64,
    /// Blocks on each die, in assignment order.
    pub die_blocks: Vec<Vec<usize>>,
    /// Unit-ratio block area per die, in the die's own technology.
    pub fill: Vec<f64>,
    pub states: Vec<BlockState>,
}

/// Solves `Σ s_i · z = Σ A(b, oldest, 1)` for `z`.
pub fn estimate_z(design: &Design) -> Result<f64, ModelError> {
    let total_scale: f64 = design
        .dies
        .iter()
        .map(|d| design.technologies[d.tech].scale_to_oldest)
        .sum();
    if !(total_scale > 0.0) {
        return Err(ModelError::Config("dies have zero total scale".into()));
    }
    let total_area: f64 = (0..design.blocks.len()).map(|b| design.oldest_equivalent_area(b)).sum();
    Ok(total_area / total_scale)
}

fn unit_area(design: &Design, block: usize, tech: usize) -> Option<f64> {
    design.blocks[block].ppa[tech].map(|p| p.area)
}

/// Greedy assignment in non-increasing oldest-technology area order.
///
/// Each block goes to the first die (in die order) whose own-technology fill stays
/// within `z`; otherwise to the die with the smallest resulting overfill. Hard IPs
/// are placed first, on the matching-technology die with the most room left.
pub fn assign_blocks(design: &Design, z: f64) -> Result<DiePlan, ModelError> {
    if !(z > 0.0) {
        return Err(ModelError::Parameter("average die area must be positive".into()));
    }
    let nd = design.dies.len();
    let mut order: Vec<usize> = (0..design.blocks.len()).collect();
    order.sort_by(|&a, &b| {
        design
            .oldest_equivalent_area(b)
            .partial_cmp(&design.oldest_equivalent_area(a))
            .unwrap_or(Ordering::Equal)
            .then_with(|| design.blocks[a].id.cmp(&design.blocks[b].id))
    });

    let mut die_blocks = vec![Vec::new(); nd];
    let mut fill = vec![0.0; nd];
    let mut states: Vec<Option<BlockState>> = vec![None; design.blocks.len()];

    for &b in order.iter().filter(|&&b| design.blocks[b].is_locked()) {
        let lock = design.blocks[b].hard_ip.expect("filtered to hard IPs");
        let area = unit_area(design, b, lock.tech).expect("validated hard-IP entry");
        let die = (0..nd)
            .filter(|&d| design.dies[d].tech == lock.tech)
            .max_by(|&a, &c| (z - fill[a]).partial_cmp(&(z - fill[c])).unwrap_or(Ordering::Equal).then(c.cmp(&a)))
            .ok_or_else(|| {
                ModelError::Infeasible(format!(
                    "hard IP `{}` is locked to technology `{}` but no die uses it",
                    design.blocks[b].id, design.technologies[lock.tech].id
                ))
            })?;
        fill[die] += area;
        die_blocks[die].push(b);
        states[b] = Some(BlockState {
            die,
            tech: lock.tech,
            ratio: lock.ratio,
        });
    }

    for &b in order.iter().filter(|&&b| !design.blocks[b].is_locked()) {
        let candidates: Vec<(usize, f64)> = (0..nd)
            .filter_map(|d| unit_area(design, b, design.dies[d].tech).map(|a| (d, a)))
            .collect();
        let first_fit = candidates.iter().find(|&&(d, a)| fill[d] + a <= z).copied();
        let (die, area) = match first_fit {
            Some(c) => c,
            None => candidates
                .iter()
                .copied()
                .min_by(|&(d1, a1), &(d2, a2)| {
                    (fill[d1] + a1 - z)
                        .partial_cmp(&(fill[d2] + a2 - z))
                        .unwrap_or(Ordering::Equal)
                        .then(d1.cmp(&d2))
                })
                .ok_or_else(|| {
                    ModelError::Infeasible(format!("block `{}` fits no die technology", design.blocks[b].id))
                })?,
        };
        fill[die] += area;
        die_blocks[die].push(b);
        states[b] = Some(BlockState {
            die,
            tech: design.dies[die].tech,
            ratio: 1.0,
        });
    }

    Ok(DiePlan {
        z,
        die_blocks,
        fill,
        states: states.into_iter().map(|s| s.expect("every block assigned")).collect(),
    })
}

/// Per-block aspect ratio minimizing `β·P + τ·T` at the block's technology.
///
/// Ties go to the option closest to 1, then to the smaller ratio.
pub fn best_ratio(design: &Design, block: usize, tech: usize, weights: &ObjectiveWeights) -> Result<f64, ModelError> {
    let b = &design.blocks[block];
    let mut best: Option<(f64, f64)> = None;
    for &r in &b.ratio_options {
        let ppa = b.ppa_at(tech, r)?;
        let score = weights.beta * ppa.power + weights.tau * ppa.tns_magnitude;
        best = match best {
            None => Some((r, score)),
            Some((br, bs)) => {
                let tol = 1e-12 * bs.abs().max(score.abs());
                let better = score < bs - tol
                    || ((score - bs).abs() <= tol
                        && ((r - 1.0).abs() < (br - 1.0).abs()
                            || ((r - 1.0).abs() == (br - 1.0).abs() && r < br)));
                if better {
                    Some((r, score))
                } else {
                    Some((br, bs))
                }
            }
        };
    }
    Ok(best.expect("nonempty ratio options").0)
}

/// Sets every non-hard-IP block's ratio to its per-block optimum.
pub fn refine_ratios(design: &Design, plan: &mut DiePlan, weights: &ObjectiveWeights) -> Result<(), ModelError> {
    for b in 0..design.blocks.len() {
        if design.blocks[b].is_locked() {
            continue;
        }
        let tech = plan.states[b].tech;
        let r = best_ratio(design, b, tech, weights)?;
        debug_assert!(design.blocks[b].ratio_options.iter().any(|&o| same_ratio(o, r)));
        plan.states[b].ratio = r;
    }
    Ok(())
}

/// Runs all three steps of the initial assignment.
pub fn initial_plan(design: &Design, weights: &ObjectiveWeights) -> Result<DiePlan, ModelError> {
    design.check_hard_ip_dies()?;
    let z = estimate_z(design)?;
    let mut plan = assign_blocks(design, z)?;
    refine_ratios(design, &mut plan, weights)?;
    Ok(plan)
}
