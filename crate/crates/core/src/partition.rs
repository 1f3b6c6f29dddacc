// SPDX-License-Identifier: Apache-2.0

//! Fiduccia–Mattheyses min-cut partitioning with area balance, used by the baseline.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    pub weights: Vec<f64>,
    pub nets: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(weights: Vec<f64>, nets: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(ModelError::Parameter("vertex weights must be finite and >= 0".into()));
        }
        if nets.iter().flatten().any(|&v| v >= weights.len()) {
            return Err(ModelError::Parameter("net references a missing vertex".into()));
        }
        Ok(Self { weights, nets })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.len()];
        for (e, net) in self.nets.iter().enumerate() {
            for &v in net {
                inc[v].push(e);
            }
        }
        inc
    }
}

/// Number of nets whose pins span more than one part.
pub fn cut_size(hg: &Hypergraph, part: &[usize]) -> usize {
    hg.nets
        .iter()
        .filter(|net| net.iter().any(|&v| part[v] != part[net[0]]))
        .count()
}

/// Allowed deviation of a side's weight from its target.
pub fn balance_tolerance(hg: &Hypergraph, target: f64, rel: f64) -> f64 {
    let max_w = hg.weights.iter().copied().fold(0.0, f64::max);
    (rel * target).max(max_w)
}

/// Side-0 weight bounds for a bipartition giving side 0 `share` of the total.
fn bounds(hg: &Hypergraph, verts: &[usize], share: f64, rel: f64) -> (f64, f64) {
    let total: f64 = verts.iter().map(|&v| hg.weights[v]).sum();
    let target = share * total;
    let sub = Hypergraph {
        weights: verts.iter().map(|&v| hg.weights[v]).collect(),
        nets: Vec::new(),
    };
    let tol = balance_tolerance(&sub, target, rel);
    (target - tol, target + tol)
}

/// One FM pass over `verts`; `side[v]` is 0 or 1. Returns the cut reduction achieved.
fn fm_pass(hg: &Hypergraph, inc: &[Vec<usize>], verts: &[usize], side: &mut [u8], lo: f64, hi: f64, active: &[bool]) -> i64 {
    // pin counts per net and side, over active vertices only
    let mut count = vec![[0i64; 2]; hg.nets.len()];
    for (e, net) in hg.nets.iter().enumerate() {
        for &v in net {
            if active[v] {
                count[e][side[v] as usize] += 1;
            }
        }
    }
    let gain = |v: usize, side: &[u8], count: &[[i64; 2]]| -> i64 {
        let s = side[v] as usize;
        inc[v]
            .iter()
            .map(|&e| {
                let (from, to) = (count[e][s], count[e][1 - s]);
                if from == 1 && to > 0 {
                    1
                } else if to == 0 && from > 1 {
                    -1
                } else {
                    0
                }
            })
            .sum()
    };
    let mut w0: f64 = verts.iter().filter(|&&v| side[v] == 0).map(|&v| hg.weights[v]).sum();
    let mut locked = vec![false; side.len()];
    let mut moves = Vec::new();
    let (mut acc, mut best, mut best_len) = (0i64, 0i64, 0usize);
    loop {
        let mut pick: Option<(i64, usize)> = None;
        for &v in verts {
            if locked[v] {
                continue;
            }
            let nw0 = if side[v] == 0 { w0 - hg.weights[v] } else { w0 + hg.weights[v] };
            if nw0 < lo || nw0 > hi {
                continue;
            }
            let g = gain(v, side, &count);
            if pick.is_none_or(|(bg, _)| g > bg) {
                pick = Some((g, v));
            }
        }
        let Some((g, v)) = pick else { break };
        let s = side[v] as usize;
        for &e in &inc[v] {
            count[e][s] -= 1;
            count[e][1 - s] += 1;
        }
        w0 += if s == 0 { -hg.weights[v] } else { hg.weights[v] };
        side[v] = 1 - side[v];
        locked[v] = true;
        moves.push(v);
        acc += g;
        if acc > best {
            best = acc;
            best_len = moves.len();
        }
    }
    for &v in &moves[best_len..] {
        side[v] = 1 - side[v];
    }
    best
}

/// Random start: shuffled vertices fill side 0 up to its target share.
fn random_start<R: Rng + ?Sized>(hg: &Hypergraph, verts: &[usize], share: f64, side: &mut [u8], rng: &mut R) {
    let total: f64 = verts.iter().map(|&v| hg.weights[v]).sum();
    let target = share * total;
    let mut order = verts.to_vec();
    order.shuffle(rng);
    let mut w0 = 0.0;
    for v in order {
        if w0 + 0.5 * hg.weights[v] <= target {
            side[v] = 0;
            w0 += hg.weights[v];
        } else {
            side[v] = 1;
        }
    }
}

fn cut_within(hg: &Hypergraph, side: &[u8], active: &[bool]) -> usize {
    hg.nets
        .iter()
        .filter(|net| {
            let mut s = net.iter().filter(|&&v| active[v]).map(|&v| side[v]);
            match s.next() {
                Some(first) => s.any(|x| x != first),
                None => false,
            }
        })
        .count()
}

/// Bipartitions `verts` with side 0 holding about `share` of their weight, from
/// `starts` random starts; returns the side of each vertex (indexed by vertex id).
pub fn bipartition<R: Rng + ?Sized>(hg: &Hypergraph, verts: &[usize], share: f64, rel_tol: f64, starts: usize, rng: &mut R) -> Vec<u8> {
    let inc = hg.incidence();
    let mut active = vec![false; hg.len()];
    verts.iter().for_each(|&v| active[v] = true);
    let (lo, hi) = bounds(hg, verts, share, rel_tol);
    let mut best: Option<(usize, Vec<u8>)> = None;
    for _ in 0..starts.max(1) {
        let mut side = vec![0u8; hg.len()];
        random_start(hg, verts, share, &mut side, rng);
        while fm_pass(hg, &inc, verts, &mut side, lo, hi, &active) > 0 {}
        let cut = cut_within(hg, &side, &active);
        if best.as_ref().is_none_or(|(c, _)| cut < *c) {
            best = Some((cut, side));
        }
    }
    best.expect("at least one start").1
}

/// Partitions all vertices into `k` parts of about equal weight by recursive bisection.
pub fn partition<R: Rng + ?Sized>(hg: &Hypergraph, k: usize, rel_tol: f64, starts: usize, rng: &mut R) -> Result<Vec<usize>, ModelError> {
    if k == 0 {
        return Err(ModelError::Parameter("need at least one part".into()));
    }
    let mut part = vec![0usize; hg.len()];
    let all: Vec<usize> = (0..hg.len()).collect();
    split(hg, &all, 0, k, rel_tol, starts, &mut part, rng);
    Ok(part)
}

#[allow(clippy::too_many_arguments)]
fn split<R: Rng + ?Sized>(hg: &Hypergraph, verts: &[usize], first: usize, k: usize, rel_tol: f64, starts: usize, part: &mut [usize], rng: &mut R) {
    if k == 1 || verts.len() <= 1 {
        verts.iter().for_each(|&v| part[v] = first);
        return;
    }
    let k0 = k / 2;
    let side = bipartition(hg, verts, k0 as f64 / k as f64, rel_tol, starts, rng);
    let (a, b): (Vec<usize>, Vec<usize>) = verts.iter().partition(|&&v| side[v] == 0);
    split(hg, &a, first, k0, rel_tol, starts, part, rng);
    split(hg, &b, first + k0, k - k0, rel_tol, starts, part, rng);
}
