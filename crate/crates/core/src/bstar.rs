// SPDX-License-Identifier: Apache-2.0

//! B*-tree floorplan representation.
//!
//! A node's left child sits immediately to its right (`x = x(n) + w(n)`); its right
//! child sits above it at the same `x`. `y` comes from a horizontal contour, so
//! every block rests on the highest block already placed under its x-span.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{hpwl_of_points, same_ratio, Net};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub block: usize,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub parent: Option<usize>,
}

impl Node {
    fn leaf(block: usize, parent: Option<usize>) -> Self {
        Self {
            block,
            left: None,
            right: None,
            parent,
        }
    }

    pub fn child(&self, side: Side) -> Option<usize> {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    fn child_mut(&mut self, side: Side) -> &mut Option<usize> {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }
}

/// Arena-backed binary tree over block indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BStarTree {
    nodes: Vec<Node>,
    root: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }

    /// True when the open interiors intersect.
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x < o.x + o.w && o.x < self.x + self.w && self.y < o.y + o.h && o.y < self.y + self.h
    }
}

/// Packed coordinates, indexed by node index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Packing {
    pub rects: Vec<Rect>,
    pub width: f64,
    pub height: f64,
}

impl Packing {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    Swap,
    Rotate,
    RemoveInsert,
    RatioChange,
}

impl MoveKind {
    pub const ALL: [MoveKind; 4] = [MoveKind::Swap, MoveKind::Rotate, MoveKind::RemoveInsert, MoveKind::RatioChange];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// No node is eligible for the requested perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoEligible(pub MoveKind);

/// What a successful perturbation changed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Applied {
    Swapped(usize, usize),
    Reinserted { node: usize },
    Reshaped { block: usize, old_ratio: f64 },
}

/// Aspect-ratio state seen by the perturbation operators.
pub trait BlockShapes {
    fn ratio(&self, block: usize) -> f64;
    fn ratio_options(&self, block: usize) -> &[f64];
    fn is_locked(&self, block: usize) -> bool;
    fn set_ratio(&mut self, block: usize, ratio: f64);
}

impl BStarTree {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(block: usize) -> Self {
        Self {
            nodes: vec![Node::leaf(block, None)],
            root: Some(0),
        }
    }

    /// Builds a tree from raw nodes, validating structure.
    pub fn from_nodes(nodes: Vec<Node>, root: Option<usize>) -> Result<Self, ModelError> {
        let t = Self { nodes, root };
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().map(|n| n.block)
    }

    pub fn node_of_block(&self, block: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.block == block)
    }

    /// Checks root uniqueness, link consistency, acyclicity and block uniqueness.
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::Structure(m.to_string()));
        let n = self.nodes.len();
        match self.root {
            None if n == 0 => return Ok(()),
            None => return err("nonempty tree without root"),
            Some(r) if r >= n => return err("root out of range"),
            Some(r) if self.nodes[r].parent.is_some() => return err("root has a parent"),
            _ => {}
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.root.unwrap()];
        let mut count = 0;
        while let Some(i) = stack.pop() {
            if seen[i] {
                return err("cycle detected");
            }
            seen[i] = true;
            count += 1;
            for c in [self.nodes[i].left, self.nodes[i].right].into_iter().flatten() {
                if c >= n {
                    return err("child out of range");
                }
                if self.nodes[c].parent != Some(i) {
                    return err("child/parent links disagree");
                }
                stack.push(c);
            }
        }
        if count != n {
            return err("unreachable nodes");
        }
        let mut blocks: Vec<usize> = self.blocks().collect();
        blocks.sort_unstable();
        if blocks.windows(2).any(|w| w[0] == w[1]) {
            return err("block appears twice");
        }
        Ok(())
    }

    /// Node indices in depth-first preorder, left subtree first.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<usize> = self.root.into_iter().collect();
        while let Some(i) = stack.pop() {
            out.push(i);
            let n = &self.nodes[i];
            if let Some(r) = n.right {
                stack.push(r);
            }
            if let Some(l) = n.left {
                stack.push(l);
            }
        }
        out
    }

    /// Every `(node, side)` whose child slot is empty, in node order.
    pub fn free_slots(&self) -> Vec<(usize, Side)> {
        let mut out = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if self.is_attached(i) {
                if n.left.is_none() {
                    out.push((i, Side::Left));
                }
                if n.right.is_none() {
                    out.push((i, Side::Right));
                }
            }
        }
        out
    }

    fn is_attached(&self, i: usize) -> bool {
        self.root == Some(i) || self.nodes[i].parent.is_some()
    }

    /// Adds `block` as a new node; becomes root when the tree is empty.
    pub fn insert(&mut self, block: usize, slot: Option<(usize, Side)>) -> Result<usize, ModelError> {
        let idx = self.nodes.len();
        match (self.root, slot) {
            (None, _) => {
                self.nodes.push(Node::leaf(block, None));
                self.root = Some(idx);
            }
            (Some(_), Some((p, side))) => {
                if p >= self.nodes.len() || self.nodes[p].child(side).is_some() {
                    return Err(ModelError::Structure("insertion slot is not free".into()));
                }
                self.nodes.push(Node::leaf(block, Some(p)));
                *self.nodes[p].child_mut(side) = Some(idx);
            }
            (Some(_), None) => return Err(ModelError::Structure("insertion needs a slot".into())),
        }
        Ok(idx)
    }

    fn attach(&mut self, node: usize, parent: usize, side: Side) {
        *self.nodes[parent].child_mut(side) = Some(node);
        self.nodes[node].parent = Some(parent);
    }

    /// Unlinks `node` from the tree, keeping it in the arena without links.
    ///
    /// The left child (or the right one when there is no left) takes the node's
    /// place; a remaining right subtree hangs off the leftmost free left slot of
    /// the promoted subtree.
    fn detach(&mut self, node: usize) {
        let Node { left, right, parent, .. } = self.nodes[node].clone();
        let promoted = left.or(right);
        let remaining = if left.is_some() { right } else { None };

        match parent {
            Some(p) => {
                let side = if self.nodes[p].left == Some(node) { Side::Left } else { Side::Right };
                *self.nodes[p].child_mut(side) = promoted;
            }
            None => self.root = promoted,
        }
        if let Some(c) = promoted {
            self.nodes[c].parent = parent;
        }
        if let (Some(top), Some(rest)) = (promoted, remaining) {
            let mut cur = top;
            while let Some(l) = self.nodes[cur].left {
                cur = l;
            }
            self.attach(rest, cur, Side::Left);
        }
        let n = &mut self.nodes[node];
        n.left = None;
        n.right = None;
        n.parent = None;
    }

    /// Removes the node holding `block` from the tree entirely.
    pub fn remove_block(&mut self, block: usize) -> Result<(), ModelError> {
        let node = self
            .node_of_block(block)
            .ok_or_else(|| ModelError::Structure(format!("block #{block} not in tree")))?;
        self.detach(node);
        let last = self.nodes.len() - 1;
        self.nodes.swap_remove(node);
        if node != last {
            // the former last node now lives at `node`; repoint its neighbours
            let moved = self.nodes[node].clone();
            if let Some(p) = moved.parent {
                let pn = &mut self.nodes[p];
                if pn.left == Some(last) {
                    pn.left = Some(node);
                } else {
                    pn.right = Some(node);
                }
            }
            for c in [moved.left, moved.right].into_iter().flatten() {
                self.nodes[c].parent = Some(node);
            }
            if self.root == Some(last) {
                self.root = Some(node);
            }
        }
        if self.nodes.is_empty() {
            self.root = None;
        }
        Ok(())
    }

    /// Packs the tree with a horizontal contour. `dims(block)` gives `(w, h)`.
    pub fn pack(&self, dims: impl Fn(usize) -> (f64, f64)) -> Packing {
        let mut rects = vec![Rect::default(); self.nodes.len()];
        let mut contour = Contour::default();
        let (mut width, mut height) = (0.0f64, 0.0f64);
        let mut stack: Vec<(usize, f64)> = self.root.map(|r| (r, 0.0)).into_iter().collect();
        while let Some((i, x)) = stack.pop() {
            let n = &self.nodes[i];
            let (w, h) = dims(n.block);
            let y = contour.place(x, x + w, h);
            rects[i] = Rect { x, y, w, h };
            width = width.max(x + w);
            height = height.max(y + h);
            if let Some(r) = n.right {
                stack.push((r, x));
            }
            if let Some(l) = n.left {
                stack.push((l, x + w));
            }
        }
        Packing { rects, width, height }
    }

    /// Applies one perturbation of `kind`, choosing operands uniformly.
    pub fn perturb<S: BlockShapes, R: Rng + ?Sized>(
        &mut self,
        kind: MoveKind,
        shapes: &mut S,
        rng: &mut R,
    ) -> Result<Applied, NoEligible> {
        let n = self.nodes.len();
        match kind {
            MoveKind::Swap => {
                if n < 2 {
                    return Err(NoEligible(kind));
                }
                let a = rng.gen_range(0..n);
                let mut b = rng.gen_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let (ba, bb) = (self.nodes[a].block, self.nodes[b].block);
                self.nodes[a].block = bb;
                self.nodes[b].block = ba;
                Ok(Applied::Swapped(a, b))
            }
            MoveKind::Rotate => {
                let eligible: Vec<(usize, f64)> = self
                    .nodes
                    .iter()
                    .filter(|nd| !shapes.is_locked(nd.block))
                    .filter_map(|nd| {
                        let r = shapes.ratio(nd.block);
                        let inv = 1.0 / r;
                        if same_ratio(r, inv) {
                            return None;
                        }
                        shapes
                            .ratio_options(nd.block)
                            .iter()
                            .find(|&&o| same_ratio(o, inv))
                            .map(|&o| (nd.block, o))
                    })
                    .collect();
                let &(block, new) = eligible.choose(rng).ok_or(NoEligible(kind))?;
                let old_ratio = shapes.ratio(block);
                shapes.set_ratio(block, new);
                Ok(Applied::Reshaped { block, old_ratio })
            }
            MoveKind::RatioChange => {
                let eligible: Vec<usize> = self
                    .nodes
                    .iter()
                    .map(|nd| nd.block)
                    .filter(|&b| {
                        let r = shapes.ratio(b);
                        !shapes.is_locked(b) && shapes.ratio_options(b).iter().any(|&o| !same_ratio(o, r))
                    })
                    .collect();
                let &block = eligible.choose(rng).ok_or(NoEligible(kind))?;
                let old_ratio = shapes.ratio(block);
                let choices: Vec<f64> = shapes
                    .ratio_options(block)
                    .iter()
                    .copied()
                    .filter(|&o| !same_ratio(o, old_ratio))
                    .collect();
                let &new = choices.choose(rng).expect("eligible block has another option");
                shapes.set_ratio(block, new);
                Ok(Applied::Reshaped { block, old_ratio })
            }
            MoveKind::RemoveInsert => {
                if n < 2 {
                    return Err(NoEligible(kind));
                }
                let root = self.root.expect("nonempty tree has a root");
                let mut node = rng.gen_range(0..n - 1);
                if node >= root {
                    node += 1;
                }
                self.detach(node);
                let mut hosts: Vec<usize> = Vec::new();
                for (i, nd) in self.nodes.iter().enumerate() {
                    if i != node && self.is_attached(i) && (nd.left.is_none() || nd.right.is_none()) {
                        hosts.push(i);
                    }
                }
                let &host = hosts.choose(rng).expect("a finite tree always has a free slot");
                let h = &self.nodes[host];
                let side = match (h.left, h.right) {
                    (None, None) => {
                        if rng.gen_bool(0.5) {
                            Side::Left
                        } else {
                            Side::Right
                        }
                    }
                    (None, Some(_)) => Side::Left,
                    _ => Side::Right,
                };
                self.attach(node, host, side);
                Ok(Applied::Reinserted { node })
            }
        }
    }

    /// Tree with all left and right children exchanged.
    pub fn mirrored(&self) -> Self {
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                block: n.block,
                left: n.right,
                right: n.left,
                parent: n.parent,
            })
            .collect();
        Self { nodes, root: self.root }
    }
}

/// Builds a random tree: a shuffled block order inserted at uniformly chosen free slots.
pub fn random_tree<R: Rng + ?Sized>(blocks: &[usize], rng: &mut R) -> BStarTree {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut t = BStarTree::empty();
    for b in order {
        if t.is_empty() {
            t.insert(b, None).expect("root insertion");
        } else {
            let slots = t.free_slots();
            let slot = *slots.choose(rng).expect("free slot");
            t.insert(b, Some(slot)).expect("free slot insertion");
        }
    }
    t
}

/// Skyline of placed blocks as sorted, disjoint `[x0, x1)` segments.
#[derive(Debug, Default)]
struct Contour {
    segs: Vec<(f64, f64, f64)>,
}

impl Contour {
    /// Places a block on `[x0, x1)`; returns its `y` and raises the skyline by `h`.
    fn place(&mut self, x0: f64, x1: f64, h: f64) -> f64 {
        let mut y = 0.0f64;
        for &(a, b, sy) in &self.segs {
            if a < x1 && b > x0 {
                y = y.max(sy);
            }
        }
        let top = y + h;
        let mut next = Vec::with_capacity(self.segs.len() + 2);
        let mut inserted = false;
        for &(a, b, sy) in &self.segs {
            if b <= x0 || a >= x1 {
                if !inserted && a >= x1 {
                    next.push((x0, x1, top));
                    inserted = true;
                }
                next.push((a, b, sy));
                continue;
            }
            if a < x0 {
                next.push((a, x0, sy));
            }
            if !inserted {
                next.push((x0, x1, top));
                inserted = true;
            }
            if b > x1 {
                next.push((x1, b, sy));
            }
        }
        if !inserted {
            next.push((x0, x1, top));
        }
        self.segs = next;
        y
    }
}

type Point = (f64, f64);
// (weight, [(preorder position, center)])
type LocalNet = (f64, Vec<(usize, Point)>);

/// Per-level B*-tree statistics, `5·h` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// Per-node statistics: height, nodes with a right child, nodes with a left
/// child, node count, and HPWL of nets restricted to the subtree's blocks.
pub fn node_features(tree: &BStarTree, packing: &Packing, nets: &[Net]) -> Vec<[f64; 5]> {
    let n = tree.len();
    let order = tree.preorder();
    let mut pos = vec![0usize; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let mut height = vec![0usize; n];
    let mut n_right = vec![0usize; n];
    let mut n_left = vec![0usize; n];
    let mut size = vec![0usize; n];
    for &i in order.iter().rev() {
        let nd = tree.node(i);
        let mut h = 0;
        size[i] = 1;
        n_left[i] = nd.left.is_some() as usize;
        n_right[i] = nd.right.is_some() as usize;
        for c in [nd.left, nd.right].into_iter().flatten() {
            h = h.max(height[c]);
            size[i] += size[c];
            n_left[i] += n_left[c];
            n_right[i] += n_right[c];
        }
        height[i] = h + 1;
    }

    // preorder position of each block present in this tree
    let max_block = tree.blocks().max().map_or(0, |m| m + 1);
    let mut block_pos = vec![usize::MAX; max_block];
    for (i, nd) in tree.nodes().iter().enumerate() {
        block_pos[nd.block] = pos[i];
    }
    // nets with at least two pins in this tree
    let local_nets: Vec<LocalNet> = nets
        .iter()
        .filter_map(|net| {
            let pins: Vec<(usize, Point)> = net
                .pins
                .iter()
                .filter(|&&b| b < max_block && block_pos[b] != usize::MAX)
                .map(|&b| (block_pos[b], packing.rects[order[block_pos[b]]].center()))
                .collect();
            (pins.len() >= 2).then_some((net.weight, pins))
        })
        .collect();

    (0..n)
        .map(|i| {
            let (lo, hi) = (pos[i], pos[i] + size[i]);
            let hpwl: f64 = local_nets
                .iter()
                .map(|(w, pins)| {
                    let inside: Vec<(f64, f64)> = pins
                        .iter()
                        .filter(|(p, _)| *p >= lo && *p < hi)
                        .map(|(_, c)| *c)
                        .collect();
                    if inside.len() >= 2 {
                        w * hpwl_of_points(inside)
                    } else {
                        0.0
                    }
                })
                .sum();
            [height[i] as f64, n_right[i] as f64, n_left[i] as f64, size[i] as f64, hpwl]
        })
        .collect()
}

/// Concatenated per-level means of node features for levels `0..h`; absent levels are zero.
pub fn extract_features(tree: &BStarTree, packing: &Packing, nets: &[Net], h: usize) -> Result<FeatureVector, ModelError> {
    if h == 0 {
        return Err(ModelError::Parameter("feature height must be positive".into()));
    }
    let mut values = vec![0.0; 5 * h];
    let Some(root) = tree.root() else {
        return Ok(FeatureVector { values });
    };
    let feats = node_features(tree, packing, nets);
    let mut level = vec![root];
    for d in 0..h {
        if level.is_empty() {
            break;
        }
        for &i in &level {
            for k in 0..5 {
                values[5 * d + k] += feats[i][k];
            }
        }
        for v in &mut values[5 * d..5 * d + 5] {
            *v /= level.len() as f64;
        }
        level = level
            .iter()
            .flat_map(|&i| [tree.node(i).left, tree.node(i).right])
            .flatten()
            .collect();
    }
    Ok(FeatureVector { values })
}
