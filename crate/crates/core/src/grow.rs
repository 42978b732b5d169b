//! Level-wise growth of the partition tree with top-k pruning, and the
//! consistency step that keeps child counts nonnegative and summing to their
//! parent.

use std::cmp::Ordering;

use crate::domain::SubdomainIndex;
use crate::tree::{NodeId, PartitionTree};

/// Supplies counts for subdomains below the complete part of the tree.
pub trait CountSource {
    fn estimate(&self, level: usize, index: &SubdomainIndex) -> f64;
}

impl<F: Fn(usize, &SubdomainIndex) -> f64> CountSource for F {
    fn estimate(&self, level: usize, index: &SubdomainIndex) -> f64 {
        self(level, index)
    }
}

/// Which correction branches fired in one consistency step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConsistencyOutcome {
    pub children: (f64, f64),
    /// Signed surplus `Λ` after negative children were clamped.
    pub surplus: f64,
    pub clamped_negative: bool,
    pub reassigned: bool,
}

/// Makes a pair of child counts consistent with an (already consistent,
/// nonnegative) parent count.
///
/// Negative children are first clamped to zero. The surplus `Λ = c₀ + c₁ − p`
/// is then split evenly; if that would push a child below zero, the smaller
/// child gets 0 and the larger inherits `p`.
pub fn enforce_consistency(parent: f64, left: f64, right: f64) -> ConsistencyOutcome {
    debug_assert!(parent >= 0.0, "parent count {parent} must be nonnegative");
    let clamped_negative = left < 0.0 || right < 0.0;
    let (c0, c1) = (left.max(0.0), right.max(0.0));
    let surplus = c0 + c1 - parent;
    let half = surplus / 2.0;
    if (c0 - half).min(c1 - half) < 0.0 {
        // Ties cannot reach this branch when `parent >= 0`.
        let children = if c0 < c1 { (0.0, parent) } else { (parent, 0.0) };
        return ConsistencyOutcome { children, surplus, clamped_negative, reassigned: true };
    }
    let a = c0 - half;
    let b = (parent - a).max(0.0);
    ConsistencyOutcome { children: (a, b), surplus, clamped_negative, reassigned: false }
}

/// Size of the count moved between siblings by local error:
/// `|((before₀ − truth₀) − (before₁ − truth₁)) / 2|`.
pub fn consistency_error(before: (f64, f64), truth: (f64, f64)) -> f64 {
    (((before.0 - truth.0) - (before.1 - truth.1)) / 2.0).abs()
}

/// Counts of correction branches taken while growing a tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GrowthStats {
    pub consistency_steps: usize,
    pub clamped_negative: usize,
    pub reassigned: usize,
    pub root_clamped: bool,
}

fn apply(tree: &mut PartitionTree, id: NodeId, stats: &mut GrowthStats) {
    let [a, b] = tree.node(id).children.expect("consistency needs two children");
    let out = enforce_consistency(tree.node(id).count, tree.node(a).count, tree.node(b).count);
    tree.node_mut(a).count = out.children.0;
    tree.node_mut(b).count = out.children.1;
    stats.consistency_steps += 1;
    stats.clamped_negative += usize::from(out.clamped_negative);
    stats.reassigned += usize::from(out.reassigned);
}

/// Top-`k` ids by count, ties broken lexicographically on the index.
pub fn top_k(tree: &PartitionTree, candidates: &[NodeId], k: usize) -> Vec<NodeId> {
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|&x, &y| {
        let (nx, ny) = (tree.node(x), tree.node(y));
        ny.count
            .partial_cmp(&nx.count)
            .unwrap_or(Ordering::Equal)
            .then(nx.index.cmp(&ny.index))
    });
    ranked.truncate(k);
    ranked
}

/// Grows a complete tree of depth `l_star` down to `depth`.
///
/// The complete part is made consistent depth-first (the root is clamped at
/// zero first). Every level-`l_star` leaf is then hot. For each level
/// `l = l_star+1..=depth`, the children of every hot node are attached with
/// counts from `source`, made consistent with their parent, and the top-`k`
/// new nodes become hot for the next level.
pub fn grow_partition(
    mut tree: PartitionTree,
    l_star: usize,
    depth: usize,
    k: usize,
    source: &dyn CountSource,
) -> (PartitionTree, GrowthStats) {
    let mut stats = GrowthStats::default();
    if tree.root().count < 0.0 {
        tree.node_mut(PartitionTree::ROOT).count = 0.0;
        stats.root_clamped = true;
    }
    for id in tree.preorder() {
        if tree.node(id).children.is_some() {
            apply(&mut tree, id, &mut stats);
        }
    }
    let mut hot: Vec<NodeId> = tree.leaves();
    debug_assert!(hot.iter().all(|&id| tree.node(id).index.level() == l_star));
    for level in l_star + 1..=depth {
        let mut attached = Vec::with_capacity(2 * hot.len());
        for &id in &hot {
            let [i0, i1] = tree.node(id).index.children();
            let (c0, c1) = (source.estimate(level, &i0), source.estimate(level, &i1));
            let pair = tree.attach_children(id, c0, c1);
            apply(&mut tree, id, &mut stats);
            attached.extend(pair);
        }
        if level < depth {
            hot = top_k(&tree, &attached, k);
            hot.sort_by_key(|&id| tree.node(id).index);
        }
    }
    (tree, stats)
}
