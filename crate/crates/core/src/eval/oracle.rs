//! Non-private reference constructions from exact counts: the full tree, the
//! exactly pruned tree, and tail statistics. These read the raw stream and
//! must never feed the private path.

use std::collections::HashMap;

use crate::domain::{Decomposition, SubdomainIndex};
use crate::error::{Error, Result};
use crate::grow::CountSource;
use crate::tree::{NodeId, PartitionTree};

/// Exact cell counts of a point set at every level up to `depth`.
#[derive(Debug, Clone)]
pub struct ExactHistogram {
    levels: Vec<HashMap<u64, u64>>,
    n: u64,
}

impl ExactHistogram {
    pub fn build(points: &[Vec<f64>], domain: &dyn Decomposition, depth: usize) -> Result<Self> {
        let mut levels = vec![HashMap::new(); depth + 1];
        for p in points {
            let leaf = domain.locate(p, depth)?;
            for (l, counts) in levels.iter_mut().enumerate() {
                *counts.entry(leaf.prefix(l).bits()).or_insert(0) += 1;
            }
        }
        Ok(Self { levels, n: points.len() as u64 })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self, index: &SubdomainIndex) -> u64 {
        self.levels
            .get(index.level())
            .and_then(|m| m.get(&index.bits()))
            .copied()
            .unwrap_or(0)
    }

    /// Nonzero counts at `level`.
    pub fn level_counts(&self, level: usize) -> Result<Vec<u64>> {
        self.levels
            .get(level)
            .map(|m| m.values().copied().collect())
            .ok_or(Error::LevelTooDeep { level, max: self.depth() })
    }
}

impl CountSource for ExactHistogram {
    fn estimate(&self, _level: usize, index: &SubdomainIndex) -> f64 {
        self.count(index) as f64
    }
}

/// `‖tail_k^r‖₁`: mass outside the `k` largest level-`r` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailStats {
    pub level: usize,
    pub k: usize,
    pub tail_norm: f64,
}

pub fn tail_norm(counts: &[u64], k: usize) -> f64 {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted.iter().skip(k).sum::<u64>() as f64
}

pub fn tail_stats(hist: &ExactHistogram, level: usize, k: usize) -> Result<TailStats> {
    Ok(TailStats { level, k, tail_norm: tail_norm(&hist.level_counts(level)?, k) })
}

/// The complete depth-`depth` tree with exact counts.
pub fn full_tree(hist: &ExactHistogram, depth: usize) -> Result<PartitionTree> {
    exact_prune_tree(hist, usize::MAX, depth, depth)
}

/// Exact pruning: complete down to `l_star`; below that, at every level
/// `l_star < l < depth` only the `k` candidates with the largest exact
/// counts (ties: lexicographic) are split further.
pub fn exact_prune_tree(
    hist: &ExactHistogram,
    k: usize,
    l_star: usize,
    depth: usize,
) -> Result<PartitionTree> {
    if depth > hist.depth() || l_star > depth {
        return Err(Error::Input(format!(
            "need L_star <= L <= {}, got L_star = {l_star}, L = {depth}",
            hist.depth()
        )));
    }
    let mut tree = PartitionTree::new(hist.len() as f64);
    let mut split: Vec<NodeId> = vec![PartitionTree::ROOT];
    for level in 1..=depth {
        let mut candidates: Vec<(SubdomainIndex, NodeId)> = Vec::new();
        for &id in &split {
            let [i0, i1] = tree.node(id).index.children();
            let [a, b] = tree.attach_children(id, hist.count(&i0) as f64, hist.count(&i1) as f64);
            candidates.push((i0, a));
            candidates.push((i1, b));
        }
        if level <= l_star {
            split = candidates.into_iter().map(|c| c.1).collect();
        } else {
            candidates.sort_by(|x, y| hist.count(&y.0).cmp(&hist.count(&x.0)).then(x.0.cmp(&y.0)));
            split = candidates.into_iter().take(k).map(|c| c.1).collect();
        }
    }
    Ok(tree)
}
