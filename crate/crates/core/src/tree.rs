//! Arena-backed binary partition tree with real-valued counts.

use crate::domain::SubdomainIndex;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionNode {
    pub index: SubdomainIndex,
    pub count: f64,
    pub children: Option<[NodeId; 2]>,
}

impl PartitionNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTree {
    nodes: Vec<PartitionNode>,
}

impl PartitionTree {
    pub const ROOT: NodeId = 0;

    pub fn new(root_count: f64) -> Self {
        Self {
            nodes: vec![PartitionNode { index: SubdomainIndex::ROOT, count: root_count, children: None }],
        }
    }

    /// Complete tree of the given depth; `counts` is in heap order
    /// (level by level, lexicographic within a level).
    pub fn complete(depth: usize, counts: &[f64]) -> Self {
        assert_eq!(counts.len(), (1usize << (depth + 1)) - 1);
        let mut tree = Self::new(counts[0]);
        let mut frontier = vec![Self::ROOT];
        for level in 1..=depth {
            let base = (1usize << level) - 1;
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for id in frontier {
                let bits = tree.nodes[id].index.bits() as usize;
                let [a, b] = tree.attach_children(
                    id,
                    counts[base + 2 * bits],
                    counts[base + 2 * bits + 1],
                );
                next.extend([a, b]);
            }
            frontier = next;
        }
        tree
    }

    pub fn root(&self) -> &PartitionNode {
        &self.nodes[Self::ROOT]
    }

    pub fn node(&self, id: NodeId) -> &PartitionNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut PartitionNode {
        &mut self.nodes[id]
    }

    pub fn nodes(&self) -> &[PartitionNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn attach_children(&mut self, id: NodeId, left: f64, right: f64) -> [NodeId; 2] {
        assert!(self.nodes[id].children.is_none(), "node {:?} already branched", self.nodes[id].index);
        let [i0, i1] = self.nodes[id].index.children();
        let a = self.nodes.len();
        self.nodes.push(PartitionNode { index: i0, count: left, children: None });
        self.nodes.push(PartitionNode { index: i1, count: right, children: None });
        self.nodes[id].children = Some([a, a + 1]);
        [a, a + 1]
    }

    /// Follows the bits of `index` from the root.
    pub fn find(&self, index: &SubdomainIndex) -> Option<NodeId> {
        let mut id = Self::ROOT;
        for i in 0..index.level() {
            id = self.nodes[id].children?[index.bit(i) as usize];
        }
        Some(id)
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.index.level()).max().unwrap_or(0)
    }

    /// Node ids in depth-first pre-order, left child first.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![Self::ROOT];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some([a, b]) = self.nodes[id].children {
                stack.push(b);
                stack.push(a);
            }
        }
        out
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|&id| self.nodes[id].is_leaf()).collect()
    }

    /// Per-level cut of the tree: at level `l`, every node at level `l` plus
    /// every leaf above it, in lexicographic order. When the tree is
    /// consistent each cut sums to the root count.
    pub fn level_cuts(&self) -> Vec<Vec<(SubdomainIndex, f64)>> {
        let depth = self.depth();
        let mut cuts = vec![Vec::new(); depth + 1];
        for id in self.preorder() {
            let n = &self.nodes[id];
            let l = n.index.level();
            if n.is_leaf() {
                for cut in &mut cuts[l..] {
                    cut.push((n.index, n.count));
                }
            } else {
                cuts[l].push((n.index, n.count));
            }
        }
        cuts
    }

    /// `(index, count, is_leaf)` sorted lexicographically; equal trees have
    /// equal records.
    pub fn records(&self) -> Vec<(SubdomainIndex, f64, bool)> {
        let mut r: Vec<_> = self.nodes.iter().map(|n| (n.index, n.count, n.is_leaf())).collect();
        r.sort_by_key(|x| x.0);
        r
    }

    /// Largest violation of the two consistency constraints (nonnegative
    /// counts, children summing to their parent).
    pub fn consistency_violation(&self) -> f64 {
        let mut worst = (-self.root().count).max(0.0);
        for n in &self.nodes {
            if let Some([a, b]) = n.children {
                let (ca, cb) = (self.nodes[a].count, self.nodes[b].count);
                worst = worst.max((-ca).max(0.0)).max((-cb).max(0.0));
                worst = worst.max((ca + cb - n.count).abs());
            }
        }
        worst
    }

    /// Max count difference between two trees of identical shape, or `None`
    /// when their shapes differ.
    pub fn max_count_difference(&self, other: &PartitionTree) -> Option<f64> {
        let (a, b) = (self.records(), other.records());
        if a.len() != b.len() {
            return None;
        }
        let mut worst = 0.0f64;
        for (x, y) in a.iter().zip(&b) {
            if x.0 != y.0 || x.2 != y.2 {
                return None;
            }
            worst = worst.max((x.1 - y.1).abs());
        }
        Some(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_tree_layout() {
        let counts: Vec<f64> = (0..7).map(f64::from).collect();
        let t = PartitionTree::complete(2, &counts);
        assert_eq!(t.len(), 7);
        assert_eq!(t.node(t.find(&"10".parse().unwrap()).unwrap()).count, 5.0);
        assert_eq!(t.node(t.find(&"0".parse().unwrap()).unwrap()).count, 1.0);
        let leaves: Vec<String> = t.leaves().iter().map(|&id| t.node(id).index.to_string()).collect();
        assert_eq!(leaves, ["00", "01", "10", "11"]);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn level_cuts_carry_shallow_leaves() {
        let mut t = PartitionTree::new(4.0);
        let [a, _] = t.attach_children(PartitionTree::ROOT, 3.0, 1.0);
        t.attach_children(a, 2.0, 1.0);
        let cuts = t.level_cuts();
        assert_eq!(cuts.len(), 3);
        for cut in &cuts {
            assert_eq!(cut.iter().map(|c| c.1).sum::<f64>(), 4.0);
        }
        assert_eq!(cuts[2].len(), 3);
        assert_eq!(t.consistency_violation(), 0.0);
        assert!(t.find(&"10".parse().unwrap()).is_none());
    }

    #[test]
    fn root_only_tree_has_one_level() {
        let t = PartitionTree::new(0.0);
        assert_eq!(t.level_cuts().len(), 1);
        assert_eq!(t.leaves(), vec![PartitionTree::ROOT]);
    }
}
