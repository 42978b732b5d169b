//! Synthetic data from a finalized tree: inverse-CDF walk from the root to a
//! leaf, then a uniform point inside the leaf's box.
//!
//! Only the finalized tree is read here, never the stream summary.

use rand::Rng;

use crate::domain::Decomposition;
use crate::error::{Error, Result};
use crate::tree::{NodeId, PartitionTree};

/// Picks a leaf with probability `count / root.count`.
pub fn sample_leaf<R: Rng + ?Sized>(tree: &PartitionTree, rng: &mut R) -> Result<NodeId> {
    let total = tree.root().count;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::DegenerateGenerator(total));
    }
    // u ∈ (0, total] so zero-mass children are never entered
    let mut u = total * (1.0 - rng.random::<f64>());
    let mut id = PartitionTree::ROOT;
    while let Some([left, right]) = tree.node(id).children {
        let c = tree.node(left).count;
        id = if c >= u {
            left
        } else {
            u -= c;
            right
        };
        // rounding can leave u just past a zero-mass right child
        if tree.node(id).count <= 0.0 {
            id = if id == left { right } else { left };
        }
    }
    Ok(id)
}

pub fn sample_one<R: Rng + ?Sized>(
    tree: &PartitionTree,
    domain: &dyn Decomposition,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let leaf = sample_leaf(tree, rng)?;
    let cell = domain.bounds(&tree.node(leaf).index);
    Ok(cell
        .lower
        .iter()
        .zip(&cell.upper)
        .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
        .collect())
}

pub fn sample_many<R: Rng + ?Sized>(
    tree: &PartitionTree,
    domain: &dyn Decomposition,
    m: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    (0..m).map(|_| sample_one(tree, domain, rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::HypercubeDomain;
    use crate::noise::seeded_rng;

    #[test]
    fn all_mass_in_one_leaf() {
        let mut t = PartitionTree::new(3.0);
        let [a, _] = t.attach_children(PartitionTree::ROOT, 3.0, 0.0);
        t.attach_children(a, 3.0, 0.0);
        let dom = HypercubeDomain::new(2).unwrap();
        let cell = dom.bounds(&"00".parse().unwrap());
        let mut rng = seeded_rng(1, 2);
        for p in sample_many(&t, &dom, 2000, &mut rng).unwrap() {
            assert!(cell.contains(&p));
        }
    }

    #[test]
    fn degenerate_tree_errors() {
        let t = PartitionTree::new(0.0);
        let dom = HypercubeDomain::new(1).unwrap();
        let mut rng = seeded_rng(1, 2);
        assert!(matches!(sample_one(&t, &dom, &mut rng), Err(Error::DegenerateGenerator(_))));
        assert!(sample_many(&t, &dom, 0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn leaf_frequencies_follow_counts() {
        // leaves "0" = 0.5, "10" = 0.3, "11" = 0.2
        let mut t = PartitionTree::new(1.0);
        let [_, b] = t.attach_children(PartitionTree::ROOT, 0.5, 0.5);
        let [c, d] = t.attach_children(b, 0.3, 0.2);
        let mut rng = seeded_rng(3, 4);
        let n = 100_000;
        let mut hits = [0usize; 3];
        for _ in 0..n {
            let leaf = sample_leaf(&t, &mut rng).unwrap();
            hits[if leaf == c { 1 } else if leaf == d { 2 } else { 0 }] += 1;
        }
        for (h, p) in hits.iter().zip([0.5, 0.3, 0.2]) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!((*h as f64 - n as f64 * p).abs() < 3.0 * sd, "{hits:?}");
        }
    }

    #[test]
    fn balanced_tree_is_uniform() {
        let t = PartitionTree::complete(2, &[4.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0]);
        let leaves = t.leaves();
        let mut rng = seeded_rng(9, 9);
        let n = 100_000;
        let mut hits = vec![0usize; 4];
        for _ in 0..n {
            let id = sample_leaf(&t, &mut rng).unwrap();
            hits[leaves.iter().position(|&l| l == id).unwrap()] += 1;
        }
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for h in hits {
            assert!((h as f64 - n as f64 / 4.0).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn zero_mass_leaves_never_drawn() {
        let t = PartitionTree::complete(2, &[2.0, 0.0, 2.0, 0.0, 0.0, 2.0, 0.0]);
        let mut rng = seeded_rng(5, 5);
        for _ in 0..10_000 {
            let id = sample_leaf(&t, &mut rng).unwrap();
            assert_eq!(t.node(id).index.to_string(), "10");
        }
    }
}
