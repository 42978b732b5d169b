//! 1-Wasserstein distances.
//!
//! In one dimension W1 is the L1 distance between CDFs and is computed
//! exactly, either between two samples or between a sample and the
//! piecewise-uniform measure of a tree. In higher dimensions both measures
//! are discretized to cell centers and the transport problem is solved
//! exactly with successive shortest paths.

use serde::{Deserialize, Serialize};

use crate::domain::{Decomposition, SubdomainIndex};
use crate::error::{Error, Result};
use crate::tree::PartitionTree;

/// Largest combined support accepted by [`w1_leaf_flow`].
pub const MAX_FLOW_SUPPORT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum W1Method {
    #[serde(rename = "exact-1d")]
    Exact1d,
    #[serde(rename = "leaf-flow")]
    LeafFlow,
}

fn check_sorted(xs: &[f64], name: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Input(format!("{name} is empty")));
    }
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Input(format!("{name} is not sorted")));
    }
    Ok(())
}

/// W1 between the empirical measures of two sorted samples.
pub fn w1_exact_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    check_sorted(a, "first sample")?;
    check_sorted(b, "second sample")?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    let mut prev = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(total)
}

/// `∫ |c − f(t)| dt` over an interval of length `len` where `f` runs linearly
/// from `f0` to `f1`.
fn abs_linear_area(c: f64, f0: f64, f1: f64, len: f64) -> f64 {
    let (g0, g1) = (f0 - c, f1 - c);
    if g0 * g1 >= 0.0 {
        0.5 * (g0.abs() + g1.abs()) * len
    } else {
        0.5 * len * (g0 * g0 + g1 * g1) / (g0.abs() + g1.abs())
    }
}

/// Exact W1 between a sorted 1-D sample and the tree's sampling measure
/// (leaf mass spread uniformly over the leaf interval).
pub fn w1_points_vs_tree_1d(
    points: &[f64],
    tree: &PartitionTree,
    domain: &dyn Decomposition,
) -> Result<f64> {
    if domain.dimension() != 1 {
        return Err(Error::Input("exact W1 against a tree needs d = 1".into()));
    }
    check_sorted(points, "sample")?;
    let total = tree.root().count;
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateGenerator(total));
    }
    let n = points.len() as f64;
    let mut consumed = 0usize;
    let mut cum = 0.0;
    let mut area = 0.0;
    for id in tree.leaves() {
        let cell = domain.bounds(&tree.node(id).index);
        let (lo, hi) = (cell.lower[0], cell.upper[0]);
        let mass = tree.node(id).count.max(0.0) / total;
        let slope = mass / (hi - lo);
        let mut s = lo;
        let mut f_s = cum;
        loop {
            while consumed < points.len() && points[consumed] <= s {
                consumed += 1;
            }
            let e = match points.get(consumed) {
                Some(&x) if x < hi => x,
                _ => hi,
            };
            let f_e = cum + slope * (e - lo);
            area += abs_linear_area(consumed as f64 / n, f_s, f_e, e - s);
            s = e;
            f_s = f_e;
            if e >= hi {
                break;
            }
        }
        cum += mass;
    }
    Ok(area)
}

/// A discrete measure on cells of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeasure {
    pub level: usize,
    pub cells: Vec<(SubdomainIndex, f64)>,
}

impl CellMeasure {
    pub fn total(&self) -> f64 {
        self.cells.iter().map(|c| c.1).sum()
    }

    fn normalized(&self) -> Result<Vec<(SubdomainIndex, f64)>> {
        let total = self.total();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::Input("measure has no mass".into()));
        }
        Ok(self.cells.iter().filter(|c| c.1 > 0.0).map(|&(i, m)| (i, m / total)).collect())
    }

    /// Empirical measure of `points` on level-`level` cells.
    pub fn from_points(points: &[Vec<f64>], domain: &dyn Decomposition, level: usize) -> Result<Self> {
        let mut counts = std::collections::BTreeMap::new();
        for p in points {
            *counts.entry(domain.locate(p, level)?).or_insert(0.0) += 1.0;
        }
        Ok(Self { level, cells: counts.into_iter().collect() })
    }

    /// The tree's measure on level-`level` cells: deeper leaves are merged
    /// into their ancestor, shallower leaves are spread evenly over their
    /// descendants.
    pub fn from_tree(tree: &PartitionTree, level: usize) -> Result<Self> {
        let mut cells = std::collections::BTreeMap::new();
        for id in tree.leaves() {
            let node = tree.node(id);
            if node.count <= 0.0 {
                continue;
            }
            let l = node.index.level();
            if l >= level {
                *cells.entry(node.index.prefix(level)).or_insert(0.0) += node.count;
            } else {
                let spread = level - l;
                if spread >= 63 || (1usize << spread) > MAX_FLOW_SUPPORT {
                    return Err(Error::SupportTooLarge { cells: usize::MAX, limit: MAX_FLOW_SUPPORT });
                }
                let share = node.count / (1u64 << spread) as f64;
                for tail in 0..1u64 << spread {
                    let idx = SubdomainIndex::new((node.index.bits() << spread) | tail, level)?;
                    *cells.entry(idx).or_insert(0.0) += share;
                }
                if cells.len() > MAX_FLOW_SUPPORT {
                    return Err(Error::SupportTooLarge { cells: cells.len(), limit: MAX_FLOW_SUPPORT });
                }
            }
        }
        Ok(Self { level, cells: cells.into_iter().collect() })
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Exact W1 (l∞ ground metric) between two cell measures, after normalizing
/// both to unit mass. The discretization error relative to the underlying
/// continuous measures is at most the level's maximal cell diameter.
pub fn w1_leaf_flow(mu: &CellMeasure, nu: &CellMeasure, domain: &dyn Decomposition) -> Result<f64> {
    let (a, b) = (mu.normalized()?, nu.normalized()?);
    if a.len() + b.len() > MAX_FLOW_SUPPORT {
        return Err(Error::SupportTooLarge { cells: a.len() + b.len(), limit: MAX_FLOW_SUPPORT });
    }
    let ca: Vec<Vec<f64>> = a.iter().map(|c| domain.bounds(&c.0).center()).collect();
    let cb: Vec<Vec<f64>> = b.iter().map(|c| domain.bounds(&c.0).center()).collect();
    let supply: Vec<f64> = a.iter().map(|c| c.1).collect();
    let demand: Vec<f64> = b.iter().map(|c| c.1).collect();
    Ok(transport_cost(&supply, &demand, |i, j| linf(&ca[i], &cb[j])))
}

/// Minimum-cost transport between `supply` and `demand` (equal totals) on the
/// complete bipartite graph with edge costs `cost(i, j) ≥ 0`.
pub fn transport_cost(supply: &[f64], demand: &[f64], cost: impl Fn(usize, usize) -> f64) -> f64 {
    const TOL: f64 = 1e-14;
    let (na, nb) = (supply.len(), demand.len());
    let c: Vec<f64> = (0..na * nb).map(|x| cost(x / nb, x % nb)).collect();
    let mut flow = vec![0.0; na * nb];
    let mut left = supply.to_vec();
    let mut need = demand.to_vec();
    // nodes: sources 0..na, sinks na..na+nb, terminal na+nb
    let nodes = na + nb + 1;
    let terminal = na + nb;
    let mut pot = vec![0.0f64; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    let remaining = |left: &[f64]| left.iter().filter(|&&x| x > TOL).sum::<f64>();
    while remaining(&left) > TOL {
        dist.fill(f64::INFINITY);
        prev.fill(usize::MAX);
        done.fill(false);
        // every source with supply left is reachable from the super source at cost 0
        for i in 0..na {
            if left[i] > TOL {
                dist[i] = -pot[i];
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX || u == terminal {
                break;
            }
            done[u] = true;
            let du = dist[u];
            let relax = |v: usize, w: f64, dist: &mut Vec<f64>, prev: &mut Vec<usize>| {
                let nd = du + (w + pot[u] - pot[v]).max(0.0);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                }
            };
            if u < na {
                for j in 0..nb {
                    relax(na + j, c[u * nb + j], &mut dist, &mut prev);
                }
            } else {
                let j = u - na;
                for i in 0..na {
                    if flow[i * nb + j] > TOL {
                        relax(i, -c[i * nb + j], &mut dist, &mut prev);
                    }
                }
                if need[j] > TOL {
                    relax(terminal, 0.0, &mut dist, &mut prev);
                }
            }
        }
        if !dist[terminal].is_finite() {
            break;
        }
        let dt = dist[terminal];
        for v in 0..nodes {
            pot[v] += dist[v].min(dt);
        }
        // walk back: terminal <- sink <- source <- sink <- ... <- source
        let mut path = vec![terminal];
        let mut v = terminal;
        while prev[v] != usize::MAX {
            v = prev[v];
            path.push(v);
        }
        path.reverse();
        let start = path[0];
        let sink = path[path.len() - 2] - na;
        let mut push = left[start].min(need[sink]);
        for w in path[..path.len() - 1].windows(2) {
            if w[0] >= na {
                // backward edge sink -> source cancels flow
                push = push.min(flow[w[1] * nb + (w[0] - na)]);
            }
        }
        for w in path[..path.len() - 1].windows(2) {
            if w[0] < na {
                flow[w[0] * nb + (w[1] - na)] += push;
            } else {
                flow[w[1] * nb + (w[0] - na)] -= push;
            }
        }
        left[start] -= push;
        need[sink] -= push;
    }
    flow.iter().zip(&c).map(|(f, w)| f * w).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::HypercubeDomain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_dimensional_examples() {
        assert_eq!(w1_exact_1d(&[0.1, 0.4, 0.4], &[0.1, 0.4, 0.4]).unwrap(), 0.0);
        assert_eq!(w1_exact_1d(&[0.0; 5], &[1.0; 5]).unwrap(), 1.0);
        assert!((w1_exact_1d(&[0.0, 1.0], &[0.5, 0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!(w1_exact_1d(&[], &[0.5]).is_err());
        assert!(w1_exact_1d(&[0.5, 0.1], &[0.5]).is_err());
    }

    #[test]
    fn metric_axioms_on_random_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut sample = |n: usize| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(2)).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        for _ in 0..200 {
            let (x, y, z) = (sample(7), sample(12), sample(3));
            let xy = w1_exact_1d(&x, &y).unwrap();
            let yx = w1_exact_1d(&y, &x).unwrap();
            let yz = w1_exact_1d(&y, &z).unwrap();
            let xz = w1_exact_1d(&x, &z).unwrap();
            assert!((xy - yx).abs() < 1e-12);
            assert!(xz <= xy + yz + 1e-12);
            assert!(w1_exact_1d(&x, &x).unwrap() < 1e-12);
        }
    }

    #[test]
    fn tree_measure_against_uniform_root() {
        // Uniform measure on [0,1] vs a point mass at 0.5 costs 1/4.
        let dom = HypercubeDomain::new(1).unwrap();
        let t = PartitionTree::new(1.0);
        assert!((w1_points_vs_tree_1d(&[0.5], &t, &dom).unwrap() - 0.25).abs() < 1e-15);
        // ...and a point mass at 0 costs 1/2.
        assert!((w1_points_vs_tree_1d(&[0.0], &t, &dom).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tree_measure_matches_dense_sampling() {
        let dom = HypercubeDomain::new(1).unwrap();
        let mut t = PartitionTree::new(10.0);
        let [a, b] = t.attach_children(PartitionTree::ROOT, 7.0, 3.0);
        t.attach_children(a, 1.0, 6.0);
        t.attach_children(b, 3.0, 0.0);
        let pts = [0.05, 0.3, 0.3, 0.33, 0.61, 0.9];
        let exact = w1_points_vs_tree_1d(&pts, &t, &dom).unwrap();
        // quantile grid of the tree measure as a reference sample
        let leaves: Vec<(f64, f64, f64)> = t
            .leaves()
            .iter()
            .map(|&id| {
                let c = dom.bounds(&t.node(id).index);
                (c.lower[0], c.upper[0], t.node(id).count / 10.0)
            })
            .collect();
        let m = 200_000;
        let grid: Vec<f64> = (0..m)
            .map(|i| {
                let mut q = (i as f64 + 0.5) / m as f64;
                for &(lo, hi, p) in &leaves {
                    if q <= p && p > 0.0 {
                        return lo + (hi - lo) * q / p;
                    }
                    q -= p;
                }
                1.0
            })
            .collect();
        let approx = w1_exact_1d(&pts, &grid).unwrap();
        assert!((exact - approx).abs() < 1e-4, "{exact} vs {approx}");
    }

    #[test]
    fn leaf_flow_basics() {
        let dom = HypercubeDomain::new(2).unwrap();
        let i = |s: &str| s.parse::<SubdomainIndex>().unwrap();
        let mu = CellMeasure { level: 2, cells: vec![(i("00"), 1.0), (i("11"), 3.0)] };
        assert!(w1_leaf_flow(&mu, &mu, &dom).unwrap() < 1e-15);
        // centers (0.25,0.25) and (0.75,0.25): l∞ distance 0.5
        let a = CellMeasure { level: 2, cells: vec![(i("00"), 2.0)] };
        let b = CellMeasure { level: 2, cells: vec![(i("10"), 5.0)] };
        assert!((w1_leaf_flow(&a, &b, &dom).unwrap() - 0.5).abs() < 1e-15);
    }

    /// Transport LP solved by enumerating basic feasible solutions: choose
    /// m+n−1 cells, solve the equality system restricted to them, keep
    /// nonnegative solutions.
    fn vertex_enumeration(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
        let (m, n) = (supply.len(), demand.len());
        let basis = m + n - 1;
        let mut best = f64::INFINITY;
        for mask in 0u32..1 << (m * n) {
            if mask.count_ones() as usize != basis {
                continue;
            }
            let vars: Vec<usize> = (0..m * n).filter(|v| mask >> v & 1 == 1).collect();
            // rows: m supply rows, first n-1 demand rows (the last is implied)
            let mut a = vec![vec![0.0; basis + 1]; basis];
            for (col, &v) in vars.iter().enumerate() {
                let (r, c) = (v / n, v % n);
                a[r][col] = 1.0;
                if c < n - 1 {
                    a[m + c][col] = 1.0;
                }
            }
            for r in 0..m {
                a[r][basis] = supply[r];
            }
            for c in 0..n - 1 {
                a[m + c][basis] = demand[c];
            }
            let Some(x) = gauss(a) else { continue };
            if x.iter().any(|&v| v < -1e-12) {
                continue;
            }
            let last: f64 = vars.iter().zip(&x).filter(|(v, _)| **v % n == n - 1).map(|(_, x)| x).sum();
            if (last - demand[n - 1]).abs() > 1e-9 {
                continue;
            }
            let total: f64 = vars.iter().zip(&x).map(|(&v, x)| x * cost[v / n][v % n]).sum();
            best = best.min(total);
        }
        best
    }

    fn gauss(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
        let n = a.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
            if a[piv][col].abs() < 1e-12 {
                return None;
            }
            a.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    let pivot_row = a[col].clone();
                    for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                        *x -= f * p;
                    }
                }
            }
        }
        Some((0..n).map(|r| a[r][n] / a[r][r]).collect())
    }

    #[test]
    fn flow_matches_vertex_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let mut s: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
            let mut d: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
            let (ts, td) = (s.iter().sum::<f64>(), d.iter().sum::<f64>());
            s.iter_mut().for_each(|x| *x /= ts);
            d.iter_mut().for_each(|x| *x /= td);
            let cost: Vec<Vec<f64>> =
                (0..3).map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
            let fast = transport_cost(&s, &d, |i, j| cost[i][j]);
            let slow = vertex_enumeration(&s, &d, &cost);
            assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
        }
    }

    #[test]
    fn flow_matches_1d_closed_form() {
        // On a line with unit spacing, W1 is the L1 distance between CDFs.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = 12;
            let mut s: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut d: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let (ts, td) = (s.iter().sum::<f64>(), d.iter().sum::<f64>());
            s.iter_mut().for_each(|x| *x /= ts);
            d.iter_mut().for_each(|x| *x /= td);
            let flow = transport_cost(&s, &d, |i, j| (i as f64 - j as f64).abs());
            let mut acc = 0.0;
            let mut cdf = 0.0;
            for i in 0..n - 1 {
                cdf += s[i] - d[i];
                acc += cdf.abs();
            }
            assert!((flow - acc).abs() < 1e-9);
        }
    }

    #[test]
    fn tree_measure_discretization() {
        let mut t = PartitionTree::new(4.0);
        let [a, _] = t.attach_children(PartitionTree::ROOT, 3.0, 1.0);
        t.attach_children(a, 3.0, 0.0);
        let m = CellMeasure::from_tree(&t, 2).unwrap();
        let i = |s: &str| s.parse::<SubdomainIndex>().unwrap();
        assert_eq!(m.cells, vec![(i("00"), 3.0), (i("10"), 0.5), (i("11"), 0.5)]);
        let coarse = CellMeasure::from_tree(&t, 1).unwrap();
        assert_eq!(coarse.cells, vec![(i("0"), 3.0), (i("1"), 1.0)]);
    }
}
