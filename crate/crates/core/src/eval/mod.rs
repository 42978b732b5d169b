//! Utility measurement, exact-count baselines and experiment plumbing.
//!
//! Everything here reads raw points and is evaluation instrumentation only.

pub mod oracle;
pub mod w1;
pub mod workload;

use serde::{Deserialize, Serialize};

use crate::domain::{Decomposition, HypercubeDomain};
use crate::engine::{PrivHpConfig, PrivHpState};
use crate::error::{Error, Result};
use crate::tree::PartitionTree;

pub use oracle::{exact_prune_tree, full_tree, tail_stats, ExactHistogram, TailStats};
pub use w1::{w1_exact_1d, w1_leaf_flow, w1_points_vs_tree_1d, CellMeasure, W1Method};

/// One evaluation (or an aggregate of `trials` evaluations).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub w1: f64,
    pub w1_method: W1Method,
    pub tail_norm: Option<f64>,
    pub memory_cells: Option<usize>,
    pub epsilon: Option<f64>,
    pub k: Option<usize>,
    #[serde(rename = "L")]
    pub depth: Option<usize>,
    #[serde(rename = "L_star")]
    pub l_star: Option<usize>,
    pub j: Option<usize>,
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub seed: Option<u64>,
    /// Present only for leaf-flow: the cell diameter bounding the
    /// discretization error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretization_slack: Option<f64>,
    /// Present and true when the evaluated tree was built without noise.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub non_private: bool,
}

impl UtilityReport {
    pub fn single(w1: f64, method: W1Method) -> Self {
        Self {
            w1,
            w1_method: method,
            tail_norm: None,
            memory_cells: None,
            epsilon: None,
            k: None,
            depth: None,
            l_star: None,
            j: None,
            trials: 1,
            mean: w1,
            stderr: 0.0,
            seed: None,
            discretization_slack: None,
            non_private: false,
        }
    }

    pub fn with_config(mut self, config: &PrivHpConfig) -> Self {
        self.memory_cells = Some(config.memory_cells());
        self.epsilon = Some(config.epsilon);
        self.k = Some(config.k);
        self.depth = Some(config.depth);
        self.l_star = Some(config.l_star);
        self.j = Some(config.j);
        self.seed = Some(config.seed);
        self.non_private = config.noiseless;
        self
    }
}

/// W1 between the empirical measure of `points` and a tree's sampling
/// measure. Exact in 1-D; otherwise discretized at level `level`.
pub fn w1_to_tree(
    points: &[Vec<f64>],
    tree: &PartitionTree,
    domain: &HypercubeDomain,
    level: usize,
) -> Result<(f64, W1Method, Option<f64>)> {
    if domain.dimension() == 1 {
        let mut xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        Ok((w1_points_vs_tree_1d(&xs, tree, domain)?, W1Method::Exact1d, None))
    } else {
        let mu = CellMeasure::from_points(points, domain, level)?;
        let nu = CellMeasure::from_tree(tree, level)?;
        let slack = domain.geometry(level).gamma[level];
        Ok((w1_leaf_flow(&mu, &nu, domain)?, W1Method::LeafFlow, Some(slack)))
    }
}

/// W1 between two point sets. Exact in 1-D; otherwise discretized.
pub fn w1_between_points(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    domain: &HypercubeDomain,
    level: usize,
) -> Result<(f64, W1Method, Option<f64>)> {
    if domain.dimension() == 1 {
        let sorted = |v: &[Vec<f64>]| {
            let mut xs: Vec<f64> = v.iter().map(|p| p[0]).collect();
            xs.sort_by(f64::total_cmp);
            xs
        };
        Ok((w1_exact_1d(&sorted(a), &sorted(b))?, W1Method::Exact1d, None))
    } else {
        let mu = CellMeasure::from_points(a, domain, level)?;
        let nu = CellMeasure::from_points(b, domain, level)?;
        let slack = domain.geometry(level).gamma[level];
        Ok((w1_leaf_flow(&mu, &nu, domain)?, W1Method::LeafFlow, Some(slack)))
    }
}

/// Result of feeding a whole point set through the engine.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub tree: PartitionTree,
    pub memory_cells: usize,
    pub items_seen: u64,
    pub rejected: u64,
}

pub fn run_privhp(config: &PrivHpConfig, points: &[Vec<f64>]) -> Result<RunOutcome> {
    let mut state = PrivHpState::new(config.clone())?;
    for p in points {
        // rejects are counted by the state
        let _ = state.update(p);
    }
    let memory_cells = state.memory_cells();
    let tree = state.finalize()?;
    Ok(RunOutcome { tree, memory_cells, items_seen: state.items_seen(), rejected: state.rejected() })
}

/// Measured W1 between the data and its exactly pruned tree, next to the
/// constant-free pruning bound `‖tail_k^L‖₁/n · Σ_{l=L★+1}^{L−1} γ_l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruningBoundCheck {
    pub measured: f64,
    pub bound: f64,
    /// Leaf resolution `γ_L` (plus the discretization diameter when the
    /// measurement is not exact).
    pub slack: f64,
}

impl PruningBoundCheck {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound + self.slack + 1e-12
    }
}

pub fn pruning_bound_check(
    points: &[Vec<f64>],
    domain: &HypercubeDomain,
    k: usize,
    l_star: usize,
    depth: usize,
) -> Result<PruningBoundCheck> {
    if points.is_empty() {
        return Err(Error::Input("empty stream".into()));
    }
    let hist = ExactHistogram::build(points, domain, depth)?;
    let tree = exact_prune_tree(&hist, k, l_star, depth)?;
    let geometry = domain.geometry(depth);
    let tail = tail_stats(&hist, depth, k)?.tail_norm;
    let gamma_sum: f64 = (l_star + 1..depth).map(|l| geometry.gamma[l]).sum();
    let bound = tail / points.len() as f64 * gamma_sum;
    let (measured, _, discretization) = w1_to_tree(points, &tree, domain, depth)?;
    Ok(PruningBoundCheck {
        measured,
        bound,
        slack: geometry.gamma[depth] + discretization.unwrap_or(0.0),
    })
}
