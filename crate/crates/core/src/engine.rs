//! One-pass construction: a complete noisy tree down to `L★`, one private
//! sketch per deeper level, and growth of the pruned tree once the stream
//! ends.

use serde::{Deserialize, Serialize};

use crate::domain::{Decomposition, HypercubeDomain, SubdomainIndex};
use crate::error::{Error, Result};
use crate::grow::{grow_partition, CountSource, GrowthStats};
use crate::noise::{allocate_budget, seeded_rng, BudgetPlan, NoiseMode};
use crate::sketch::PrivateSketch;
use crate::tree::PartitionTree;

const TREE_NOISE_STREAM: u64 = 0x5452_4545;
const SKETCH_STREAM: u64 = 0x534B_5443;

/// Parameters of one run. Field names double as the config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivHpConfig {
    pub d: usize,
    pub epsilon: f64,
    pub k: usize,
    #[serde(rename = "L_star")]
    pub l_star: usize,
    #[serde(rename = "L")]
    pub depth: usize,
    pub j: usize,
    pub w_cells: usize,
    pub seed: u64,
    pub n_hint: u64,
    #[serde(default)]
    pub noiseless: bool,
}

fn ceil_log2(x: f64) -> usize {
    x.log2().ceil().max(0.0) as usize
}

impl PrivHpConfig {
    /// Hypercube defaults for a stream of about `n_hint` items:
    /// `j = ⌈log₂ n⌉`, `L = ⌈log₂(εn)⌉`, `L★ = min(L, ⌈log₂(k·log₂²n)⌉)`,
    /// `w = 2k`.
    pub fn default_for(n_hint: u64, epsilon: f64, k: usize, d: usize) -> Result<Self> {
        if n_hint < 2 {
            return Err(Error::Config(format!("n_hint must be at least 2, got {n_hint}")));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let n = n_hint as f64;
        if epsilon * n < 2.0 {
            return Err(Error::Config(format!(
                "budget-size product too small for any hierarchy (epsilon * n_hint = {})",
                epsilon * n
            )));
        }
        let j = ceil_log2(n).max(1);
        let depth = ceil_log2(epsilon * n).max(1);
        let l_star = depth.min(ceil_log2(k as f64 * n.log2().powi(2)));
        Ok(Self { d, epsilon, k, l_star, depth, j, w_cells: 2 * k, seed: 0, n_hint, noiseless: false })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be positive".into()));
        }
        if self.k == 0 || self.j == 0 || self.w_cells == 0 {
            return Err(Error::Config("k, j and w_cells must be at least 1".into()));
        }
        if self.l_star > self.depth {
            return Err(Error::Config(format!(
                "L_star ({}) must not exceed L ({})",
                self.l_star, self.depth
            )));
        }
        if self.depth > crate::domain::MAX_LEVEL {
            return Err(Error::LevelTooDeep { level: self.depth, max: crate::domain::MAX_LEVEL });
        }
        if self.l_star > 26 {
            return Err(Error::Config(format!(
                "L_star = {} would allocate 2^{} tree counters",
                self.l_star,
                self.l_star + 1
            )));
        }
        Ok(())
    }

    /// Counters held during the pass: tree nodes plus sketch cells.
    pub fn memory_cells(&self) -> usize {
        (1usize << (self.l_star + 1)) - 1 + (self.depth - self.l_star) * self.j * self.w_cells
    }

    pub fn budget(&self) -> Result<BudgetPlan> {
        let geometry = HypercubeDomain::new(self.d)?.geometry(self.depth);
        let plan = allocate_budget(self.epsilon, self.l_star, self.depth, self.j, self.k, &geometry)?;
        Ok(if self.noiseless { plan.noiseless() } else { plan })
    }
}

/// Work done by `update`, for cost accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub tree_increments: u64,
    pub sketch_cell_updates: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Parsing,
    Finalized,
}

#[derive(Debug, Clone)]
pub struct PrivHpState {
    config: PrivHpConfig,
    domain: HypercubeDomain,
    plan: BudgetPlan,
    /// Complete tree to depth `L★` in heap order.
    tree_counts: Vec<f64>,
    /// `sketches[i]` serves level `L★ + 1 + i`.
    sketches: Vec<PrivateSketch>,
    items_seen: u64,
    rejected: u64,
    ops: OpCounters,
    phase: Phase,
}

struct SketchLevels<'a> {
    l_star: usize,
    sketches: &'a [PrivateSketch],
}

impl CountSource for SketchLevels<'_> {
    fn estimate(&self, level: usize, index: &SubdomainIndex) -> f64 {
        self.sketches[level - self.l_star - 1].query(index)
    }
}

impl PrivHpState {
    pub fn new(config: PrivHpConfig) -> Result<Self> {
        config.validate()?;
        let domain = HypercubeDomain::new(config.d)?;
        let plan = config.budget()?;
        let mut rng = seeded_rng(config.seed, TREE_NOISE_STREAM);
        let mut tree_counts = Vec::with_capacity((1usize << (config.l_star + 1)) - 1);
        for level in 0..=config.l_star {
            let noise = plan.per_level_noise(level)?;
            tree_counts.extend((0..1usize << level).map(|_| noise.draw(&mut rng)));
        }
        let sketches = (config.l_star + 1..=config.depth)
            .map(|level| {
                let noise = plan.per_level_noise(level)?;
                let seed = crate::noise::derive_seed(config.seed ^ SKETCH_STREAM, level as u64);
                PrivateSketch::new(config.j, config.w_cells, noise.scale, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            domain,
            plan,
            tree_counts,
            sketches,
            items_seen: 0,
            rejected: 0,
            ops: OpCounters::default(),
            phase: Phase::Parsing,
        })
    }

    pub fn config(&self) -> &PrivHpConfig {
        &self.config
    }

    pub fn plan(&self) -> &BudgetPlan {
        &self.plan
    }

    pub fn domain(&self) -> &HypercubeDomain {
        &self.domain
    }

    pub fn items_seen(&self) -> u64 {
        self.items_seen
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn ops(&self) -> OpCounters {
        self.ops
    }

    pub fn is_private(&self) -> bool {
        self.plan.mode == NoiseMode::Laplace
    }

    pub fn tree_counts(&self) -> &[f64] {
        &self.tree_counts
    }

    pub fn sketches(&self) -> &[PrivateSketch] {
        &self.sketches
    }

    /// Counters currently held (tree nodes plus sketch cells).
    pub fn memory_cells(&self) -> usize {
        self.tree_counts.len() + self.sketches.iter().map(PrivateSketch::cells).sum::<usize>()
    }

    /// Feeds one stream element. Out-of-domain points are counted as rejects
    /// and leave the summary untouched.
    pub fn update(&mut self, point: &[f64]) -> Result<()> {
        if self.phase != Phase::Parsing {
            return Err(Error::State("update after finalize".into()));
        }
        let leaf = match self.domain.locate(point, self.config.depth) {
            Ok(leaf) => leaf,
            Err(e) => {
                self.rejected += 1;
                return Err(e);
            }
        };
        for level in 0..=self.config.l_star {
            let slot = (1usize << level) - 1 + leaf.prefix(level).bits() as usize;
            self.tree_counts[slot] += 1.0;
        }
        for (i, sketch) in self.sketches.iter_mut().enumerate() {
            sketch.update(&leaf.prefix(self.config.l_star + 1 + i), 1.0);
        }
        self.ops.tree_increments += self.config.l_star as u64 + 1;
        self.ops.sketch_cell_updates += (self.sketches.len() * self.config.j) as u64;
        self.items_seen += 1;
        Ok(())
    }

    fn close(&mut self) -> Result<PartitionTree> {
        if self.phase != Phase::Parsing {
            return Err(Error::State("already finalized".into()));
        }
        self.phase = Phase::Finalized;
        Ok(PartitionTree::complete(self.config.l_star, &self.tree_counts))
    }

    /// Ends the pass and grows the private sampling tree from the sketches.
    pub fn finalize(&mut self) -> Result<PartitionTree> {
        Ok(self.finalize_with_stats()?.0)
    }

    pub fn finalize_with_stats(&mut self) -> Result<(PartitionTree, GrowthStats)> {
        let start = self.close()?;
        let source = SketchLevels { l_star: self.config.l_star, sketches: &self.sketches };
        Ok(grow_partition(start, self.config.l_star, self.config.depth, self.config.k, &source))
    }

    /// Ends the pass but grows from `source` instead of the sketches. With a
    /// noiseless config and exact counts this reproduces exact pruning.
    pub fn finalize_with_source(&mut self, source: &dyn CountSource) -> Result<PartitionTree> {
        let start = self.close()?;
        Ok(grow_partition(start, self.config.l_star, self.config.depth, self.config.k, source).0)
    }
}
