//! Hierarchical decompositions of the input domain.
//!
//! A decomposition assigns every point of the domain to exactly one subdomain
//! per level. Subdomains are named by bit strings: the root is the empty
//! string and the children of `θ` are `θ·0` and `θ·1`. The only decomposition
//! shipped is the cyclic bisection of the unit hypercube under the l∞ metric.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Deepest level representable by a [`SubdomainIndex`].
pub const MAX_LEVEL: usize = 62;

/// A node name `θ ∈ {0,1}^l`, stored MSB-first in the low `level` bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SubdomainIndex {
    bits: u64,
    level: u8,
}

impl SubdomainIndex {
    pub const ROOT: SubdomainIndex = SubdomainIndex { bits: 0, level: 0 };

    /// Builds an index from the integer whose binary expansion (width `level`)
    /// spells the path from the root.
    pub fn new(bits: u64, level: usize) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::LevelTooDeep { level, max: MAX_LEVEL });
        }
        if level < 64 && bits >> level != 0 {
            return Err(Error::Input(format!(
                "bit pattern {bits:#x} does not fit in {level} bits"
            )));
        }
        Ok(Self { bits, level: level as u8 })
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn level(&self) -> usize {
        self.level as usize
    }

    pub fn child(&self, bit: u8) -> SubdomainIndex {
        debug_assert!(self.level() < MAX_LEVEL);
        SubdomainIndex { bits: (self.bits << 1) | u64::from(bit & 1), level: self.level + 1 }
    }

    pub fn children(&self) -> [SubdomainIndex; 2] {
        [self.child(0), self.child(1)]
    }

    pub fn parent(&self) -> Option<SubdomainIndex> {
        (self.level > 0).then(|| SubdomainIndex { bits: self.bits >> 1, level: self.level - 1 })
    }

    /// The ancestor (or self) at `level`.
    pub fn prefix(&self, level: usize) -> SubdomainIndex {
        assert!(level <= self.level(), "prefix level {level} deeper than index level {}", self.level);
        SubdomainIndex { bits: self.bits >> (self.level() - level), level: level as u8 }
    }

    /// Bit `i` of the path, counting from the root (`i = 0` is the first cut).
    pub fn bit(&self, i: usize) -> u8 {
        assert!(i < self.level());
        ((self.bits >> (self.level() - 1 - i)) & 1) as u8
    }

    pub fn is_prefix_of(&self, other: &SubdomainIndex) -> bool {
        self.level <= other.level && other.prefix(self.level()) == *self
    }

    /// Injective 64-bit code over all levels; used as the hash key.
    pub fn code(&self) -> u64 {
        (1u64 << self.level) | self.bits
    }
}

impl Ord for SubdomainIndex {
    /// Lexicographic order on the bit strings (a proper prefix sorts first).
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.level.min(other.level) as usize;
        self.prefix(common)
            .bits
            .cmp(&other.prefix(common).bits)
            .then(self.level.cmp(&other.level))
    }
}

impl PartialOrd for SubdomainIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SubdomainIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.level() {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for SubdomainIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "θ\"{self}\"")
    }
}

impl FromStr for SubdomainIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > MAX_LEVEL {
            return Err(Error::LevelTooDeep { level: s.len(), max: MAX_LEVEL });
        }
        let mut bits = 0u64;
        for c in s.chars() {
            let b = match c {
                '0' => 0,
                '1' => 1,
                _ => return Err(Error::Input(format!("invalid character {c:?} in index {s:?}"))),
            };
            bits = (bits << 1) | b;
        }
        Ok(SubdomainIndex { bits, level: s.len() as u8 })
    }
}

/// An axis-aligned box. The upper face of coordinate `i` is closed only when
/// `upper_closed[i]` (the cell touches the global boundary 1.0).
#[derive(Debug, Clone, PartialEq)]
pub struct CellBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub upper_closed: Vec<bool>,
}

impl CellBounds {
    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.lower.len()
            && point.iter().enumerate().all(|(i, &x)| {
                x >= self.lower[i]
                    && (x < self.upper[i] || (self.upper_closed[i] && x <= self.upper[i]))
            })
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a)
    }
}

/// Per-level diameter tables `γ_l` (maximum) and `Γ_l` (sum over the level).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelGeometry {
    pub gamma: Vec<f64>,
    pub gamma_sum: Vec<f64>,
}

impl LevelGeometry {
    pub fn depth(&self) -> usize {
        self.gamma.len() - 1
    }

    /// `γ_{l-1}`, with `γ_{-1} = γ_0`.
    pub fn gamma_before(&self, level: usize) -> f64 {
        self.gamma[level.saturating_sub(1)]
    }

    /// `Γ_{l-1}`, with `Γ_{-1} = Γ_0`.
    pub fn gamma_sum_before(&self, level: usize) -> f64 {
        self.gamma_sum[level.saturating_sub(1)]
    }
}

/// A domain equipped with a fixed hierarchical binary decomposition.
pub trait Decomposition: Send + Sync {
    fn dimension(&self) -> usize;

    /// The level-`level` subdomain containing `point`.
    fn locate(&self, point: &[f64], level: usize) -> Result<SubdomainIndex>;

    fn bounds(&self, index: &SubdomainIndex) -> CellBounds;

    fn diameter(&self, index: &SubdomainIndex) -> f64;

    fn geometry(&self, depth: usize) -> LevelGeometry;
}

/// `[0,1]^d` with the l∞ metric, bisected cyclically: the cut taking level
/// `l` to `l+1` halves coordinate `l mod d`, bit 0 being the lower half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HypercubeDomain {
    dim: usize,
}

impl HypercubeDomain {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        Ok(Self { dim })
    }

    pub fn validate(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: point.len() });
        }
        match point.iter().position(|x| !(0.0..=1.0).contains(x)) {
            Some(coordinate) => Err(Error::OutOfDomain { coordinate, value: point[coordinate] }),
            None => Ok(()),
        }
    }

    /// Number of cuts applied to `coordinate` after `level` bisections.
    fn cuts(&self, coordinate: usize, level: usize) -> usize {
        level / self.dim + usize::from(coordinate < level % self.dim)
    }
}

impl Decomposition for HypercubeDomain {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn locate(&self, point: &[f64], level: usize) -> Result<SubdomainIndex> {
        self.validate(point)?;
        if level > MAX_LEVEL {
            return Err(Error::LevelTooDeep { level, max: MAX_LEVEL });
        }
        // Dyadic cell of each coordinate at its own resolution; x = 1.0 is
        // clamped into the top cell.
        let cells: Vec<u64> = (0..self.dim)
            .map(|c| {
                let m = self.cuts(c, level) as i32;
                let top = (1u64 << m) - 1;
                ((point[c] * 2f64.powi(m)).floor() as u64).min(top)
            })
            .collect();
        let mut used = vec![0usize; self.dim];
        let mut bits = 0u64;
        for l in 0..level {
            let c = l % self.dim;
            let m = self.cuts(c, level);
            used[c] += 1;
            let bit = (cells[c] >> (m - used[c])) & 1;
            bits = (bits << 1) | bit;
        }
        SubdomainIndex::new(bits, level)
    }

    fn bounds(&self, index: &SubdomainIndex) -> CellBounds {
        let mut q = vec![0u64; self.dim];
        for i in 0..index.level() {
            let c = i % self.dim;
            q[c] = (q[c] << 1) | u64::from(index.bit(i));
        }
        let mut lower = Vec::with_capacity(self.dim);
        let mut upper = Vec::with_capacity(self.dim);
        let mut upper_closed = Vec::with_capacity(self.dim);
        for (c, &qc) in q.iter().enumerate() {
            let m = self.cuts(c, index.level()) as i32;
            let width = 2f64.powi(-m);
            lower.push(qc as f64 * width);
            upper.push((qc + 1) as f64 * width);
            upper_closed.push(qc + 1 == 1u64 << m);
        }
        CellBounds { lower, upper, upper_closed }
    }

    fn diameter(&self, index: &SubdomainIndex) -> f64 {
        2f64.powi(-((index.level() / self.dim) as i32))
    }

    fn geometry(&self, depth: usize) -> LevelGeometry {
        let gamma: Vec<f64> =
            (0..=depth).map(|l| 2f64.powi(-((l / self.dim) as i32))).collect();
        let gamma_sum = gamma.iter().enumerate().map(|(l, g)| 2f64.powi(l as i32) * g).collect();
        LevelGeometry { gamma, gamma_sum }
    }
}
