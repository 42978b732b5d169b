//! Private Count-Min sketch over subdomain indices.
//!
//! The counter matrix is filled with i.i.d. Laplace draws before any update.
//! Updates are linear, so releasing the matrix is the Laplace mechanism
//! applied to a function of sensitivity `depth` (one cell per row moves by 1
//! when an element is added).

use crate::domain::SubdomainIndex;
use crate::error::{Error, Result};
use crate::noise::{derive_seed, mix64, seeded_rng, LaplaceScale};

const HASH_STREAM: u64 = 0x4841_5348;
const NOISE_STREAM: u64 = 0x4E4F_4953;

#[derive(Debug, Clone, PartialEq)]
pub struct PrivateSketch {
    depth: usize,
    width: usize,
    counters: Vec<f64>,
    row_seeds: Vec<u64>,
    noise_scale: Option<LaplaceScale>,
}

impl PrivateSketch {
    /// A `depth × width` sketch seeded from `seed`. Hash seeds do not depend
    /// on the noise scale, so a noiseless sketch hashes exactly like its noisy
    /// twin.
    pub fn new(depth: usize, width: usize, noise_scale: Option<LaplaceScale>, seed: u64) -> Result<Self> {
        if depth == 0 || width == 0 {
            return Err(Error::Config(format!(
                "sketch dimensions must be positive, got {depth}×{width}"
            )));
        }
        let row_seeds = (0..depth as u64)
            .map(|row| derive_seed(derive_seed(seed, HASH_STREAM), row))
            .collect();
        let mut counters = vec![0.0; depth * width];
        if let Some(scale) = noise_scale {
            let mut rng = seeded_rng(seed, NOISE_STREAM);
            counters.iter_mut().for_each(|c| *c = scale.sample(&mut rng));
        }
        Ok(Self { depth, width, counters, row_seeds, noise_scale })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> usize {
        self.counters.len()
    }

    pub fn noise_scale(&self) -> Option<LaplaceScale> {
        self.noise_scale
    }

    pub fn counters(&self) -> &[f64] {
        &self.counters
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.counters[row * self.width..(row + 1) * self.width]
    }

    #[inline]
    pub fn bucket(&self, row: usize, key: &SubdomainIndex) -> usize {
        (mix64(key.code() ^ self.row_seeds[row]) % self.width as u64) as usize
    }

    pub fn update(&mut self, key: &SubdomainIndex, delta: f64) {
        for row in 0..self.depth {
            let b = self.bucket(row, key);
            self.counters[row * self.width + b] += delta;
        }
    }

    /// Count-Min estimate: the smallest of the key's buckets.
    pub fn query(&self, key: &SubdomainIndex) -> f64 {
        (0..self.depth)
            .map(|row| self.counters[row * self.width + self.bucket(row, key)])
            .fold(f64::INFINITY, f64::min)
    }
}
