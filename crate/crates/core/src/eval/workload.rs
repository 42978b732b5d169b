//! Synthetic input streams for experiments.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Zipf};

use crate::domain::{Decomposition, HypercubeDomain, SubdomainIndex};
use crate::error::{Error, Result};
use crate::noise::seeded_rng;

/// Zipf-skewed stream: `n` draws of a rank over `2^universe_bits` keys with
/// exponent `exponent`. Ranks are scattered over the level-`universe_bits`
/// cells by a seeded permutation and each point is uniform inside its cell.
pub fn zipf_points(
    n: usize,
    exponent: f64,
    universe_bits: usize,
    d: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let domain = HypercubeDomain::new(d)?;
    if universe_bits > 24 {
        return Err(Error::Config(format!("universe of 2^{universe_bits} keys is too large")));
    }
    let keys = 1u64 << universe_bits;
    let zipf = Zipf::new(keys as f64, exponent)
        .map_err(|e| Error::Config(format!("zipf({exponent}): {e}")))?;
    let mut rng = seeded_rng(seed, 0x5A49_5046);
    let mut cells: Vec<u64> = (0..keys).collect();
    cells.shuffle(&mut rng);
    (0..n)
        .map(|_| {
            let rank = zipf.sample(&mut rng) as u64 - 1;
            let cell = domain.bounds(&SubdomainIndex::new(cells[rank as usize], universe_bits)?);
            Ok(cell
                .lower
                .iter()
                .zip(&cell.upper)
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect())
        })
        .collect()
}

/// Zipf ranks over `keys` items, for sketch experiments on raw keys.
pub fn zipf_keys(n: usize, exponent: f64, keys: u64, seed: u64) -> Result<Vec<u64>> {
    let zipf = Zipf::new(keys as f64, exponent)
        .map_err(|e| Error::Config(format!("zipf({exponent}): {e}")))?;
    let mut rng = seeded_rng(seed, 0x4B45_5953);
    Ok((0..n).map(|_| zipf.sample(&mut rng) as u64 - 1).collect())
}

pub fn uniform_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded_rng(seed, 0x554E_4946);
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Points concentrated on `clusters` random locations.
pub fn sparse_points(n: usize, d: usize, clusters: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded_rng(seed, 0x5350_4152);
    let centers: Vec<Vec<f64>> =
        (0..clusters.max(1)).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    (0..n).map(|_| centers[rng.random_range(0..centers.len())].clone()).collect()
}
