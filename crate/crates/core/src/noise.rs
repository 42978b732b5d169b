//! Laplace noise and the per-level split of the privacy budget.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::domain::LevelGeometry;
use crate::error::{Error, Result};

/// SplitMix64 finalizer. Used for seed derivation and for sketch hashing.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed for the sub-stream named `tag`.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    mix64(mix64(master) ^ mix64(tag.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn seeded_rng(master: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag))
}

/// Scale `b` of a zero-mean Laplace distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(b: f64) -> Result<Self> {
        if b.is_finite() && b > 0.0 {
            Ok(Self(b))
        } else {
            Err(Error::Config(format!("Laplace scale must be finite and positive, got {b}")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Inverse CDF at `u ∈ (-1/2, 1/2)`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        -self.0 * u.signum() * (1.0 - 2.0 * u.abs()).ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.5 * (x / self.0).exp()
        } else {
            1.0 - 0.5 * (-x / self.0).exp()
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random::<f64>() - 0.5;
            // u = -1/2 maps to an infinite draw
            if u > -0.5 {
                return self.inverse_cdf(u);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    Laplace,
    /// Zero noise. Not private; used for oracle comparisons only.
    Noiseless,
}

/// Privacy shares `σ_0..σ_L` with `Σσ_l = ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetPlan {
    pub epsilon: f64,
    pub sigmas: Vec<f64>,
    pub l_star: usize,
    pub depth: usize,
    pub j: usize,
    pub k: usize,
    pub mode: NoiseMode,
}

/// Where a level's noise is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseTarget {
    /// One draw per tree counter at this level.
    TreeCounter,
    /// One draw per cell of the level's sketch.
    SketchCells,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelNoise {
    pub target: NoiseTarget,
    /// `None` in noiseless mode.
    pub scale: Option<LaplaceScale>,
}

impl LevelNoise {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale.map_or(0.0, |s| s.sample(rng))
    }
}

/// Splits `epsilon` across levels so that the noise term of the utility bound
/// is minimized: `σ_l ∝ √Γ_{l-1}` on tree levels and `σ_l ∝ √(j·k·γ_{l-1})`
/// on sketch levels.
pub fn allocate_budget(
    epsilon: f64,
    l_star: usize,
    depth: usize,
    j: usize,
    k: usize,
    geometry: &LevelGeometry,
) -> Result<BudgetPlan> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if l_star > depth {
        return Err(Error::Config(format!("L_star ({l_star}) must not exceed L ({depth})")));
    }
    if j == 0 || k == 0 {
        return Err(Error::Config("j and k must be at least 1".into()));
    }
    if geometry.depth() < depth {
        return Err(Error::Config(format!(
            "geometry covers {} levels, need {depth}",
            geometry.depth()
        )));
    }
    let jk = (j * k) as f64;
    let weights: Vec<f64> = (0..=depth)
        .map(|l| {
            if l <= l_star {
                geometry.gamma_sum_before(l).sqrt()
            } else {
                (jk * geometry.gamma_before(l)).sqrt()
            }
        })
        .collect();
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Config("degenerate geometry: zero or invalid diameters".into()));
    }
    let total: f64 = weights.iter().sum();
    let sigmas = weights.iter().map(|w| epsilon * w / total).collect();
    Ok(BudgetPlan { epsilon, sigmas, l_star, depth, j, k, mode: NoiseMode::Laplace })
}

impl BudgetPlan {
    pub fn noiseless(mut self) -> Self {
        self.mode = NoiseMode::Noiseless;
        self
    }

    pub fn is_private(&self) -> bool {
        self.mode == NoiseMode::Laplace
    }

    /// Noise for level `level`: `Laplace(1/σ_l)` on tree counters up to
    /// `L★`, `Laplace(j/σ_l)` per sketch cell below.
    pub fn per_level_noise(&self, level: usize) -> Result<LevelNoise> {
        if level > self.depth {
            return Err(Error::LevelTooDeep { level, max: self.depth });
        }
        let sigma = self.sigmas[level];
        let (target, scale) = if level <= self.l_star {
            (NoiseTarget::TreeCounter, 1.0 / sigma)
        } else {
            (NoiseTarget::SketchCells, self.j as f64 / sigma)
        };
        let scale = match self.mode {
            NoiseMode::Laplace => Some(LaplaceScale::new(scale)?),
            NoiseMode::Noiseless => None,
        };
        Ok(LevelNoise { target, scale })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Decomposition, HypercubeDomain};
    use proptest::prelude::*;

    #[test]
    fn inverse_cdf_median_is_zero() {
        assert_eq!(LaplaceScale::new(3.0).unwrap().inverse_cdf(0.0), 0.0);
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(LaplaceScale::new(0.0).is_err());
        assert!(LaplaceScale::new(f64::INFINITY).is_err());
    }

    #[test]
    fn laplace_moments() {
        let mut rng = seeded_rng(11, 0);
        let one = LaplaceScale::new(1.0).unwrap();
        let n = 1_000_000;
        let mean_abs = (0..n).map(|_| one.sample(&mut rng).abs()).sum::<f64>() / n as f64;
        assert!((mean_abs - 1.0).abs() < 0.01, "{mean_abs}");

        let two = LaplaceScale::new(2.0).unwrap();
        let draws: Vec<f64> = (0..n).map(|_| two.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.01);
        assert!((var - 8.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn laplace_ks_statistic() {
        let b = LaplaceScale::new(1.5).unwrap();
        let mut rng = seeded_rng(5, 1);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| b.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = b.cdf(x);
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS test.
        assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn uniform_allocation_without_sketch_levels() {
        let geo = HypercubeDomain::new(1).unwrap().geometry(5);
        let plan = allocate_budget(2.0, 5, 5, 3, 2, &geo).unwrap();
        for s in &plan.sigmas {
            assert!((s - 2.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn worked_allocation() {
        // S = 1 + 1 + sqrt(0.5); sigmas = (1/S, 1/S, sqrt(0.5)/S)
        let geo = HypercubeDomain::new(1).unwrap().geometry(2);
        let plan = allocate_budget(1.0, 1, 2, 1, 1, &geo).unwrap();
        let s = 2.0 + 0.5f64.sqrt();
        let expected = [1.0 / s, 1.0 / s, 0.5f64.sqrt() / s];
        for (a, b) in plan.sigmas.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((plan.sigmas[0] - 0.3694).abs() < 1e-4);
        assert!((plan.sigmas[2] - 0.2612).abs() < 1e-4);
    }

    #[test]
    fn allocation_errors() {
        let geo = HypercubeDomain::new(1).unwrap().geometry(4);
        assert!(allocate_budget(0.0, 1, 4, 1, 1, &geo).is_err());
        assert!(allocate_budget(1.0, 5, 4, 1, 1, &geo).is_err());
        assert!(allocate_budget(1.0, 1, 4, 0, 1, &geo).is_err());
        let zero = LevelGeometry { gamma: vec![0.0; 5], gamma_sum: vec![0.0; 5] };
        assert!(matches!(allocate_budget(1.0, 1, 4, 1, 1, &zero), Err(Error::Config(_))));
    }

    #[test]
    fn per_level_noise_scales() {
        let plan = BudgetPlan {
            epsilon: 1.0,
            sigmas: vec![0.5, 0.25, 0.25],
            l_star: 0,
            depth: 2,
            j: 4,
            k: 1,
            mode: NoiseMode::Laplace,
        };
        let root = plan.per_level_noise(0).unwrap();
        assert_eq!(root.target, NoiseTarget::TreeCounter);
        assert_eq!(root.scale.unwrap().value(), 2.0);
        let cells = plan.per_level_noise(1).unwrap();
        assert_eq!(cells.target, NoiseTarget::SketchCells);
        assert_eq!(cells.scale.unwrap().value(), 16.0);
        assert!(plan.per_level_noise(3).is_err());

        let mut half = plan.clone();
        half.sigmas = vec![0.5; 3];
        assert_eq!(half.per_level_noise(1).unwrap().scale.unwrap().value(), 8.0);

        let single = BudgetPlan { sigmas: vec![0.8], l_star: 0, depth: 0, ..plan.clone() };
        assert_eq!(single.per_level_noise(0).unwrap().scale.unwrap().value(), 1.25);

        let quiet = plan.noiseless();
        assert!(!quiet.is_private());
        assert_eq!(quiet.per_level_noise(1).unwrap().scale, None);
    }

    proptest! {
        #[test]
        fn allocation_sums_to_epsilon(
            epsilon in 0.01f64..10.0,
            depth in 1usize..30,
            l_star_frac in 0.0f64..1.0,
            j in 1usize..25,
            k in 1usize..64,
            d in 1usize..5,
        ) {
            let l_star = ((depth as f64) * l_star_frac) as usize;
            let geo = HypercubeDomain::new(d).unwrap().geometry(depth);
            let plan = allocate_budget(epsilon, l_star, depth, j, k, &geo).unwrap();
            let total: f64 = plan.sigmas.iter().sum();
            prop_assert!((total - epsilon).abs() <= 1e-9 * epsilon);
            prop_assert!(plan.sigmas.iter().all(|s| *s > 0.0));
            // direct evaluation of the closed form
            let w = |l: usize| if l <= l_star {
                geo.gamma_sum[l.saturating_sub(1)].sqrt()
            } else {
                ((j * k) as f64 * geo.gamma[l - 1]).sqrt()
            };
            let s: f64 = (0..=depth).map(w).sum();
            for l in 0..=depth {
                prop_assert!((plan.sigmas[l] - epsilon * w(l) / s).abs() <= 1e-12 * epsilon);
            }
            if d >= 2 {
                for l in 1..=l_star {
                    prop_assert!(plan.sigmas[l] >= plan.sigmas[l - 1]);
                }
            }
        }
    }
}
