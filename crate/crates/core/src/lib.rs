//! Differentially private synthetic data from a single pass over a stream.
//!
//! The engine keeps a complete noisy partition tree down to level `L★` and
//! one private Count-Min sketch per deeper level. When the stream ends the
//! tree is grown level by level from the sketches, keeping only the `k`
//! heaviest branches per level, and made consistent. The resulting tree is a
//! sampling distribution over the domain.
//!
//! ```
//! use privhp::{PrivHpConfig, PrivHpState, sampler, domain::HypercubeDomain};
//! use privhp::noise::seeded_rng;
//!
//! let config = PrivHpConfig::default_for(10_000, 1.0, 4, 1).unwrap().with_seed(7);
//! let mut state = PrivHpState::new(config).unwrap();
//! for i in 0..10_000 {
//!     state.update(&[(i as f64 * 0.618).fract()]).unwrap();
//! }
//! let tree = state.finalize().unwrap();
//! let domain = HypercubeDomain::new(1).unwrap();
//! let synthetic = sampler::sample_many(&tree, &domain, 100, &mut seeded_rng(7, 1)).unwrap();
//! assert_eq!(synthetic.len(), 100);
//! ```

pub mod domain;
pub mod engine;
pub mod error;
pub mod eval;
pub mod grow;
pub mod io;
pub mod noise;
pub mod sampler;
pub mod sketch;
pub mod trials;
pub mod tree;

pub use domain::{Decomposition, HypercubeDomain, SubdomainIndex};
pub use engine::{PrivHpConfig, PrivHpState};
pub use error::{Error, Result};
pub use tree::PartitionTree;
