use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use privhp::PrivHpConfig;

pub const SEED_ENV: &str = "PRIVHP_SEED";

/// A config file: the `PrivHpConfig` keys, with everything except `d`,
/// `epsilon`, `k` and `n_hint` optional and filled from the defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub d: usize,
    pub epsilon: f64,
    pub k: usize,
    pub n_hint: u64,
    #[serde(rename = "L")]
    pub depth: Option<usize>,
    #[serde(rename = "L_star")]
    pub l_star: Option<usize>,
    pub j: Option<usize>,
    pub w_cells: Option<usize>,
    pub seed: Option<u64>,
    pub noiseless: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn resolve(&self, seed_flag: Option<u64>, noiseless_flag: bool) -> Result<PrivHpConfig> {
        let mut c = PrivHpConfig::default_for(self.n_hint, self.epsilon, self.k, self.d)?;
        if let Some(depth) = self.depth {
            c.depth = depth;
            if self.l_star.is_none() {
                c.l_star = c.l_star.min(depth);
            }
        }
        if let Some(l_star) = self.l_star {
            c.l_star = l_star;
        }
        c.j = self.j.unwrap_or(c.j);
        c.w_cells = self.w_cells.unwrap_or(c.w_cells);
        c.noiseless = noiseless_flag || self.noiseless.unwrap_or(false);
        c.seed = resolve_seed(seed_flag.or(self.seed))?;
        c.validate()?;
        Ok(c)
    }
}

/// `explicit`, else `PRIVHP_SEED`, else fresh entropy (reported on stderr so
/// the run can be repeated).
pub fn resolve_seed(explicit: Option<u64>) -> Result<u64> {
    if let Some(seed) = explicit {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not a u64")),
        Err(std::env::VarError::NotPresent) => {
            let seed = rand::random();
            eprintln!("no seed given; using seed {seed}");
            Ok(seed)
        }
        Err(e) => bail!("{SEED_ENV}: {e}"),
    }
}

pub fn warn_non_private() {
    eprintln!("************************************************************");
    eprintln!("* WARNING: --noiseless run. Output is NON-PRIVATE and must *");
    eprintln!("* not be released. Use only for testing and calibration.   *");
    eprintln!("************************************************************");
}
