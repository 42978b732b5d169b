//! Grid sweeps over `{n, d, k, epsilon}` on Zipf streams.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use privhp::domain::HypercubeDomain;
use privhp::eval::{run_privhp, tail_stats, w1_to_tree, workload, ExactHistogram, UtilityReport};
use privhp::noise::{derive_seed, mix64};
use privhp::trials::{mean_stderr, run_trials};
use privhp::PrivHpConfig;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub n: Vec<u64>,
    pub d: Vec<usize>,
    pub k: Vec<usize>,
    pub epsilon: Vec<f64>,
    #[serde(default = "default_exponent")]
    pub exponent: f64,
    #[serde(default = "default_universe_bits")]
    pub universe_bits: usize,
    /// Leaf-flow level cap for `d ≥ 2`.
    #[serde(default = "default_eval_level")]
    pub eval_level: usize,
}

fn default_exponent() -> f64 {
    1.5
}

fn default_universe_bits() -> usize {
    12
}

fn default_eval_level() -> usize {
    8
}

impl Grid {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading grid {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing grid {}", path.display()))
    }

    /// `(n, d, k, epsilon)` in sweep order.
    pub fn cells(&self) -> Vec<(u64, usize, usize, f64)> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &d in &self.d {
                for &k in &self.k {
                    for &epsilon in &self.epsilon {
                        out.push((n, d, k, epsilon));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchSummary {
    pub cells: usize,
    pub reports: usize,
    pub failures: Vec<String>,
}

fn run_cell(
    grid: &Grid,
    (n, d, k, epsilon): (u64, usize, usize, f64),
    trials: usize,
    master: u64,
    noiseless: bool,
) -> Result<Vec<UtilityReport>> {
    let mut config = PrivHpConfig::default_for(n, epsilon, k, d)?;
    config.noiseless = noiseless;
    let domain = HypercubeDomain::new(d)?;
    // every (n, d) pair shares one stream across k and epsilon
    let stream_seed = derive_seed(master, mix64(n) ^ d as u64);
    let bits = grid.universe_bits.min(config.depth.max(1));
    let points = workload::zipf_points(n as usize, grid.exponent, bits, d, stream_seed)?;
    let level = if d == 1 { config.depth } else { config.depth.min(grid.eval_level) };
    let hist = ExactHistogram::build(&points, &domain, config.depth)?;
    let tail = tail_stats(&hist, config.depth, k)?.tail_norm;

    let cell_tag = mix64(n) ^ mix64(d as u64 + 1) ^ mix64(k as u64 + 2) ^ mix64(epsilon.to_bits());
    let results = run_trials(trials, |t| -> privhp::Result<UtilityReport> {
        let cfg = config.clone().with_seed(derive_seed(master ^ cell_tag, t as u64));
        let out = run_privhp(&cfg, &points)?;
        let (w1, method, slack) = w1_to_tree(&points, &out.tree, &domain, level)?;
        let mut r = UtilityReport::single(w1, method).with_config(&cfg);
        r.tail_norm = Some(tail);
        r.discretization_slack = slack;
        Ok(r)
    });
    Ok(results.into_iter().collect::<privhp::Result<Vec<_>>>()?)
}

pub fn bench(grid_path: &Path, trials: usize, master: u64, out_dir: &Path, noiseless: bool) -> Result<BenchSummary> {
    let grid = Grid::load(grid_path)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut summary = BenchSummary::default();
    let mut lines = String::new();
    let mut table = String::from("n,d,k,epsilon,L,L_star,j,memory_cells,tail_norm,trials,mean_w1,stderr_w1,w1_method\n");
    let mut aggregates = Vec::new();
    for cell in grid.cells() {
        summary.cells += 1;
        let (n, d, k, epsilon) = cell;
        match run_cell(&grid, cell, trials, master, noiseless) {
            Ok(reports) => {
                for r in &reports {
                    lines.push_str(&serde_json::to_string(r)?);
                    lines.push('\n');
                }
                summary.reports += reports.len();
                let w: Vec<f64> = reports.iter().map(|r| r.w1).collect();
                let (mean, stderr) = mean_stderr(&w);
                let mut agg = reports[0].clone();
                agg.trials = reports.len();
                agg.mean = mean;
                agg.stderr = stderr;
                agg.w1 = mean;
                agg.seed = Some(master);
                writeln!(
                    table,
                    "{n},{d},{k},{epsilon},{},{},{},{},{},{},{mean:e},{stderr:e},{}",
                    agg.depth.unwrap_or(0),
                    agg.l_star.unwrap_or(0),
                    agg.j.unwrap_or(0),
                    agg.memory_cells.unwrap_or(0),
                    agg.tail_norm.unwrap_or(f64::NAN),
                    agg.trials,
                    serde_json::to_value(agg.w1_method)?.as_str().unwrap_or_default(),
                )?;
                aggregates.push(agg);
            }
            Err(e) => summary.failures.push(format!("n={n} d={d} k={k} epsilon={epsilon}: {e:#}")),
        }
    }
    fs::write(out_dir.join("reports.jsonl"), lines)?;
    fs::write(out_dir.join("summary.csv"), table)?;
    fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&aggregates)? + "\n")?;
    if !summary.failures.is_empty() {
        fs::write(out_dir.join("failures.txt"), summary.failures.join("\n") + "\n")?;
    }
    Ok(summary)
}
