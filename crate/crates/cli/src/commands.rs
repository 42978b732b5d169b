use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use privhp::domain::HypercubeDomain;
use privhp::eval::{tail_stats, w1_between_points, w1_to_tree, ExactHistogram, UtilityReport};
use privhp::io::{for_each_point, read_tree, sniff_dimension, write_points, write_tree};
use privhp::io::{CountingReader, TreeFile};
use privhp::noise::seeded_rng;
use privhp::{sampler, Error, PrivHpConfig, PrivHpState};

use crate::config::{resolve_seed, warn_non_private, ConfigFile};

const GENERATE_STREAM: u64 = 0x47454E;

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// Writes to `path`, or stdout when absent.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildSummary {
    pub items_seen: u64,
    pub rejected: u64,
    pub malformed: u64,
    pub memory_cells: usize,
    pub bytes_read: u64,
}

pub fn build(
    config_path: &Path,
    input: &Path,
    output: &Path,
    seed: Option<u64>,
    strict: bool,
    noiseless: bool,
) -> Result<BuildSummary> {
    let config = ConfigFile::load(config_path)?.resolve(seed, noiseless)?;
    if config.noiseless {
        warn_non_private();
    }
    let d = config.d;
    let mut state = PrivHpState::new(config.clone())?;
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let mut reader = BufReader::new(CountingReader::new(file));
    let stats = for_each_point(&mut reader, d, strict, |p| match state.update(p) {
        Err(Error::OutOfDomain { .. }) if !strict => Ok(()),
        other => other,
    })
    .with_context(|| format!("reading {}", input.display()))?;
    let bytes_read = reader.get_ref().bytes_read();

    let summary = BuildSummary {
        items_seen: state.items_seen(),
        rejected: state.rejected(),
        malformed: stats.malformed,
        memory_cells: state.memory_cells(),
        bytes_read,
    };
    let tree = state.finalize()?;
    let mut out = sink(Some(output))?;
    write_tree(&mut out, &TreeFile { d, config: Some(config), tree })?;
    out.flush()?;
    Ok(summary)
}

pub fn generate(tree_path: &Path, count: usize, seed: Option<u64>, output: Option<&Path>) -> Result<()> {
    let file = read_tree(open(tree_path)?).with_context(|| format!("loading tree {}", tree_path.display()))?;
    if file.config.as_ref().is_some_and(|c| c.noiseless) {
        warn_non_private();
    }
    let domain = HypercubeDomain::new(file.d)?;
    let seed = resolve_seed(seed)?;
    let mut rng = seeded_rng(seed, GENERATE_STREAM);
    let points = match sampler::sample_many(&file.tree, &domain, count, &mut rng) {
        Err(Error::DegenerateGenerator(total)) if count > 0 => bail!(
            "tree {} has total mass {total}; nothing can be sampled (the stream was empty or drowned by noise)",
            tree_path.display()
        ),
        Err(Error::DegenerateGenerator(_)) => Vec::new(),
        other => other?,
    };
    let mut out = sink(output)?;
    write_points(&mut out, file.d, &points)?;
    out.flush()?;
    Ok(())
}

pub enum Reference<'a> {
    Tree(&'a Path),
    Synthetic(&'a Path),
}

/// Rows `build` would ingest: malformed and out-of-domain rows are skipped.
fn load_points(path: &Path, d: usize) -> Result<Vec<Vec<f64>>> {
    let domain = HypercubeDomain::new(d)?;
    let mut points = Vec::new();
    for_each_point(open(path)?, d, false, |p| {
        if domain.validate(p).is_ok() {
            points.push(p.to_vec());
        }
        Ok(())
    })
    .with_context(|| format!("reading {}", path.display()))?;
    Ok(points)
}

fn dimension_of(path: &Path) -> Result<usize> {
    let mut r = open(path)?;
    match sniff_dimension(&mut r)? {
        Some(d) => Ok(d),
        None => bail!("{} is empty", path.display()),
    }
}

/// Default leaf-flow level for point-vs-point comparisons in `d ≥ 2`.
pub const DEFAULT_EVAL_LEVEL: usize = 8;

pub fn evaluate(input: &Path, reference: Reference<'_>, level: Option<usize>) -> Result<UtilityReport> {
    let (d, config, w1) = match reference {
        Reference::Tree(path) => {
            let file = read_tree(open(path)?).with_context(|| format!("loading tree {}", path.display()))?;
            let data_d = dimension_of(input)?;
            if data_d != file.d {
                return Err(Error::DimensionMismatch { expected: file.d, got: data_d })
                    .with_context(|| format!("dimension mismatch between {} and {}", input.display(), path.display()));
            }
            let points = load_points(input, file.d)?;
            let domain = HypercubeDomain::new(file.d)?;
            let level = level.unwrap_or(file.tree.depth());
            let w1 = w1_to_tree(&points, &file.tree, &domain, level)?;
            (file.d, file.config, (w1, points, level))
        }
        Reference::Synthetic(path) => {
            let (da, db) = (dimension_of(input)?, dimension_of(path)?);
            if da != db {
                return Err(Error::DimensionMismatch { expected: da, got: db })
                    .with_context(|| format!("dimension mismatch between {} and {}", input.display(), path.display()));
            }
            let points = load_points(input, da)?;
            let synthetic = load_points(path, da)?;
            let domain = HypercubeDomain::new(da)?;
            let level = level.unwrap_or(DEFAULT_EVAL_LEVEL);
            let w1 = w1_between_points(&points, &synthetic, &domain, level)?;
            (da, None, (w1, points, level))
        }
    };
    let ((w, method, slack), points, level) = w1;
    let mut report = UtilityReport::single(w, method);
    report.discretization_slack = slack;
    if let Some(config) = &config {
        report = report.with_config(config);
        report.tail_norm = Some(tail_of(&points, d, config, level)?);
    }
    Ok(report)
}

/// `‖tail_k‖₁` of the data at `min(level, L)`.
fn tail_of(points: &[Vec<f64>], d: usize, config: &PrivHpConfig, level: usize) -> Result<f64> {
    let domain = HypercubeDomain::new(d)?;
    let r = level.min(config.depth);
    let hist = ExactHistogram::build(points, &domain, r)?;
    Ok(tail_stats(&hist, r, config.k)?.tail_norm)
}

pub fn write_json<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let mut out = sink(output)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
