//! File formats.
//!
//! Points are CSV: an optional header `x0,x1,…` followed by one row of `d`
//! comma-separated decimals per point.
//!
//! Trees are line-oriented text:
//!
//! ```text
//! privhp-tree v1
//! d 1
//! epsilon 1.0000000000000000e0      (optional config echo, one key per line)
//! ...
//! nodes 3
//! * 1.0000000000000000e2
//! 0 6.0000000000000000e1
//! 1 4.0000000000000000e1
//! ```
//!
//! Node lines are `<θ bits | *> <count>` in depth-first pre-order. A node is
//! branched exactly when both of its children are listed. Reals are written
//! with 17 significant digits, which round-trips every `f64`.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Read, Write};

use crate::domain::SubdomainIndex;
use crate::engine::PrivHpConfig;
use crate::error::{Error, Result};
use crate::tree::{NodeId, PartitionTree};

const MAGIC: &str = "privhp-tree v1";

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeFile {
    pub d: usize,
    pub config: Option<PrivHpConfig>,
    pub tree: PartitionTree,
}

pub fn write_tree<W: Write>(out: &mut W, file: &TreeFile) -> io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "d {}", file.d)?;
    if let Some(c) = &file.config {
        writeln!(out, "epsilon {}", fmt_real(c.epsilon))?;
        writeln!(out, "k {}", c.k)?;
        writeln!(out, "L {}", c.depth)?;
        writeln!(out, "L_star {}", c.l_star)?;
        writeln!(out, "j {}", c.j)?;
        writeln!(out, "w_cells {}", c.w_cells)?;
        writeln!(out, "seed {}", c.seed)?;
        writeln!(out, "n_hint {}", c.n_hint)?;
        writeln!(out, "noiseless {}", c.noiseless)?;
    }
    writeln!(out, "nodes {}", file.tree.len())?;
    for id in file.tree.preorder() {
        let n = file.tree.node(id);
        let name = if n.index.level() == 0 { "*".to_string() } else { n.index.to_string() };
        writeln!(out, "{name} {}", fmt_real(n.count))?;
    }
    Ok(())
}

fn bad(line: usize, reason: impl Into<String>) -> Error {
    Error::TreeFormat { line, reason: reason.into() }
}

fn parse_field<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(line, format!("invalid value {value:?} for {key}")))
}

pub fn read_tree<R: BufRead>(input: R) -> Result<TreeFile> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i, l)),
            Some((i, Err(e))) => Err(bad(i, e.to_string())),
            None => Err(bad(0, format!("unexpected end of file, expected {what}"))),
        }
    };
    let (no, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(bad(no, format!("expected {MAGIC:?}")));
    }
    let mut header: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let node_count = loop {
        let (no, line) = next("header or node count")?;
        let (key, value) = line
            .trim()
            .split_once(' ')
            .ok_or_else(|| bad(no, "expected `key value`"))?;
        if key == "nodes" {
            break parse_field::<usize>(no, key, value)?;
        }
        if header.insert(key.to_string(), (no, value.trim().to_string())).is_some() {
            return Err(bad(no, format!("duplicate key {key}")));
        }
    };
    let get = |key: &str| header.get(key).map(|(no, v)| (*no, v.as_str()));
    let (d_line, d_value) = get("d").ok_or_else(|| bad(1, "missing d"))?;
    let d: usize = parse_field(d_line, "d", d_value)?;
    let config = if let Some((no, eps)) = get("epsilon") {
        let field = |key: &str| get(key).ok_or_else(|| bad(no, format!("missing {key}")));
        let num = |key: &str| -> Result<usize> {
            let (l, v) = field(key)?;
            parse_field(l, key, v)
        };
        Some(PrivHpConfig {
            d,
            epsilon: parse_field(no, "epsilon", eps)?,
            k: num("k")?,
            depth: num("L")?,
            l_star: num("L_star")?,
            j: num("j")?,
            w_cells: num("w_cells")?,
            seed: { let (l, v) = field("seed")?; parse_field(l, "seed", v)? },
            n_hint: { let (l, v) = field("n_hint")?; parse_field(l, "n_hint", v)? },
            noiseless: { let (l, v) = field("noiseless")?; parse_field(l, "noiseless", v)? },
        })
    } else {
        None
    };
    const KNOWN: [&str; 10] =
        ["d", "epsilon", "k", "L", "L_star", "j", "w_cells", "seed", "n_hint", "noiseless"];
    if let Some((key, (no, _))) = header.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
        return Err(bad(*no, format!("unknown header key {key}")));
    }

    let mut counts: BTreeMap<SubdomainIndex, (usize, f64)> = BTreeMap::new();
    for _ in 0..node_count {
        let (no, line) = next("node line")?;
        let (name, value) =
            line.trim().split_once(' ').ok_or_else(|| bad(no, "expected `<index> <count>`"))?;
        let index = if name == "*" {
            SubdomainIndex::ROOT
        } else {
            name.parse().map_err(|e: Error| bad(no, e.to_string()))?
        };
        let count: f64 = parse_field(no, "count", value.trim())?;
        if counts.insert(index, (no, count)).is_some() {
            return Err(bad(no, format!("duplicate node {name}")));
        }
    }
    if let Some((no, Ok(extra))) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(bad(no, "trailing content after node list"));
        }
    }
    let (_, root) = *counts.get(&SubdomainIndex::ROOT).ok_or_else(|| bad(0, "missing root node"))?;
    let mut tree = PartitionTree::new(root);
    let mut stack: Vec<NodeId> = vec![PartitionTree::ROOT];
    let mut used = 1;
    while let Some(id) = stack.pop() {
        let [i0, i1] = tree.node(id).index.children();
        match (counts.get(&i0), counts.get(&i1)) {
            (Some(&(_, c0)), Some(&(_, c1))) => {
                let [a, b] = tree.attach_children(id, c0, c1);
                stack.extend([a, b]);
                used += 2;
            }
            (None, None) => {}
            (Some(&(no, _)), None) | (None, Some(&(no, _))) => {
                return Err(bad(no, "node listed without its sibling"));
            }
        }
    }
    if used != counts.len() {
        let orphan = counts.iter().find(|(i, _)| tree.find(i).is_none()).map(|(_, v)| v.0);
        return Err(bad(orphan.unwrap_or(0), "node without a parent"));
    }
    Ok(TreeFile { d, config, tree })
}

/// Byte-counting reader.
#[derive(Debug)]
pub struct CountingReader<R> {
    inner: R,
    bytes: u64,
}

impl<R> CountingReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, bytes: 0 }
    }

    pub fn bytes_read(&self) -> u64 {
        self.bytes
    }
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.bytes += n as u64;
        Ok(n)
    }
}

fn is_header(line: &str, d: usize) -> bool {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    cols.len() == d && cols.iter().enumerate().all(|(i, c)| *c == format!("x{i}"))
}

pub fn parse_row(line: &str, d: usize) -> Result<Vec<f64>> {
    let row: Vec<f64> = line
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Input(format!("unparseable row {line:?}: {e}")))?;
    if row.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: row.len() });
    }
    Ok(row)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadStats {
    pub rows: u64,
    pub malformed: u64,
}

/// Streams points to `sink` without buffering the file. Malformed rows are
/// skipped and counted, or abort the read when `strict`.
pub fn for_each_point<R: BufRead>(
    input: R,
    d: usize,
    strict: bool,
    mut sink: impl FnMut(&[f64]) -> Result<()>,
) -> Result<ReadStats> {
    let mut stats = ReadStats::default();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Input(format!("line {}: {e}", i + 1)))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (i == 0 && is_header(trimmed, d)) {
            continue;
        }
        match parse_row(trimmed, d) {
            Ok(row) => {
                stats.rows += 1;
                sink(&row)?;
            }
            Err(e) if strict => {
                let reason = match e {
                    Error::Input(m) => m,
                    other => other.to_string(),
                };
                return Err(Error::Input(format!("line {}: {reason}", i + 1)));
            }
            Err(_) => stats.malformed += 1,
        }
    }
    Ok(stats)
}

pub fn read_points<R: BufRead>(input: R, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    for_each_point(input, d, true, |p| {
        points.push(p.to_vec());
        Ok(())
    })?;
    Ok(points)
}

/// Number of columns in the first data row (header rows count too).
pub fn sniff_dimension<R: BufRead>(input: R) -> Result<Option<usize>> {
    for line in input.lines() {
        let line = line.map_err(|e| Error::Input(e.to_string()))?;
        if !line.trim().is_empty() {
            return Ok(Some(line.split(',').count()));
        }
    }
    Ok(None)
}

pub fn write_points<W: Write>(out: &mut W, d: usize, points: &[Vec<f64>]) -> io::Result<()> {
    let header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in points {
        let row: Vec<String> = p.iter().map(|&x| fmt_real(x)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_tree() -> PartitionTree {
        let mut t = PartitionTree::new(10.0);
        let [a, _] = t.attach_children(PartitionTree::ROOT, 7.25, 2.75);
        t.attach_children(a, 0.1 + 0.2, 6.95);
        t
    }

    #[test]
    fn tree_round_trip_with_config() {
        let config = PrivHpConfig::default_for(4096, 0.5, 4, 1).unwrap().with_seed(99);
        let file = TreeFile { d: 1, config: Some(config), tree: sample_tree() };
        let mut buf = Vec::new();
        write_tree(&mut buf, &file).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\n* 1.0000000000000000e1\n"));
        assert_eq!(read_tree(&buf[..]).unwrap(), file);
    }

    #[test]
    fn tree_format_errors() {
        let cases = [
            "nope\n",
            "privhp-tree v1\nd 1\nnodes 2\n* 1\n0 1\n",
            "privhp-tree v1\nd 1\nnodes 1\n0 1\n",
            "privhp-tree v1\nd 1\nfoo 3\nnodes 1\n* 1\n",
            "privhp-tree v1\nd 1\nnodes 3\n* 1\n0 x\n1 0\n",
            "privhp-tree v1\nd 1\nnodes 5\n* 1\n0 1\n1 0\n10 0\n11 0\n",
        ];
        assert!(read_tree(cases[5].as_bytes()).is_ok());
        for c in &cases[..5] {
            assert!(matches!(read_tree(c.as_bytes()), Err(Error::TreeFormat { .. })), "{c}");
        }
        let orphan = "privhp-tree v1\nd 1\nnodes 3\n* 1\n00 1\n01 0\n";
        assert!(read_tree(orphan.as_bytes()).is_err());
    }

    #[test]
    fn csv_reading() {
        let text = "x0,x1\n0.5,0.25\n\nbad,row\n0.1\n1.0,0.0\n";
        let mut got = Vec::new();
        let stats = for_each_point(text.as_bytes(), 2, false, |p| {
            got.push(p.to_vec());
            Ok(())
        })
        .unwrap();
        assert_eq!(stats, ReadStats { rows: 2, malformed: 2 });
        assert_eq!(got, vec![vec![0.5, 0.25], vec![1.0, 0.0]]);
        assert!(for_each_point(text.as_bytes(), 2, true, |_| Ok(())).is_err());
        assert_eq!(sniff_dimension("\n0.1,0.2,0.3\n".as_bytes()).unwrap(), Some(3));
        assert_eq!(sniff_dimension("".as_bytes()).unwrap(), None);
    }

    #[test]
    fn counting_reader_counts() {
        let data = b"0.1\n0.2\n";
        let mut r = CountingReader::new(&data[..]);
        let mut s = String::new();
        r.read_to_string(&mut s).unwrap();
        assert_eq!(r.bytes_read(), data.len() as u64);
    }

    proptest! {
        #[test]
        fn reals_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            prop_assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }

        #[test]
        fn points_round_trip(pts in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 3), 0..20)) {
            let mut buf = Vec::new();
            write_points(&mut buf, 3, &pts).unwrap();
            prop_assert_eq!(read_points(&buf[..], 3).unwrap(), pts);
        }
    }
}
