//! Flat-file stream format.
//!
//! A stream directory holds four whitespace-separated text files:
//!
//! * `edges.txt`: `u v t` adds edge `{u, v}` at step `t`; `u v t -` removes it.
//!   Input edges are treated as undirected: a reversed duplicate of a live
//!   edge is ignored, self-loops are dropped.
//! * `features.txt`: line `i` holds the `d` features of node `i`, each in `[0, 1]`.
//! * `labels.txt`: `node label step`; `label` may be `-` for unlabeled nodes.
//! * `schedule.txt` (optional): `step node_count` pairs assigning nodes to
//!   steps in id order. Without it a node arrives at the step given in the
//!   label file, or at step 0 if it has no label line.
//!
//! Blank lines and lines starting with `#` are ignored everywhere.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{NewNode, NodeId, SnapshotDelta};

#[derive(Clone, Debug)]
pub struct StreamFiles {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub schedule: Option<PathBuf>,
}

impl StreamFiles {
    /// Standard file names inside `dir`; the schedule is used only if present.
    pub fn in_dir(dir: &Path) -> Self {
        let schedule = dir.join("schedule.txt");
        StreamFiles {
            edges: dir.join("edges.txt"),
            features: dir.join("features.txt"),
            labels: dir.join("labels.txt"),
            schedule: schedule.exists().then_some(schedule),
        }
    }
}

fn records(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                None
            } else {
                Some((i + 1, line.split_whitespace().map(str::to_owned).collect()))
            }
        })
        .collect())
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(path, line, format!("invalid {what} `{tok}`")))
}

/// Reads a stream and splits it into one delta per step, from step 0 to the
/// last step that has any record.
pub fn load_stream(files: &StreamFiles) -> Result<Vec<SnapshotDelta>> {
    // Features.
    let path = &files.features;
    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut dim = None;
    for (line, toks) in records(path)? {
        let row: Vec<f64> = toks
            .iter()
            .map(|t| field(path, line, t, "feature"))
            .collect::<Result<_>>()?;
        let d = *dim.get_or_insert(row.len());
        if row.len() != d {
            return Err(Error::parse(
                path,
                line,
                format!("feature dimension mismatch: expected {d}, got {}", row.len()),
            ));
        }
        if row.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::parse(path, line, "feature value outside [0, 1]"));
        }
        features.push(row);
    }
    let n = features.len();

    // Labels and label-file arrival steps.
    let path = &files.labels;
    let mut labels: Vec<Option<u32>> = vec![None; n];
    let mut label_step: Vec<Option<u32>> = vec![None; n];
    for (line, toks) in records(path)? {
        if toks.len() != 3 {
            return Err(Error::parse(path, line, "expected `node label step`"));
        }
        let v: usize = field(path, line, &toks[0], "node id")?;
        if v >= n {
            return Err(Error::parse(path, line, format!("node {v} has no feature row")));
        }
        labels[v] = match toks[1].as_str() {
            "-" => None,
            t => Some(field(path, line, t, "label")?),
        };
        label_step[v] = Some(field(path, line, &toks[2], "step")?);
    }

    // Arrival steps.
    let arrival: Vec<u32> = match &files.schedule {
        Some(path) => {
            let mut arrival = Vec::with_capacity(n);
            let mut last: Option<u32> = None;
            for (line, toks) in records(path)? {
                if toks.len() != 2 {
                    return Err(Error::parse(path, line, "expected `step node_count`"));
                }
                let step: u32 = field(path, line, &toks[0], "step")?;
                let count: usize = field(path, line, &toks[1], "node count")?;
                if last.is_some_and(|l| step <= l) {
                    return Err(Error::parse(path, line, "schedule steps must increase"));
                }
                last = Some(step);
                arrival.extend(std::iter::repeat_n(step, count));
                if arrival.len() > n {
                    return Err(Error::parse(path, line, "schedule assigns more nodes than exist"));
                }
            }
            if arrival.len() != n {
                return Err(Error::parse(
                    path,
                    0,
                    format!("schedule covers {} of {n} nodes", arrival.len()),
                ));
            }
            for (v, s) in label_step.iter().enumerate() {
                if let Some(s) = s {
                    if *s != arrival[v] {
                        return Err(Error::parse(
                            &files.labels,
                            0,
                            format!("node {v} labeled at step {s} but scheduled at {}", arrival[v]),
                        ));
                    }
                }
            }
            arrival
        }
        None => label_step.iter().map(|s| s.unwrap_or(0)).collect(),
    };
    if let Some(v) = (1..n).find(|&v| arrival[v] < arrival[v - 1]) {
        return Err(Error::Structural(format!(
            "node {v} arrives at step {} before node {} (step {})",
            arrival[v],
            v - 1,
            arrival[v - 1]
        )));
    }

    // Edges.
    let path = &files.edges;
    struct EdgeRec {
        u: NodeId,
        v: NodeId,
        step: u32,
        remove: bool,
        line: usize,
    }
    let mut edges = Vec::new();
    for (line, toks) in records(path)? {
        let remove = match toks.len() {
            3 => false,
            4 if toks[3] == "-" => true,
            _ => return Err(Error::parse(path, line, "expected `u v t` or `u v t -`")),
        };
        let u: usize = field(path, line, &toks[0], "node id")?;
        let v: usize = field(path, line, &toks[1], "node id")?;
        let step: u32 = field(path, line, &toks[2], "step")?;
        for x in [u, v] {
            if x >= n || arrival[x] > step {
                return Err(Error::parse(
                    path,
                    line,
                    format!("dangling endpoint {x} at step {step}"),
                ));
            }
        }
        if u != v {
            edges.push(EdgeRec {
                u: NodeId::from(u),
                v: NodeId::from(v),
                step,
                remove,
                line,
            });
        }
    }
    // Stable: file order is kept within a step.
    edges.sort_by_key(|e| e.step);

    let steps = arrival
        .iter()
        .copied()
        .chain(edges.iter().map(|e| e.step))
        .max()
        .map_or(0, |m| m as usize + 1);
    let mut deltas: Vec<SnapshotDelta> = (0..steps as u32).map(SnapshotDelta::empty).collect();
    for (v, row) in features.into_iter().enumerate() {
        deltas[arrival[v] as usize].new_nodes.push(NewNode {
            id: NodeId::from(v),
            features: row,
            label: labels[v],
        });
    }
    let mut live: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut in_step: HashSet<(NodeId, NodeId)> = HashSet::new();
    let mut current = None;
    for e in edges {
        if current != Some(e.step) {
            current = Some(e.step);
            in_step.clear();
        }
        let key = (e.u.min(e.v), e.u.max(e.v));
        let delta = &mut deltas[e.step as usize];
        if e.remove {
            if in_step.contains(&key) {
                return Err(Error::parse(path, e.line, "edge added and removed in the same step"));
            }
            if !live.remove(&key) {
                return Err(Error::parse(path, e.line, "removal of an edge that does not exist"));
            }
            in_step.insert(key);
            delta.edge_removes.push((e.u, e.v));
        } else if live.insert(key) {
            in_step.insert(key);
            delta.edge_adds.push((e.u, e.v));
        }
    }
    Ok(deltas)
}

/// Writes `deltas` in the format read by [`load_stream`], including a
/// schedule file. Attribute changes have no file representation and are
/// rejected.
pub fn write_stream(dir: &Path, deltas: &[SnapshotDelta]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut edges = String::new();
    let mut features = String::new();
    let mut labels = String::new();
    let mut schedule = String::new();
    for d in deltas {
        if !d.attr_changes.is_empty() {
            return Err(Error::Config(
                "attribute changes cannot be written to stream files".into(),
            ));
        }
        writeln!(schedule, "{} {}", d.time, d.new_nodes.len()).unwrap();
        for node in &d.new_nodes {
            let row: Vec<String> = node.features.iter().map(|x| format!("{x}")).collect();
            writeln!(features, "{}", row.join(" ")).unwrap();
            match node.label {
                Some(k) => writeln!(labels, "{} {} {}", node.id, k, d.time).unwrap(),
                None => writeln!(labels, "{} - {}", node.id, d.time).unwrap(),
            }
        }
        for (u, v) in &d.edge_adds {
            writeln!(edges, "{u} {v} {}", d.time).unwrap();
        }
        for (u, v) in &d.edge_removes {
            writeln!(edges, "{u} {v} {} -", d.time).unwrap();
        }
    }
    fs::write(dir.join("edges.txt"), edges)?;
    fs::write(dir.join("features.txt"), features)?;
    fs::write(dir.join("labels.txt"), labels)?;
    fs::write(dir.join("schedule.txt"), schedule)?;
    Ok(())
}
