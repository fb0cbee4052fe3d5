//! Small graph builders shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphState, NewNode, NodeId, SnapshotDelta};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn base_delta(features: Vec<Vec<f64>>, labels: Vec<Option<u32>>, edges: &[(u32, u32)]) -> SnapshotDelta {
    SnapshotDelta {
        time: 0,
        new_nodes: features
            .into_iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (features, label))| NewNode {
                id: NodeId::from(i),
                features,
                label,
            })
            .collect(),
        edge_adds: edges.iter().map(|&(u, v)| (NodeId(u), NodeId(v))).collect(),
        ..Default::default()
    }
}

pub fn graph(features: Vec<Vec<f64>>, labels: Vec<Option<u32>>, edges: &[(u32, u32)]) -> GraphState {
    let dim = features.first().map_or(1, Vec::len);
    GraphState::empty(dim)
        .apply_delta(&base_delta(features, labels, edges))
        .unwrap()
}

/// G(n, p) with uniform features in [0, 1] and uniform labels.
pub fn random_graph(n: usize, dim: usize, classes: u32, p: f64, seed: u64) -> GraphState {
    let mut r = rng(seed);
    let features = (0..n).map(|_| (0..dim).map(|_| r.random::<f64>()).collect()).collect();
    let labels = (0..n).map(|_| Some(r.random_range(0..classes))).collect();
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if r.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    graph(features, labels, &edges)
}

/// A random delta on `g`: one new connected node, some edge additions and
/// removals and a few attribute changes.
pub fn random_delta(g: &GraphState, seed: u64) -> SnapshotDelta {
    let mut r = rng(seed);
    let n = g.num_nodes() as u32;
    let dim = g.feature_dim();
    let time = g.time().map_or(0, |t| t + 1);
    let mut used = std::collections::HashSet::new();
    let mut delta = SnapshotDelta::empty(time);
    delta.new_nodes.push(NewNode {
        id: NodeId(n),
        features: (0..dim).map(|_| r.random::<f64>()).collect(),
        label: Some(r.random_range(0..2)),
    });
    let partner = NodeId(r.random_range(0..n));
    delta.edge_adds.push((NodeId(n), partner));
    used.insert((partner, NodeId(n)));
    for _ in 0..3 {
        let (u, v) = (NodeId(r.random_range(0..n)), NodeId(r.random_range(0..n)));
        let key = (u.min(v), u.max(v));
        if u == v || used.contains(&key) {
            continue;
        }
        used.insert(key);
        if g.has_edge(u, v) {
            delta.edge_removes.push((u, v));
        } else {
            delta.edge_adds.push((u, v));
        }
    }
    if r.random::<bool>() {
        let u = NodeId(r.random_range(0..n));
        delta
            .attr_changes
            .push((u, (0..dim).map(|_| r.random::<f64>()).collect()));
    }
    delta
}
