//! Influenced-node detection.
//!
//! A node is influenced by a snapshot delta when its final-layer
//! representation moves, `‖h_u(G_new) − h_u(G_old)‖₂`, under the current
//! parameters. Three scorers are provided:
//!
//! * [`score_naive`] re-embeds every candidate on both graphs,
//! * [`score_bfs`] re-embeds only the `L`-hop ball around touched nodes,
//! * [`score_approx`] propagates per-node changes through degree-normalized
//!   adjacency using the activation-free surrogate `W_L ⋯ W_1`.
//!
//! All full-neighborhood forwards here are deterministic (no sampling).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::{embed, GnnParams};
use crate::graph::{GraphState, GraphView, NodeId, SnapshotDelta};
use crate::linalg::{l2_norm, Matrix};

/// Nonnegative influence scores. Nodes without an entry score exactly 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InfluenceScores(pub BTreeMap<NodeId, f64>);

impl InfluenceScores {
    pub fn get(&self, u: NodeId) -> f64 {
        self.0.get(&u).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.keys().copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum ThresholdRule {
    /// Keep nodes scoring strictly above `δ`.
    Absolute(f64),
    /// Keep the `⌈ρ·|pool|⌉` highest-scoring nodes of the candidate pool.
    Ratio(f64),
}

impl ThresholdRule {
    pub fn validate(self) -> Result<Self> {
        match self {
            ThresholdRule::Absolute(d) if d >= 0.0 && d.is_finite() => Ok(self),
            ThresholdRule::Ratio(r) if r > 0.0 && r <= 1.0 => Ok(self),
            other => Err(Error::Config(format!("invalid threshold rule {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Naive,
    Bfs,
    Approx,
}

impl FromStr for Detector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Detector::Naive),
            "bfs" => Ok(Detector::Bfs),
            "approx" => Ok(Detector::Approx),
            other => Err(Error::Config(format!("unknown detector `{other}`"))),
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Naive => "naive",
            Detector::Bfs => "bfs",
            Detector::Approx => "approx",
        })
    }
}

/// How the propagation factor averages over a node's neighborhood.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// `f_u^l = (1/d_u) Σ_{u' ∈ N(u)} f_{u'}^{l-1}`; isolated nodes get 0.
    #[default]
    NeighborsOnly,
    /// `f_u^l = (f_u^{l-1} + Σ_{u' ∈ N(u)} f_{u'}^{l-1}) / (d_u + 1)`, the same
    /// mean the GNN layer uses.
    SelfInclusive,
}

fn diff_scores(
    new_rows: &Matrix,
    old_rows: &Matrix,
    targets: &[NodeId],
    old_count: usize,
) -> InfluenceScores {
    let mut out = BTreeMap::new();
    let mut old_idx = 0;
    for (i, &u) in targets.iter().enumerate() {
        let new = new_rows.row(i);
        let s = if u.index() < old_count {
            let old = old_rows.row(old_idx);
            old_idx += 1;
            new.iter().zip(old).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        } else {
            l2_norm(new)
        };
        out.insert(u, s);
    }
    InfluenceScores(out)
}

/// Representation change between the graphs for `targets` (sorted, all in
/// `g_new`) at layer `depth`. Nodes absent from `g_old` compare against 0.
fn representation_shift(
    params: &GnnParams,
    g_old: &GraphState,
    g_new: &GraphState,
    targets: &[NodeId],
    depth: usize,
) -> (Matrix, Matrix) {
    let survivors: Vec<NodeId> = targets
        .iter()
        .copied()
        .filter(|u| u.index() < g_old.num_nodes())
        .collect();
    (
        embed(params, g_new, targets, depth),
        embed(params, g_old, &survivors, depth),
    )
}

/// Scores every candidate by re-embedding it on both graphs.
pub fn score_naive(
    params: &GnnParams,
    g_old: &GraphState,
    g_new: &GraphState,
    candidates: &[NodeId],
) -> Result<InfluenceScores> {
    for &u in candidates {
        if !g_new.contains(u) {
            return Err(Error::UnknownNode(u));
        }
    }
    let mut targets = candidates.to_vec();
    targets.sort_unstable();
    targets.dedup();
    let depth = params.layer_count();
    let (new_rows, old_rows) = representation_shift(params, g_old, g_new, &targets, depth);
    Ok(diff_scores(&new_rows, &old_rows, &targets, g_old.num_nodes()))
}

/// Same values as [`score_naive`], restricted to the `L`-hop ball around the
/// nodes touched by `delta`.
pub fn score_bfs(
    params: &GnnParams,
    g_old: &GraphState,
    g_new: &GraphState,
    delta: &SnapshotDelta,
    depth: usize,
) -> Result<InfluenceScores> {
    if delta.is_empty() {
        return Ok(InfluenceScores::default());
    }
    let ball = g_new.l_hop_set(&delta.touched_nodes(), depth)?;
    score_naive(params, g_old, g_new, &ball)
}

/// `f^{t,L}_{u,i}` for every seed `i` and every node `u` it reaches, keyed
/// `(u, i)`. Entries not present are 0.
pub fn propagate_f(
    g: &GraphState,
    seeds: &[NodeId],
    depth: usize,
    mode: Propagation,
) -> Result<BTreeMap<(NodeId, NodeId), f64>> {
    let mut out = BTreeMap::new();
    for &i in seeds {
        if !g.contains(i) {
            return Err(Error::UnknownNode(i));
        }
        let field = propagate(g, &[(i, [1.0])], depth, mode);
        for (u, [f]) in field {
            out.insert((u, i), f);
        }
    }
    Ok(out)
}

/// Pushes seed vectors `depth` rounds through the normalized adjacency.
/// Linear in the seed values, so weighted seeds give `Σ_i f_{u,i} · value_i`.
fn propagate<const K: usize>(
    g: &GraphState,
    seeds: &[(NodeId, [f64; K])],
    depth: usize,
    mode: Propagation,
) -> BTreeMap<NodeId, [f64; K]> {
    let mut cur: BTreeMap<NodeId, [f64; K]> = BTreeMap::new();
    for &(i, v) in seeds {
        add_into(cur.entry(i).or_insert([0.0; K]), &v, 1.0);
    }
    for _ in 0..depth {
        let mut next: BTreeMap<NodeId, [f64; K]> = BTreeMap::new();
        for (&w, val) in &cur {
            let nbrs = g.neighbors_of(w);
            match mode {
                Propagation::NeighborsOnly => {
                    for &u in nbrs {
                        let share = 1.0 / g.degree_of(u) as f64;
                        add_into(next.entry(u).or_insert([0.0; K]), val, share);
                    }
                }
                Propagation::SelfInclusive => {
                    let share = 1.0 / (nbrs.len() + 1) as f64;
                    add_into(next.entry(w).or_insert([0.0; K]), val, share);
                    for &u in nbrs {
                        let share = 1.0 / (g.degree_of(u) + 1) as f64;
                        add_into(next.entry(u).or_insert([0.0; K]), val, share);
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

#[inline]
fn add_into<const K: usize>(acc: &mut [f64; K], v: &[f64; K], scale: f64) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += scale * x;
    }
}

/// Propagation-based estimate of the representation shift.
///
/// Attribute-only deltas use the surrogate directly:
/// `score(u) = ‖Σ_i f_{u,i} · W̃ Δx_i‖`. Deltas with structural changes
/// first compute the exact layer-1 shift `Δh_i^1` of every touched node and
/// then spread its norm: `score(u) = Σ_i f_{u,i} · ‖Δh_i^1‖`.
pub fn score_approx(
    params: &GnnParams,
    g_old: &GraphState,
    g_new: &GraphState,
    delta: &SnapshotDelta,
    depth: usize,
    mode: Propagation,
) -> Result<InfluenceScores> {
    if delta.is_empty() {
        return Ok(InfluenceScores::default());
    }
    let attribute_only =
        delta.new_nodes.is_empty() && delta.edge_adds.is_empty() && delta.edge_removes.is_empty();
    let out = if attribute_only {
        let surrogate = params.surrogate();
        let classes = surrogate.rows();
        let mut changed: Vec<NodeId> = delta.attr_changes.iter().map(|(u, _)| *u).collect();
        changed.sort_unstable();
        changed.dedup();
        // Project each Δx once, then propagate the C-dim vectors together.
        let mut projected: Vec<(NodeId, Vec<f64>)> = Vec::with_capacity(changed.len());
        for &i in &changed {
            let dx: Vec<f64> = g_new
                .features(i)?
                .iter()
                .zip(g_old.features(i)?)
                .map(|(a, b)| a - b)
                .collect();
            let mut v = vec![0.0; classes];
            surrogate.matvec(&dx, &mut v);
            projected.push((i, v));
        }
        propagate_vectors(g_new, &projected, depth, mode)
            .into_iter()
            .map(|(u, v)| (u, l2_norm(&v)))
            .collect()
    } else {
        let touched = delta.touched_nodes();
        for &u in &touched {
            if !g_new.contains(u) {
                return Err(Error::UnknownNode(u));
            }
        }
        let (new_rows, old_rows) = representation_shift(params, g_old, g_new, &touched, 1);
        let shift = diff_scores(&new_rows, &old_rows, &touched, g_old.num_nodes());
        let seeds: Vec<(NodeId, [f64; 1])> = shift.0.iter().map(|(&u, &s)| (u, [s])).collect();
        propagate(g_new, &seeds, depth, mode)
            .into_iter()
            .map(|(u, [s])| (u, s))
            .collect()
    };
    Ok(InfluenceScores(out))
}

fn propagate_vectors(
    g: &GraphState,
    seeds: &[(NodeId, Vec<f64>)],
    depth: usize,
    mode: Propagation,
) -> BTreeMap<NodeId, Vec<f64>> {
    // Propagation is linear and separable per coordinate.
    let width = seeds.first().map_or(0, |(_, v)| v.len());
    let mut out: BTreeMap<NodeId, Vec<f64>> = BTreeMap::new();
    for k in 0..width {
        let column: Vec<(NodeId, [f64; 1])> = seeds.iter().map(|(u, v)| (*u, [v[k]])).collect();
        for (u, [x]) in propagate(g, &column, depth, mode) {
            out.entry(u).or_insert_with(|| vec![0.0; width])[k] = x;
        }
    }
    out
}

/// Applies the threshold rule. `pool` is the candidate set the ratio refers
/// to; pool members without a score count as 0. Output is sorted by id.
pub fn select_influenced(
    scores: &InfluenceScores,
    rule: ThresholdRule,
    pool: &[NodeId],
) -> Result<Vec<NodeId>> {
    let mut out = match rule.validate()? {
        ThresholdRule::Absolute(delta) => scores
            .0
            .iter()
            .filter(|(_, &s)| s > delta)
            .map(|(&u, _)| u)
            .collect(),
        ThresholdRule::Ratio(rho) => {
            let mut ranked: Vec<(NodeId, f64)> = pool.iter().map(|&u| (u, scores.get(u))).collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            ranked.dedup_by_key(|x| x.0);
            let keep = ((rho * ranked.len() as f64) - 1e-9).ceil().max(0.0) as usize;
            ranked.truncate(keep.min(ranked.len()));
            ranked.into_iter().map(|(u, _)| u).collect::<Vec<_>>()
        }
    };
    out.sort_unstable();
    Ok(out)
}

/// Outcome of one detection pass.
#[derive(Clone, Debug)]
pub struct Detection {
    /// Selected nodes plus every newly added node, sorted.
    pub influenced: Vec<NodeId>,
    /// The `L`-hop ball around touched nodes.
    pub pool: Vec<NodeId>,
    pub scores: InfluenceScores,
    pub elapsed: Duration,
}

/// Scores the delta with `detector`, applies `rule` over the `L`-hop pool
/// and adds all new nodes.
pub fn detect(
    detector: Detector,
    params: &GnnParams,
    g_old: &GraphState,
    g_new: &GraphState,
    delta: &SnapshotDelta,
    rule: ThresholdRule,
    mode: Propagation,
) -> Result<Detection> {
    let depth = params.layer_count();
    let start = Instant::now();
    let scores = match detector {
        Detector::Naive => {
            let all: Vec<NodeId> = g_new.nodes().collect();
            score_naive(params, g_old, g_new, &all)?
        }
        Detector::Bfs => score_bfs(params, g_old, g_new, delta, depth)?,
        Detector::Approx => score_approx(params, g_old, g_new, delta, depth, mode)?,
    };
    let pool = if delta.is_empty() {
        Vec::new()
    } else {
        g_new.l_hop_set(&delta.touched_nodes(), depth)?
    };
    let mut influenced = select_influenced(&scores, rule, &pool)?;
    influenced.extend(delta.new_node_ids());
    influenced.sort_unstable();
    influenced.dedup();
    let elapsed = start.elapsed();
    Ok(Detection {
        influenced,
        pool,
        scores,
        elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::{forward, Activation, FULL_FANOUT};
    use crate::linalg::Matrix;
    use crate::testutil::{graph, random_delta, random_graph, rng};

    fn params(dim: usize, layers: usize, act: Activation, seed: u64) -> GnnParams {
        GnnParams::init(dim, 6, 3, layers, act, &mut rng(seed))
    }

    fn all(g: &GraphState) -> Vec<NodeId> {
        g.nodes().collect()
    }

    fn attr_delta(g: &GraphState, node: u32, row: Vec<f64>) -> SnapshotDelta {
        SnapshotDelta {
            time: g.time().unwrap() + 1,
            attr_changes: vec![(NodeId(node), row)],
            ..Default::default()
        }
    }

    #[test]
    fn identical_graphs_score_zero() {
        let g = random_graph(20, 4, 2, 0.2, 1);
        let p = params(4, 2, Activation::Relu, 2);
        let s = score_naive(&p, &g, &g, &all(&g)).unwrap();
        assert_eq!(s.len(), 20);
        assert!(s.0.values().all(|&x| x == 0.0));
    }

    #[test]
    fn attribute_change_is_local() {
        let g = random_graph(40, 4, 2, 0.06, 3);
        let p = params(4, 2, Activation::Relu, 4);
        let h = g.apply_delta(&attr_delta(&g, 5, vec![0.9, 0.1, 0.9, 0.1])).unwrap();
        let ball = g.l_hop_set(&[NodeId(5)], 2).unwrap();
        let s = score_naive(&p, &g, &h, &all(&g)).unwrap();
        for u in g.nodes() {
            if !ball.contains(&u) {
                assert_eq!(s.get(u), 0.0, "{u}");
            }
        }
        assert!(s.get(NodeId(5)) > 0.0);
    }

    #[test]
    fn naive_matches_per_node_forward() {
        let g = random_graph(15, 4, 2, 0.2, 5);
        let p = params(4, 2, Activation::Relu, 6);
        let (a, b) = (0..15u32)
            .flat_map(|u| (u + 1..15).map(move |v| (u, v)))
            .find(|&(u, v)| !g.has_edge(NodeId(u), NodeId(v)))
            .unwrap();
        let delta = SnapshotDelta {
            time: 1,
            edge_adds: vec![(NodeId(a), NodeId(b))],
            ..Default::default()
        };
        let h = g.apply_delta(&delta).unwrap();
        let s = score_naive(&p, &g, &h, &all(&h)).unwrap();
        for u in h.nodes() {
            let fan = [FULL_FANOUT; 2];
            let (new, _) = forward(&p, &h, u, &fan, &mut rng(0)).unwrap();
            let (old, _) = forward(&p, &g, u, &fan, &mut rng(0)).unwrap();
            let want = new.iter().zip(&old).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!((s.get(u) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn new_nodes_score_against_zero() {
        let g = random_graph(10, 3, 2, 0.3, 7);
        let p = params(3, 2, Activation::Relu, 8);
        let delta = random_delta(&g, 1);
        let h = g.apply_delta(&delta).unwrap();
        let s = score_naive(&p, &g, &h, &all(&h)).unwrap();
        let fresh = NodeId(10);
        let logits = embed(&p, &h, &[fresh], 2);
        assert_eq!(s.get(fresh), l2_norm(logits.row(0)));
    }

    #[test]
    fn bfs_on_empty_delta_is_empty() {
        let g = random_graph(10, 3, 2, 0.3, 9);
        let p = params(3, 2, Activation::Relu, 1);
        let h = g.apply_delta(&SnapshotDelta::empty(1)).unwrap();
        assert!(score_bfs(&p, &g, &h, &SnapshotDelta::empty(1), 2).unwrap().is_empty());
        assert!(score_approx(&p, &g, &h, &SnapshotDelta::empty(1), 2, Propagation::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn bfs_equals_naive_on_its_keys() {
        for seed in 0..10 {
            let g = random_graph(50, 4, 2, 0.05, 100 + seed);
            let p = params(4, 2, Activation::Relu, seed);
            let delta = random_delta(&g, seed);
            let h = g.apply_delta(&delta).unwrap();
            let bfs = score_bfs(&p, &g, &h, &delta, 2).unwrap();
            let naive = score_naive(&p, &g, &h, &all(&h)).unwrap();
            let ball = h.l_hop_set(&delta.touched_nodes(), 2).unwrap();
            for (u, s) in &bfs.0 {
                assert!(ball.contains(u));
                assert_eq!(s.to_bits(), naive.get(*u).to_bits());
            }
            for u in h.nodes() {
                if !ball.contains(&u) {
                    assert_eq!(naive.get(u), 0.0);
                }
            }
        }
    }

    #[test]
    fn propagation_base_cases() {
        let g = graph(vec![vec![0.0]; 2], vec![Some(0); 2], &[(0, 1)]);
        let f = propagate_f(&g, &[NodeId(0)], 1, Propagation::NeighborsOnly).unwrap();
        assert_eq!(f.get(&(NodeId(1), NodeId(0))), Some(&1.0));
        let f0 = propagate_f(&g, &[NodeId(0), NodeId(1)], 0, Propagation::NeighborsOnly).unwrap();
        assert_eq!(f0.len(), 2);
        assert_eq!(f0[&(NodeId(0), NodeId(0))], 1.0);
        assert_eq!(f0[&(NodeId(1), NodeId(1))], 1.0);

        let lonely = graph(vec![vec![0.0]; 2], vec![Some(0); 2], &[]);
        let f = propagate_f(&lonely, &[NodeId(0)], 2, Propagation::NeighborsOnly).unwrap();
        assert!(f.values().all(|&x| x == 0.0));
    }

    fn dense_power(g: &GraphState, depth: usize, mode: Propagation) -> Matrix {
        let n = g.num_nodes();
        let mut p = Matrix::zeros(n, n);
        for u in 0..n {
            let nbrs = g.neighbors(NodeId::from(u)).unwrap();
            let d = nbrs.len() as f64;
            match mode {
                Propagation::NeighborsOnly => {
                    for w in nbrs {
                        p[(u, w.index())] = 1.0 / d;
                    }
                }
                Propagation::SelfInclusive => {
                    p[(u, u)] = 1.0 / (d + 1.0);
                    for w in nbrs {
                        p[(u, w.index())] = 1.0 / (d + 1.0);
                    }
                }
            }
        }
        let mut acc = Matrix::identity(n);
        for _ in 0..depth {
            acc = p.matmul(&acc);
        }
        acc
    }

    #[test]
    fn propagation_matches_dense_power() {
        for seed in 0..4 {
            let g = random_graph(30, 1, 2, 0.12, 200 + seed);
            let seeds = [NodeId(0), NodeId(7), NodeId(19)];
            for mode in [Propagation::NeighborsOnly, Propagation::SelfInclusive] {
                for depth in 0..4 {
                    let dense = dense_power(&g, depth, mode);
                    let f = propagate_f(&g, &seeds, depth, mode).unwrap();
                    for &i in &seeds {
                        for u in g.nodes() {
                            let got = f.get(&(u, i)).copied().unwrap_or(0.0);
                            assert!((got - dense[(u.index(), i.index())]).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn approx_exact_for_linear_single_layer_attribute_change() {
        for seed in 0..5 {
            let g = random_graph(25, 4, 2, 0.15, 300 + seed);
            let p = params(4, 1, Activation::Linear, seed);
            let delta = attr_delta(&g, 3, vec![0.1, 0.2, 0.3, 0.4]);
            let h = g.apply_delta(&delta).unwrap();
            let naive = score_naive(&p, &g, &h, &all(&h)).unwrap();
            let approx = score_approx(&p, &g, &h, &delta, 1, Propagation::SelfInclusive).unwrap();
            for u in h.nodes() {
                let (a, b) = (approx.get(u), naive.get(u));
                assert!((a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-15, "{u}: {a} vs {b}");
            }
            // The neighbor-only factor drops the node's own term.
            let literal = score_approx(&p, &g, &h, &delta, 1, Propagation::NeighborsOnly).unwrap();
            assert_eq!(literal.get(NodeId(3)), 0.0);
            assert!(naive.get(NodeId(3)) > 0.0);
        }
    }

    #[test]
    fn approx_keys_stay_in_ball() {
        let g = random_graph(50, 4, 2, 0.05, 11);
        let p = params(4, 2, Activation::Relu, 12);
        let delta = random_delta(&g, 3);
        let h = g.apply_delta(&delta).unwrap();
        let ball = h.l_hop_set(&delta.touched_nodes(), 2).unwrap();
        for mode in [Propagation::NeighborsOnly, Propagation::SelfInclusive] {
            let s = score_approx(&p, &g, &h, &delta, 2, mode).unwrap();
            assert!(s.keys().all(|u| ball.contains(&u)));
            assert!(s.0.values().all(|&x| x >= 0.0 && x.is_finite()));
        }
    }

    fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let (mut conc, mut disc) = (0i64, 0i64);
        for i in 0..n {
            for j in i + 1..n {
                let s = (a[i] - a[j]).signum() * (b[i] - b[j]).signum();
                if s > 0.0 {
                    conc += 1;
                } else if s < 0.0 {
                    disc += 1;
                }
            }
        }
        let pairs = (n * (n - 1) / 2).max(1) as f64;
        (conc - disc) as f64 / pairs
    }

    #[test]
    fn approx_ranking_report() {
        let g = random_graph(50, 4, 2, 0.06, 13);
        let p = params(4, 2, Activation::Relu, 14);
        let delta = random_delta(&g, 5);
        let h = g.apply_delta(&delta).unwrap();
        let bfs = score_bfs(&p, &g, &h, &delta, 2).unwrap();
        let keys: Vec<NodeId> = bfs.keys().collect();
        for mode in [Propagation::NeighborsOnly, Propagation::SelfInclusive] {
            let approx = score_approx(&p, &g, &h, &delta, 2, mode).unwrap();
            let a: Vec<f64> = keys.iter().map(|&u| approx.get(u)).collect();
            let b: Vec<f64> = keys.iter().map(|&u| bfs.get(u)).collect();
            let tau = kendall_tau(&a, &b);
            let top_a = select_influenced(&approx, ThresholdRule::Ratio(0.8), &keys).unwrap();
            let top_b = select_influenced(&bfs, ThresholdRule::Ratio(0.8), &keys).unwrap();
            let overlap = top_a.iter().filter(|u| top_b.contains(u)).count();
            println!("{mode:?}: kendall tau {tau:.3}, top-80% overlap {overlap}/{}", top_b.len());
            assert!((-1.0..=1.0).contains(&tau));
        }
    }

    fn scores(pairs: &[(u32, f64)]) -> InfluenceScores {
        InfluenceScores(pairs.iter().map(|&(u, s)| (NodeId(u), s)).collect())
    }

    #[test]
    fn selection_rules() {
        let s = scores(&[(0, 0.1), (1, 0.2), (2, 0.05)]);
        assert!(select_influenced(&s, ThresholdRule::Absolute(0.5), &[]).unwrap().is_empty());
        assert_eq!(
            select_influenced(&s, ThresholdRule::Absolute(0.1), &[]).unwrap(),
            vec![NodeId(1)]
        );

        let ten = scores(&(0..10).map(|i| (i, i as f64)).collect::<Vec<_>>());
        let pool: Vec<NodeId> = (0..10).map(NodeId).collect();
        let picked = select_influenced(&ten, ThresholdRule::Ratio(0.8), &pool).unwrap();
        assert_eq!(picked.len(), 8);
        assert_eq!(picked, (2..10).map(NodeId).collect::<Vec<_>>());

        // Ties at the cutoff resolve by ascending id.
        let tied = scores(&[(4, 1.0), (1, 1.0), (3, 1.0), (2, 5.0)]);
        let pool = [NodeId(1), NodeId(2), NodeId(3), NodeId(4)];
        let picked = select_influenced(&tied, ThresholdRule::Ratio(0.5), &pool).unwrap();
        assert_eq!(picked, vec![NodeId(1), NodeId(2)]);

        assert!(select_influenced(&ten, ThresholdRule::Ratio(0.0), &pool).is_err());
        assert!(select_influenced(&ten, ThresholdRule::Absolute(-1.0), &pool).is_err());
    }

    #[test]
    fn detect_always_keeps_new_nodes() {
        let g = random_graph(30, 3, 2, 0.1, 15);
        let p = params(3, 2, Activation::Relu, 16);
        let delta = random_delta(&g, 8);
        let h = g.apply_delta(&delta).unwrap();
        for det in [Detector::Naive, Detector::Bfs, Detector::Approx] {
            let d = detect(det, &p, &g, &h, &delta, ThresholdRule::Absolute(1e9), Propagation::default())
                .unwrap();
            assert_eq!(d.influenced, vec![NodeId(30)]);
        }
    }
}
