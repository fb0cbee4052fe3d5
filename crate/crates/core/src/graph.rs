//! Evolving attributed graph: snapshot deltas, neighborhood queries and
//! frozen ego-networks.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense node index. Ids are handed out contiguously in arrival order and
/// never reused.
///
/// Inside a [`GraphView`] the id space is local to the view: for a live
/// [`GraphState`] it is the global id, for an [`EgoNet`] it indexes the
/// frozen copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(v: usize) -> Self {
        NodeId(v as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewNode {
    pub id: NodeId,
    pub features: Vec<f64>,
    pub label: Option<u32>,
}

/// Changes between two consecutive snapshots.
///
/// Attribute changes carry the full replacement row, not an increment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDelta {
    pub time: u32,
    pub new_nodes: Vec<NewNode>,
    pub edge_adds: Vec<(NodeId, NodeId)>,
    pub edge_removes: Vec<(NodeId, NodeId)>,
    pub attr_changes: Vec<(NodeId, Vec<f64>)>,
}

impl SnapshotDelta {
    pub fn empty(time: u32) -> Self {
        SnapshotDelta {
            time,
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.new_nodes.is_empty()
            && self.edge_adds.is_empty()
            && self.edge_removes.is_empty()
            && self.attr_changes.is_empty()
    }

    /// Every node touched by the delta: new nodes, endpoints of added or
    /// removed edges and nodes whose attributes changed. Sorted, unique.
    pub fn touched_nodes(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .new_nodes
            .iter()
            .map(|n| n.id)
            .chain(self.edge_adds.iter().flat_map(|&(u, v)| [u, v]))
            .chain(self.edge_removes.iter().flat_map(|&(u, v)| [u, v]))
            .chain(self.attr_changes.iter().map(|(u, _)| *u))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn new_node_ids(&self) -> Vec<NodeId> {
        self.new_nodes.iter().map(|n| n.id).collect()
    }
}

/// Read access shared by the live graph and frozen ego-networks.
pub trait GraphView: Sync {
    fn num_nodes(&self) -> usize;
    fn feature_dim(&self) -> usize;
    /// Sorted, duplicate-free, never contains `v`.
    fn neighbors_of(&self, v: NodeId) -> &[NodeId];
    fn features_of(&self, v: NodeId) -> &[f64];
    fn label_of(&self, v: NodeId) -> Option<u32>;

    fn degree_of(&self, v: NodeId) -> usize {
        self.neighbors_of(v).len()
    }
}

/// Nodes per storage chunk of a [`GraphState`].
const CHUNK_NODES: usize = 1024;

/// Vector split into fixed-size shared chunks. Clones share every chunk;
/// a write copies only the chunk it lands in.
#[derive(Clone, Debug, PartialEq)]
struct ChunkedVec<T> {
    chunk: usize,
    len: usize,
    chunks: Vec<Arc<Vec<T>>>,
}

impl<T: Clone> ChunkedVec<T> {
    fn new(chunk: usize) -> Self {
        ChunkedVec {
            chunk: chunk.max(1),
            len: 0,
            chunks: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.len
    }

    fn get(&self, i: usize) -> &T {
        &self.chunks[i / self.chunk][i % self.chunk]
    }

    fn get_mut(&mut self, i: usize) -> &mut T {
        &mut Arc::make_mut(&mut self.chunks[i / self.chunk])[i % self.chunk]
    }

    /// `len` items from `start`; the range must not cross a chunk boundary.
    fn slice(&self, start: usize, len: usize) -> &[T] {
        if len == 0 {
            return &[];
        }
        let o = start % self.chunk;
        &self.chunks[start / self.chunk][o..o + len]
    }

    fn slice_mut(&mut self, start: usize, len: usize) -> &mut [T] {
        if len == 0 {
            return &mut [];
        }
        let o = start % self.chunk;
        &mut Arc::make_mut(&mut self.chunks[start / self.chunk])[o..o + len]
    }

    fn push(&mut self, x: T) {
        if self.len % self.chunk == 0 {
            self.chunks.push(Arc::new(Vec::with_capacity(self.chunk)));
        }
        Arc::make_mut(self.chunks.last_mut().expect("chunk pushed above")).push(x);
        self.len += 1;
    }

    fn extend_from_slice(&mut self, xs: &[T]) {
        for x in xs {
            self.push(x.clone());
        }
    }
}

/// Materialized attributed graph at one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphState {
    time: Option<u32>,
    dim: usize,
    adjacency: ChunkedVec<Vec<NodeId>>,
    /// Row-major, `dim` values per node; rows never straddle chunks.
    features: ChunkedVec<f64>,
    labels: Vec<Option<u32>>,
    arrival: Vec<u32>,
    edge_count: usize,
}

impl GraphState {
    /// The graph before the first snapshot. The first delta applied must
    /// carry `time == 0`.
    pub fn empty(feature_dim: usize) -> Self {
        GraphState {
            time: None,
            dim: feature_dim,
            adjacency: ChunkedVec::new(CHUNK_NODES),
            features: ChunkedVec::new(CHUNK_NODES * feature_dim),
            labels: Vec::new(),
            arrival: Vec::new(),
            edge_count: 0,
        }
    }

    pub fn time(&self) -> Option<u32> {
        self.time
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_count
    }

    pub fn feature_dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.index() < self.adjacency.len()
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownNode(v))
        }
    }

    pub fn neighbors(&self, v: NodeId) -> Result<&[NodeId]> {
        self.check(v)?;
        Ok(self.adjacency.get(v.index()))
    }

    pub fn degree(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.adjacency.get(v.index()).len())
    }

    pub fn features(&self, v: NodeId) -> Result<&[f64]> {
        self.check(v)?;
        Ok(self.row(v))
    }

    pub fn label(&self, v: NodeId) -> Result<Option<u32>> {
        self.check(v)?;
        Ok(self.labels[v.index()])
    }

    /// Step at which `v` joined the graph.
    pub fn arrival(&self, v: NodeId) -> Result<u32> {
        self.check(v)?;
        Ok(self.arrival[v.index()])
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.contains(u) && self.contains(v) && self.adjacency.get(u.index()).binary_search(&v).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.adjacency.len()).map(NodeId::from)
    }

    /// Number of distinct class labels seen (max label + 1).
    pub fn class_count(&self) -> usize {
        self.labels
            .iter()
            .flatten()
            .max()
            .map_or(0, |&k| k as usize + 1)
    }

    #[inline]
    fn row(&self, v: NodeId) -> &[f64] {
        self.features.slice(v.index() * self.dim, self.dim)
    }

    /// Produces `G^t = G^{t-1} + ΔG^t`. Node additions go first, then edge
    /// additions, edge removals and finally attribute replacements.
    pub fn apply_delta(&self, delta: &SnapshotDelta) -> Result<GraphState> {
        let expected = self.time.map_or(0, |t| t + 1);
        if delta.time != expected {
            return Err(Error::Structural(format!(
                "delta for step {} applied to graph at step {:?}",
                delta.time, self.time
            )));
        }

        let mut next = self.clone();
        next.time = Some(delta.time);

        for node in &delta.new_nodes {
            if node.id.index() != next.adjacency.len() {
                return Err(Error::Structural(format!(
                    "new node {} out of order, next id is {}",
                    node.id,
                    next.adjacency.len()
                )));
            }
            check_row(&node.features, self.dim)?;
            next.adjacency.push(Vec::new());
            next.features.extend_from_slice(&node.features);
            next.labels.push(node.label);
            next.arrival.push(delta.time);
        }

        let mut seen = HashSet::new();
        for &(u, v) in delta.edge_adds.iter().chain(&delta.edge_removes) {
            next.check(u)?;
            next.check(v)?;
            if u == v {
                return Err(Error::Structural(format!("self-loop on {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::Structural(format!("pair ({u}, {v}) repeated in delta")));
            }
        }

        for &(u, v) in &delta.edge_adds {
            next.insert_edge(u, v)?;
        }
        for &(u, v) in &delta.edge_removes {
            next.remove_edge(u, v)?;
        }
        for (v, row) in &delta.attr_changes {
            next.check(*v)?;
            check_row(row, self.dim)?;
            next.features.slice_mut(v.index() * self.dim, self.dim).copy_from_slice(row);
        }
        Ok(next)
    }

    fn insert_edge(&mut self, u: NodeId, v: NodeId) -> Result<()> {
        let pos = match self.adjacency.get(u.index()).binary_search(&v) {
            Ok(_) => return Err(Error::Structural(format!("edge ({u}, {v}) already present"))),
            Err(p) => p,
        };
        self.adjacency.get_mut(u.index()).insert(pos, v);
        let pos = self.adjacency.get(v.index()).binary_search(&u).unwrap_err();
        self.adjacency.get_mut(v.index()).insert(pos, u);
        self.edge_count += 1;
        Ok(())
    }

    fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Result<()> {
        let pos = self
            .adjacency
            .get(u.index())
            .binary_search(&v)
            .map_err(|_| Error::Structural(format!("cannot remove missing edge ({u}, {v})")))?;
        self.adjacency.get_mut(u.index()).remove(pos);
        let pos = self.adjacency.get(v.index()).binary_search(&u).unwrap();
        self.adjacency.get_mut(v.index()).remove(pos);
        self.edge_count -= 1;
        Ok(())
    }

    /// Nodes within `depth` hops of any seed, seeds included. Sorted.
    pub fn l_hop_set(&self, seeds: &[NodeId], depth: usize) -> Result<Vec<NodeId>> {
        for &s in seeds {
            self.check(s)?;
        }
        Ok(l_hop(self, seeds, depth))
    }

    /// Copies the `depth`-hop neighborhood of a labeled node.
    pub fn freeze_ego(&self, v: NodeId, depth: usize) -> Result<EgoNet> {
        self.check(v)?;
        let label = self.labels[v.index()].ok_or(Error::Unlabeled(v))?;
        let nodes = l_hop(self, &[v], depth);
        // `nodes` is sorted, so local order preserves the global neighbor order.
        let local = |g: NodeId| NodeId::from(nodes.binary_search(&g).unwrap());
        let mut adjacency = Vec::with_capacity(nodes.len());
        let mut features = Vec::with_capacity(nodes.len() * self.dim);
        let mut labels = Vec::with_capacity(nodes.len());
        for &g in &nodes {
            adjacency.push(
                self.adjacency
                    .get(g.index())
                    .iter()
                    .filter(|u| nodes.binary_search(u).is_ok())
                    .map(|&u| local(u))
                    .collect(),
            );
            features.extend_from_slice(self.row(g));
            labels.push(self.labels[g.index()]);
        }
        Ok(EgoNet {
            center: local(v),
            center_global: v,
            depth,
            label,
            dim: self.dim,
            global_ids: nodes,
            adjacency,
            features,
            labels,
        })
    }
}

fn check_row(row: &[f64], dim: usize) -> Result<()> {
    if row.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: row.len(),
        });
    }
    if row.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::Structural("feature value outside [0, 1]".into()));
    }
    Ok(())
}

/// Breadth-first expansion over any view; ids are not validated.
pub(crate) fn l_hop<G: GraphView + ?Sized>(g: &G, seeds: &[NodeId], depth: usize) -> Vec<NodeId> {
    let mut seen = vec![false; g.num_nodes()];
    let mut out = Vec::new();
    let mut frontier = Vec::new();
    for &s in seeds {
        if !seen[s.index()] {
            seen[s.index()] = true;
            out.push(s);
            frontier.push(s);
        }
    }
    for _ in 0..depth {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in g.neighbors_of(u) {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    out.push(w);
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out.sort_unstable();
    out
}

impl GraphView for GraphState {
    fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }
    fn feature_dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn neighbors_of(&self, v: NodeId) -> &[NodeId] {
        self.adjacency.get(v.index())
    }
    #[inline]
    fn features_of(&self, v: NodeId) -> &[f64] {
        self.row(v)
    }
    fn label_of(&self, v: NodeId) -> Option<u32> {
        self.labels[v.index()]
    }
}

/// Immutable copy of a labeled node's neighborhood at freeze time.
#[derive(Clone, Debug, PartialEq)]
pub struct EgoNet {
    center: NodeId,
    center_global: NodeId,
    depth: usize,
    label: u32,
    dim: usize,
    global_ids: Vec<NodeId>,
    adjacency: Vec<Vec<NodeId>>,
    features: Vec<f64>,
    labels: Vec<Option<u32>>,
}

impl EgoNet {
    /// Center in the ego's local id space.
    pub fn center(&self) -> NodeId {
        self.center
    }

    /// Center in the id space of the graph it was frozen from.
    pub fn center_global(&self) -> NodeId {
        self.center_global
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn label(&self) -> u32 {
        self.label
    }

    pub fn global_ids(&self) -> &[NodeId] {
        &self.global_ids
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

impl GraphView for EgoNet {
    fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }
    fn feature_dim(&self) -> usize {
        self.dim
    }
    #[inline]
    fn neighbors_of(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v.index()]
    }
    #[inline]
    fn features_of(&self, v: NodeId) -> &[f64] {
        let i = v.index() * self.dim;
        &self.features[i..i + self.dim]
    }
    fn label_of(&self, v: NodeId) -> Option<u32> {
        self.labels[v.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nodes(start: u32, count: u32, dim: usize, label: Option<u32>) -> Vec<NewNode> {
        (start..start + count)
            .map(|i| NewNode {
                id: NodeId(i),
                features: vec![0.5; dim],
                label,
            })
            .collect()
    }

    fn e(u: u32, v: u32) -> (NodeId, NodeId) {
        (NodeId(u), NodeId(v))
    }

    fn build(n: u32, edges: &[(u32, u32)]) -> GraphState {
        let delta = SnapshotDelta {
            time: 0,
            new_nodes: nodes(0, n, 2, Some(0)),
            edge_adds: edges.iter().map(|&(u, v)| e(u, v)).collect(),
            ..Default::default()
        };
        GraphState::empty(2).apply_delta(&delta).unwrap()
    }

    fn recount(g: &GraphState) -> usize {
        let mut pairs = HashSet::new();
        for u in g.nodes() {
            for &v in g.neighbors(u).unwrap() {
                pairs.insert((u.min(v), u.max(v)));
            }
        }
        pairs.len()
    }

    proptest::proptest! {
        #[test]
        fn chunked_vec_behaves_like_vec(
            pushes in proptest::collection::vec(0u32..1000, 0..60),
            writes in proptest::collection::vec((0usize..60, 0u32..1000), 0..20),
            chunk in 1usize..8,
        ) {
            let mut model = pushes.clone();
            let mut v = ChunkedVec::new(chunk);
            for &x in &pushes {
                v.push(x);
            }
            let before = v.clone();
            for &(i, x) in &writes {
                if i < model.len() {
                    model[i] = x;
                    *v.get_mut(i) = x;
                }
            }
            proptest::prop_assert_eq!(v.len(), model.len());
            for (i, x) in model.iter().enumerate() {
                proptest::prop_assert_eq!(v.get(i), x);
                proptest::prop_assert_eq!(before.get(i), &pushes[i]);
            }
        }
    }

    #[test]
    fn clones_share_untouched_storage() {
        let g = build(3000, &[(0, 1)]);
        let h = g.apply_delta(&SnapshotDelta {
            time: 1,
            edge_adds: vec![(NodeId(2), NodeId(2999))],
            ..Default::default()
        })
        .unwrap();
        let shared = |a: &ChunkedVec<Vec<NodeId>>, b: &ChunkedVec<Vec<NodeId>>| {
            a.chunks.iter().zip(&b.chunks).filter(|(x, y)| Arc::ptr_eq(x, y)).count()
        };
        assert_eq!(g.adjacency.chunks.len(), 3);
        assert_eq!(shared(&g.adjacency, &h.adjacency), 1);
        assert_eq!(g.neighbors(NodeId(2)).unwrap(), &[] as &[NodeId]);
        assert_eq!(h.neighbors(NodeId(2999)).unwrap(), &[NodeId(2)]);
    }

    #[test]
    fn empty_delta_only_advances_time() {
        let g = build(3, &[(0, 1)]);
        let h = g.apply_delta(&SnapshotDelta::empty(1)).unwrap();
        assert_eq!(h.time(), Some(1));
        assert_eq!(h.adjacency, g.adjacency);
        assert_eq!(h.features, g.features);
    }

    #[test]
    fn single_edge_is_symmetric() {
        let g = build(2, &[(0, 1)]);
        assert_eq!(g.degree(NodeId(0)).unwrap(), 1);
        assert_eq!(g.degree(NodeId(1)).unwrap(), 1);
        assert_eq!(g.neighbors(NodeId(0)).unwrap(), &[NodeId(1)]);
        assert_eq!(g.neighbors(NodeId(1)).unwrap(), &[NodeId(0)]);
    }

    #[test]
    fn replayed_deltas_match_recount() {
        let g0 = build(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        assert_eq!(g0.num_edges(), recount(&g0));
        let d1 = SnapshotDelta {
            time: 1,
            new_nodes: nodes(6, 2, 2, None),
            edge_adds: vec![e(6, 0), e(7, 1), e(5, 0)],
            ..Default::default()
        };
        let g1 = g0.apply_delta(&d1).unwrap();
        assert_eq!(g1.num_edges(), recount(&g1));
        let d2 = SnapshotDelta {
            time: 2,
            edge_adds: vec![e(6, 7), e(2, 5)],
            edge_removes: vec![e(3, 4)],
            ..Default::default()
        };
        let g2 = g1.apply_delta(&d2).unwrap();
        assert_eq!(recount(&g2), 9);
        assert_eq!(g2.num_edges(), 9);
        assert!(!g2.has_edge(NodeId(4), NodeId(3)));
    }

    #[test]
    fn structural_errors_fail_fast() {
        let g = build(3, &[(0, 1)]);
        let remove_missing = SnapshotDelta {
            time: 1,
            edge_removes: vec![e(1, 2)],
            ..Default::default()
        };
        assert!(matches!(g.apply_delta(&remove_missing), Err(Error::Structural(_))));
        let unknown = SnapshotDelta {
            time: 1,
            edge_adds: vec![e(1, 9)],
            ..Default::default()
        };
        assert!(matches!(g.apply_delta(&unknown), Err(Error::UnknownNode(NodeId(9)))));
        let wrong_time = SnapshotDelta::empty(5);
        assert!(g.apply_delta(&wrong_time).is_err());
        let dup = SnapshotDelta {
            time: 1,
            edge_adds: vec![e(1, 2), e(2, 1)],
            ..Default::default()
        };
        assert!(g.apply_delta(&dup).is_err());
        let self_loop = SnapshotDelta {
            time: 1,
            edge_adds: vec![e(2, 2)],
            ..Default::default()
        };
        assert!(g.apply_delta(&self_loop).is_err());
        let bad_dim = SnapshotDelta {
            time: 1,
            attr_changes: vec![(NodeId(0), vec![0.1])],
            ..Default::default()
        };
        assert!(matches!(g.apply_delta(&bad_dim), Err(Error::Dimension { .. })));
    }

    #[test]
    fn attr_changes_replace_rows_after_structure() {
        let g = build(2, &[]);
        let d = SnapshotDelta {
            time: 1,
            new_nodes: nodes(2, 1, 2, Some(1)),
            edge_adds: vec![e(2, 0)],
            attr_changes: vec![(NodeId(2), vec![0.25, 1.0])],
            ..Default::default()
        };
        let h = g.apply_delta(&d).unwrap();
        assert_eq!(h.features(NodeId(2)).unwrap(), &[0.25, 1.0]);
        assert_eq!(h.arrival(NodeId(2)).unwrap(), 1);
    }

    #[test]
    fn neighbor_queries() {
        let g = build(4, &[(0, 1), (1, 2), (2, 0)]);
        assert!(g.neighbors(NodeId(3)).unwrap().is_empty());
        assert_eq!(g.neighbors(NodeId(0)).unwrap(), &[NodeId(1), NodeId(2)]);
        assert!(matches!(g.neighbors(NodeId(4)), Err(Error::UnknownNode(_))));
    }

    fn random_graph(n: u32, p: f64, seed: u64) -> (GraphState, Vec<Vec<bool>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dense = vec![vec![false; n as usize]; n as usize];
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    dense[u as usize][v as usize] = true;
                    dense[v as usize][u as usize] = true;
                    edges.push((v, u));
                }
            }
        }
        (build(n, &edges), dense)
    }

    #[test]
    fn neighbors_match_dense_rows() {
        let (g, dense) = random_graph(100, 0.05, 11);
        for u in 0..100usize {
            let want: Vec<NodeId> = (0..100).filter(|&v| dense[u][v]).map(NodeId::from).collect();
            assert_eq!(g.neighbors(NodeId::from(u)).unwrap(), want.as_slice());
        }
    }

    #[test]
    fn l_hop_cases() {
        let path = build(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(
            path.l_hop_set(&[NodeId(0)], 2).unwrap(),
            vec![NodeId(0), NodeId(1), NodeId(2)]
        );
        assert_eq!(path.l_hop_set(&[NodeId(3), NodeId(1)], 0).unwrap(), vec![NodeId(1), NodeId(3)]);
        assert!(path.l_hop_set(&[NodeId(7)], 1).is_err());
    }

    #[test]
    fn l_hop_matches_all_pairs_distances() {
        let (g, dense) = random_graph(60, 0.04, 5);
        let n = 60;
        // Floyd–Warshall hop distances.
        let inf = usize::MAX / 4;
        let mut dist = vec![vec![inf; n]; n];
        for u in 0..n {
            dist[u][u] = 0;
            for v in 0..n {
                if dense[u][v] {
                    dist[u][v] = 1;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if dist[i][k] + dist[k][j] < dist[i][j] {
                        dist[i][j] = dist[i][k] + dist[k][j];
                    }
                }
            }
        }
        let seeds = [NodeId(3), NodeId(17), NodeId(40)];
        for depth in 0..4 {
            let want: Vec<NodeId> = (0..n)
                .filter(|&u| seeds.iter().any(|s| dist[s.index()][u] <= depth))
                .map(NodeId::from)
                .collect();
            assert_eq!(g.l_hop_set(&seeds, depth).unwrap(), want);
        }
    }

    #[test]
    fn ego_shapes() {
        let g = build(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        let star = g.freeze_ego(NodeId(0), 1).unwrap();
        assert_eq!(star.num_nodes(), 5);
        assert_eq!(star.num_edges(), 4);

        let lone = build(1, &[]).freeze_ego(NodeId(0), 2).unwrap();
        assert_eq!(lone.num_nodes(), 1);
        assert_eq!(lone.num_edges(), 0);

        let leaf = g.freeze_ego(NodeId(3), 1).unwrap();
        assert_eq!(leaf.global_ids(), &[NodeId(0), NodeId(3)]);
        assert_eq!(leaf.center(), NodeId(1));
        assert_eq!(leaf.neighbors_of(leaf.center()), &[NodeId(0)]);
    }

    #[test]
    fn ego_requires_label() {
        let g = GraphState::empty(1)
            .apply_delta(&SnapshotDelta {
                time: 0,
                new_nodes: vec![NewNode {
                    id: NodeId(0),
                    features: vec![0.0],
                    label: None,
                }],
                ..Default::default()
            })
            .unwrap();
        assert!(matches!(g.freeze_ego(NodeId(0), 1), Err(Error::Unlabeled(_))));
    }
}
