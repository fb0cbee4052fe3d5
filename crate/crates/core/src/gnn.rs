//! Mean-aggregator GNN: sampled forward pass with a backprop trace,
//! cross-entropy loss, exact gradients and plain SGD.
//!
//! Layer `l` computes `h_v = σ(W_l · mean({h_v} ∪ {h_u : u ∈ S(v)}))` where
//! `S(v)` is a uniform sample (without replacement) of at most `fanout[l-1]`
//! neighbors. Hidden layers use the configured activation, the last layer
//! emits class logits directly.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphView, NodeId};
use crate::linalg::Matrix;

/// Fanout value meaning "use every neighbor".
pub const FULL_FANOUT: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }

    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Layer weights `W_1 … W_L`. `W_l` has shape `(out, in)`: `d → h` for the
/// first layer, `h → h` in the middle and `h → C` for the last.
#[derive(Clone, Debug, PartialEq)]
pub struct GnnParams {
    weights: Vec<Matrix>,
    activation: Activation,
}

/// Same shapes as [`GnnParams`]; used for gradients, Fisher diagonals and
/// parameter deltas alike.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients(pub Vec<Matrix>);

impl GnnParams {
    /// Glorot-uniform initialization in `±sqrt(6 / (fan_in + fan_out))`.
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: usize,
        classes: usize,
        layers: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(layers >= 1, "a GNN needs at least one layer");
        let weights = (0..layers)
            .map(|l| {
                let fan_in = if l == 0 { input_dim } else { hidden };
                let fan_out = if l + 1 == layers { classes } else { hidden };
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-bound..=bound))
                    .collect();
                Matrix::from_vec(fan_out, fan_in, data)
            })
            .collect();
        GnnParams { weights, activation }
    }

    pub fn from_weights(weights: Vec<Matrix>, activation: Activation) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("no layers".into()));
        }
        for pair in weights.windows(2) {
            if pair[1].cols() != pair[0].rows() {
                return Err(Error::Dimension {
                    expected: pair[0].rows(),
                    got: pair[1].cols(),
                });
            }
        }
        if weights.iter().any(|w| w.as_slice().iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("weights"));
        }
        Ok(GnnParams { weights, activation })
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].cols()
    }

    pub fn class_count(&self) -> usize {
        self.weights.last().unwrap().rows()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.as_slice().len()).sum()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().flat_map(|w| w.as_slice().iter().copied())
    }

    /// Appends zero-initialized classifier rows for newly seen classes.
    pub fn grow_classes(&mut self, classes: usize) {
        self.weights.last_mut().unwrap().grow_rows(classes);
    }

    /// Activation-free product `W_L ⋯ W_1`, shape `(C, d)`.
    pub fn surrogate(&self) -> Matrix {
        let mut acc = self.weights[0].clone();
        for w in &self.weights[1..] {
            acc = w.matmul(&acc);
        }
        acc
    }

    pub fn same_shape(&self, grads: &Gradients) -> bool {
        self.weights.len() == grads.0.len()
            && self.weights.iter().zip(&grads.0).all(|(w, g)| w.shape() == g.shape())
    }

    /// `W ← W − lr·G`, in place.
    pub fn apply_sgd(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        if !self.same_shape(grads) {
            return Err(Error::Dimension {
                expected: self.num_params(),
                got: grads.len(),
            });
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        for (w, g) in self.weights.iter_mut().zip(&grads.0) {
            for (wi, gi) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
                *wi -= lr * gi;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(f)
    }

    /// Text checkpoint:
    ///
    /// ```text
    /// cgnn-checkpoint 1
    /// activation relu
    /// layers 2
    /// matrix <rows> <cols>
    /// <one line per row, space separated>
    /// ...
    /// ```
    ///
    /// Values use Rust's shortest round-trip float formatting, so a
    /// save/load cycle is lossless.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cgnn-checkpoint 1")?;
        writeln!(w, "activation {}", self.activation.name())?;
        writeln!(w, "layers {}", self.weights.len())?;
        for m in &self.weights {
            writeln!(w, "matrix {} {}", m.rows(), m.cols())?;
            for r in 0..m.rows() {
                let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut lines = r.lines();
        let mut next = move || -> Result<String> {
            lines.next().ok_or_else(|| bad("unexpected end of file"))?.map_err(Error::from)
        };
        if next()?.trim() != "cgnn-checkpoint 1" {
            return Err(bad("missing header or unsupported version"));
        }
        let activation = next()?
            .strip_prefix("activation ")
            .ok_or_else(|| bad("expected activation line"))?
            .trim()
            .parse()?;
        let layers: usize = next()?
            .strip_prefix("layers ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("expected layers line"))?;
        let mut weights = Vec::with_capacity(layers);
        for _ in 0..layers {
            let header = next()?;
            let dims: Vec<usize> = header
                .strip_prefix("matrix ")
                .ok_or_else(|| bad("expected matrix line"))?
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad matrix shape")))
                .collect::<Result<_>>()?;
            let [rows, cols] = dims[..] else {
                return Err(bad("bad matrix shape"));
            };
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let line = next()?;
                let before = data.len();
                for t in line.split_whitespace() {
                    data.push(t.parse::<f64>().map_err(|_| bad("bad weight value"))?);
                }
                if data.len() - before != cols {
                    return Err(bad("row has wrong length"));
                }
            }
            weights.push(Matrix::from_vec(rows, cols, data));
        }
        GnnParams::from_weights(weights, activation)
    }
}

impl Gradients {
    pub fn zeros_like(params: &GnnParams) -> Self {
        Gradients(params.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect())
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|m| m.as_slice().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|m| m.as_slice().iter().all(|x| x.is_finite()))
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            crate::linalg::axpy(scale, b.as_slice(), a.as_mut_slice());
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().flat_map(|w| w.as_slice().iter().copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.0.iter_mut().flat_map(|w| w.as_mut_slice().iter_mut())
    }
}

/// Returns `params − lr·grads`.
pub fn sgd_step(params: &GnnParams, grads: &Gradients, lr: f64) -> Result<GnnParams> {
    let mut next = params.clone();
    next.apply_sgd(grads, lr)?;
    Ok(next)
}

/// One labeled node to train on, together with the graph it is read from.
#[derive(Clone, Copy)]
pub struct TrainItem<'a> {
    pub view: &'a dyn GraphView,
    pub node: NodeId,
    pub label: u32,
}

impl<'a> TrainItem<'a> {
    pub fn from_view(view: &'a dyn GraphView, node: NodeId) -> Result<Self> {
        if node.index() >= view.num_nodes() {
            return Err(Error::UnknownNode(node));
        }
        let label = view.label_of(node).ok_or(Error::Unlabeled(node))?;
        Ok(TrainItem { view, node, label })
    }
}

impl std::fmt::Debug for TrainItem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TrainItem")
            .field("node", &self.node)
            .field("label", &self.label)
            .finish()
    }
}

#[derive(Clone, Debug, Default)]
struct TraceLayer {
    nodes: Vec<NodeId>,
    /// CSR offsets into `sources`, one range per node.
    offsets: Vec<u32>,
    /// Indices into the previous layer; each range starts with the node itself.
    sources: Vec<u32>,
    agg: Vec<f64>,
    pre: Vec<f64>,
    post: Vec<f64>,
}

impl TraceLayer {
    fn sources_of(&self, j: usize) -> &[u32] {
        &self.sources[self.offsets[j] as usize..self.offsets[j + 1] as usize]
    }
}

/// Everything backprop needs: the sampled computation graph and every
/// intermediate vector. `layers[0]` holds input features.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    layers: Vec<TraceLayer>,
}

impl ForwardTrace {
    /// Sampled neighbors (view-local ids) used by `node` at `layer` (1-based),
    /// or `None` if the node was not computed at that layer.
    pub fn sampled_neighbors(&self, layer: usize, node: NodeId) -> Option<Vec<NodeId>> {
        let l = self.layers.get(layer)?;
        let j = l.nodes.iter().position(|&n| n == node)?;
        let prev = &self.layers[layer - 1];
        Some(l.sources_of(j)[1..].iter().map(|&s| prev.nodes[s as usize]).collect())
    }

    pub fn logits(&self) -> &[f64] {
        &self.layers.last().unwrap().post
    }

    /// Nodes visited at `layer` (0 = inputs).
    pub fn nodes_at(&self, layer: usize) -> &[NodeId] {
        &self.layers[layer].nodes
    }
}

fn check_fanout(params: &GnnParams, fanout: &[usize]) -> Result<()> {
    if fanout.len() != params.layer_count() {
        return Err(Error::Dimension {
            expected: params.layer_count(),
            got: fanout.len(),
        });
    }
    if fanout.contains(&0) {
        return Err(Error::Config("fanout must be at least 1".into()));
    }
    Ok(())
}

fn sample_neighbors<R: Rng + ?Sized>(
    nbrs: &[NodeId],
    fanout: usize,
    rng: &mut R,
    out: &mut Vec<NodeId>,
) {
    out.clear();
    if nbrs.len() <= fanout {
        out.extend_from_slice(nbrs);
    } else {
        let mut idx = rand::seq::index::sample(rng, nbrs.len(), fanout).into_vec();
        idx.sort_unstable();
        out.extend(idx.into_iter().map(|i| nbrs[i]));
    }
}

/// Mean of `rows` (self first) into `out`. Shared by the sampled and the
/// full-neighborhood paths so both round identically.
#[inline]
fn mean_rows<'r>(out: &mut [f64], mut rows: impl Iterator<Item = &'r [f64]>) {
    let first = rows.next().expect("mean over empty set");
    out.copy_from_slice(first);
    let mut count = 1usize;
    for r in rows {
        for (o, &x) in out.iter_mut().zip(r) {
            *o += x;
        }
        count += 1;
    }
    let denom = count as f64;
    for o in out.iter_mut() {
        *o /= denom;
    }
}

fn apply_layer(
    w: &Matrix,
    activation: Option<Activation>,
    agg: &[f64],
    pre: &mut [f64],
    post: &mut [f64],
) {
    w.matvec(agg, pre);
    match activation {
        Some(act) => {
            for (p, &z) in post.iter_mut().zip(pre.iter()) {
                *p = act.apply(z);
            }
        }
        None => post.copy_from_slice(pre),
    }
}

/// Sampled forward pass for one node. Returns the logits `h_v^L` and the
/// trace needed for backprop.
pub fn forward<G: GraphView + ?Sized, R: Rng + ?Sized>(
    params: &GnnParams,
    view: &G,
    v: NodeId,
    fanout: &[usize],
    rng: &mut R,
) -> Result<(Vec<f64>, ForwardTrace)> {
    check_fanout(params, fanout)?;
    if v.index() >= view.num_nodes() {
        return Err(Error::UnknownNode(v));
    }
    if view.feature_dim() != params.input_dim() {
        return Err(Error::Dimension {
            expected: params.input_dim(),
            got: view.feature_dim(),
        });
    }
    let depth = params.layer_count();
    let mut layers = vec![TraceLayer::default(); depth + 1];
    layers[depth].nodes.push(v);

    // Top-down sampling of the computation graph.
    let mut sample = Vec::new();
    for l in (1..=depth).rev() {
        let (lower, upper) = layers.split_at_mut(l);
        let (prev, cur) = (&mut lower[l - 1], &mut upper[0]);
        let mut pos: HashMap<NodeId, u32> = HashMap::with_capacity(cur.nodes.len() * 4);
        for &u in &cur.nodes {
            pos.entry(u).or_insert_with(|| {
                prev.nodes.push(u);
                (prev.nodes.len() - 1) as u32
            });
        }
        cur.offsets.push(0);
        for &u in &cur.nodes {
            cur.sources.push(pos[&u]);
            sample_neighbors(view.neighbors_of(u), fanout[l - 1], rng, &mut sample);
            for &s in &sample {
                let idx = *pos.entry(s).or_insert_with(|| {
                    prev.nodes.push(s);
                    (prev.nodes.len() - 1) as u32
                });
                cur.sources.push(idx);
            }
            cur.offsets.push(cur.sources.len() as u32);
        }
    }

    let dim = view.feature_dim();
    let inputs = &mut layers[0];
    inputs.post.reserve(inputs.nodes.len() * dim);
    for &u in &inputs.nodes {
        inputs.post.extend_from_slice(view.features_of(u));
    }

    for l in 1..=depth {
        let w = &params.weights[l - 1];
        let act = (l < depth).then_some(params.activation);
        let (lower, upper) = layers.split_at_mut(l);
        let (prev, cur) = (&lower[l - 1], &mut upper[0]);
        let (din, dout) = (w.cols(), w.rows());
        let n = cur.nodes.len();
        cur.agg = vec![0.0; n * din];
        cur.pre = vec![0.0; n * dout];
        cur.post = vec![0.0; n * dout];
        for j in 0..n {
            let srcs = &cur.sources[cur.offsets[j] as usize..cur.offsets[j + 1] as usize];
            let agg = &mut cur.agg[j * din..(j + 1) * din];
            mean_rows(
                agg,
                srcs.iter().map(|&s| &prev.post[s as usize * din..(s as usize + 1) * din]),
            );
            apply_layer(
                w,
                act,
                agg,
                &mut cur.pre[j * dout..(j + 1) * dout],
                &mut cur.post[j * dout..(j + 1) * dout],
            );
        }
    }
    let trace = ForwardTrace { layers };
    Ok((trace.logits().to_vec(), trace))
}

/// Accumulates `∂/∂W` of a loss whose gradient w.r.t. the logits is
/// `dlogits` into `grads`.
pub fn backward(params: &GnnParams, trace: &ForwardTrace, dlogits: &[f64], grads: &mut Gradients) {
    let depth = params.layer_count();
    let mut delta = dlogits.to_vec();
    for l in (1..=depth).rev() {
        let w = &params.weights[l - 1];
        let layer = &trace.layers[l];
        let (din, dout) = (w.cols(), w.rows());
        let g = &mut grads.0[l - 1];
        for j in 0..layer.nodes.len() {
            g.add_outer(&delta[j * dout..(j + 1) * dout], &layer.agg[j * din..(j + 1) * din]);
        }
        if l == 1 {
            break;
        }
        let prev = &trace.layers[l - 1];
        let mut prev_delta = vec![0.0; prev.nodes.len() * din];
        let mut dagg = vec![0.0; din];
        for j in 0..layer.nodes.len() {
            dagg.iter_mut().for_each(|x| *x = 0.0);
            w.matvec_t_add(&delta[j * dout..(j + 1) * dout], &mut dagg);
            let srcs = layer.sources_of(j);
            let share = 1.0 / srcs.len() as f64;
            for &s in srcs {
                let pd = &mut prev_delta[s as usize * din..(s as usize + 1) * din];
                for (p, &d) in pd.iter_mut().zip(&dagg) {
                    *p += d * share;
                }
            }
        }
        let act = params.activation;
        for (d, &z) in prev_delta.iter_mut().zip(&prev.pre) {
            *d *= act.derivative(z);
        }
        delta = prev_delta;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `−log softmax(logits)[label]`, computed stably.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

pub fn predict<G: GraphView + ?Sized, R: Rng + ?Sized>(
    params: &GnnParams,
    view: &G,
    v: NodeId,
    fanout: &[usize],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (logits, _) = forward(params, view, v, fanout, rng)?;
    Ok(softmax(&logits))
}

fn batch_loss<R: Rng + ?Sized>(
    params: &GnnParams,
    batch: &[TrainItem<'_>],
    fanout: &[usize],
    rng: &mut R,
    mut grads: Option<&mut Gradients>,
) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let classes = params.class_count();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for item in batch {
        if item.label as usize >= classes {
            return Err(Error::Dimension {
                expected: classes,
                got: item.label as usize + 1,
            });
        }
        let (logits, trace) = forward(params, item.view, item.node, fanout, rng)?;
        total += cross_entropy(&logits, item.label as usize);
        if let Some(g) = grads.as_deref_mut() {
            let mut d = softmax(&logits);
            d[item.label as usize] -= 1.0;
            d.iter_mut().for_each(|x| *x *= scale);
            backward(params, &trace, &d, g);
        }
    }
    Ok(total * scale)
}

/// Mean cross-entropy over the batch and its exact gradient for the sampled
/// computation graphs drawn from `rng`. An empty batch yields zero loss and
/// zero gradient.
pub fn loss_and_grad<R: Rng + ?Sized>(
    params: &GnnParams,
    batch: &[TrainItem<'_>],
    fanout: &[usize],
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    let mut grads = Gradients::zeros_like(params);
    let loss = batch_loss(params, batch, fanout, rng, Some(&mut grads))?;
    Ok((loss, grads))
}

/// Same sampling and loss as [`loss_and_grad`] without the backward pass.
pub fn loss_only<R: Rng + ?Sized>(
    params: &GnnParams,
    batch: &[TrainItem<'_>],
    fanout: &[usize],
    rng: &mut R,
) -> Result<f64> {
    batch_loss(params, batch, fanout, rng, None)
}

/// Deterministic full-neighborhood representations `h^depth` for `targets`.
/// Rows follow `targets`. `depth == layer_count` yields logits.
///
/// Only the receptive field of `targets` is evaluated.
pub fn embed<G: GraphView + ?Sized>(
    params: &GnnParams,
    view: &G,
    targets: &[NodeId],
    depth: usize,
) -> Matrix {
    assert!(depth <= params.layer_count());
    if depth == 0 {
        let mut out = Matrix::zeros(targets.len(), view.feature_dim());
        for (i, &t) in targets.iter().enumerate() {
            out.row_mut(i).copy_from_slice(view.features_of(t));
        }
        return out;
    }

    // needed[l] = nodes whose h^l must be computed.
    let mut needed: Vec<Vec<NodeId>> = vec![Vec::new(); depth + 1];
    let mut index: Vec<HashMap<NodeId, u32>> = vec![HashMap::new(); depth + 1];
    for &t in targets {
        let next = needed[depth].len() as u32;
        if let std::collections::hash_map::Entry::Vacant(e) = index[depth].entry(t) {
            e.insert(next);
            needed[depth].push(t);
        }
    }
    for l in (1..=depth).rev() {
        let (lo, hi) = needed.split_at_mut(l);
        let (ilo, _) = index.split_at_mut(l);
        for &u in &hi[0] {
            for &w in std::iter::once(&u).chain(view.neighbors_of(u)) {
                let next = lo[l - 1].len() as u32;
                if let std::collections::hash_map::Entry::Vacant(e) = ilo[l - 1].entry(w) {
                    e.insert(next);
                    lo[l - 1].push(w);
                }
            }
        }
    }

    let dim = view.feature_dim();
    let mut below = Matrix::zeros(needed[0].len(), dim);
    for (i, &u) in needed[0].iter().enumerate() {
        below.row_mut(i).copy_from_slice(view.features_of(u));
    }
    for l in 1..=depth {
        let w = &params.weights[l - 1];
        let act = (l < params.layer_count()).then_some(params.activation);
        let mut cur = Matrix::zeros(needed[l].len(), w.rows());
        let mut agg = vec![0.0; w.cols()];
        let mut pre = vec![0.0; w.rows()];
        for (j, &u) in needed[l].iter().enumerate() {
            let idx = &index[l - 1];
            mean_rows(
                &mut agg,
                std::iter::once(&u)
                    .chain(view.neighbors_of(u))
                    .map(|s| below.row(idx[s] as usize)),
            );
            apply_layer(w, act, &agg, &mut pre, cur.row_mut(j));
        }
        below = cur;
    }

    let mut out = Matrix::zeros(targets.len(), below.cols());
    for (i, t) in targets.iter().enumerate() {
        out.row_mut(i).copy_from_slice(below.row(index[depth][t] as usize));
    }
    out
}

/// Full-neighborhood logits for every node in the view.
pub fn embed_all<G: GraphView + ?Sized>(params: &GnnParams, view: &G) -> Matrix {
    let all: Vec<NodeId> = (0..view.num_nodes()).map(NodeId::from).collect();
    embed(params, view, &all, params.layer_count())
}

/// Max relative error between `analytic` and central finite differences of
/// the batch loss. Every loss evaluation reseeds its rng from `seed`, so all
/// evaluations see the same neighbor samples as the analytic pass did.
pub fn grad_check_against(
    params: &GnnParams,
    batch: &[TrainItem<'_>],
    fanout: &[usize],
    seed: u64,
    eps: f64,
    analytic: &Gradients,
) -> Result<f64> {
    use rand::SeedableRng;
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for l in 0..params.layer_count() {
        for i in 0..params.weights[l].as_slice().len() {
            let orig = params.weights[l].as_slice()[i];
            probe.weights[l].as_mut_slice()[i] = orig + eps;
            let up = loss_only(&probe, batch, fanout, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))?;
            probe.weights[l].as_mut_slice()[i] = orig - eps;
            let down =
                loss_only(&probe, batch, fanout, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))?;
            probe.weights[l].as_mut_slice()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic.0[l].as_slice()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

/// Checks [`loss_and_grad`] against symmetric finite differences.
pub fn grad_check(
    params: &GnnParams,
    batch: &[TrainItem<'_>],
    fanout: &[usize],
    seed: u64,
    eps: f64,
) -> Result<f64> {
    use rand::SeedableRng;
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::Config(format!("finite-difference step {eps} outside (0, 1e-3]")));
    }
    let (_, analytic) =
        loss_and_grad(params, batch, fanout, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed))?;
    grad_check_against(params, batch, fanout, seed, eps, &analytic)
}
