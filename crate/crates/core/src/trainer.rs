//! Per-step training: the continual learner and the four baselines.
//!
//! Every step the learner materializes the new snapshot, picks the nodes to
//! train on and runs `epochs` passes of shuffled minibatch SGD. The continual
//! learner minimizes
//!
//! `(1/|M ∪ I|) Σ_{v ∈ M ∪ I} l(θ; v) + λ Σ_i F_i (θ_i − θ*_i)²`
//!
//! where `I` is the influenced set of the step, `M` the replay memory and
//! `F` the Fisher diagonal estimated from `M` at the start of the step.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consolidation::{ewc_penalty, fisher_from_items, penalized_step, FisherDiag, RegularizerKind};
use crate::detection::{detect, Detector, Propagation, ThresholdRule};
use crate::error::{Error, Result};
use crate::gnn::{cross_entropy, embed, loss_and_grad, Activation, GnnParams, Gradients, TrainItem};
use crate::graph::{GraphState, GraphView, NodeId, SnapshotDelta};
use crate::memory::{Memory, MemoryStrategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Continual,
    Pretrained,
    Online,
    Single,
    Retrained,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Continual,
        ModelKind::Pretrained,
        ModelKind::Online,
        ModelKind::Single,
        ModelKind::Retrained,
    ];
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continual" => Ok(ModelKind::Continual),
            "pretrained" => Ok(ModelKind::Pretrained),
            "online" => Ok(ModelKind::Online),
            "single" => Ok(ModelKind::Single),
            "retrained" => Ok(ModelKind::Retrained),
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Continual => "continual",
            ModelKind::Pretrained => "pretrained",
            ModelKind::Online => "online",
            ModelKind::Single => "single",
            ModelKind::Retrained => "retrained",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    /// Heavy-ball coefficient; 0 is plain SGD. Velocity resets every step.
    pub momentum: f64,
    /// Learning rate of the last epoch of a step as a fraction of `lr`;
    /// epochs in between decay linearly. 1 keeps the rate constant.
    pub lr_floor: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Neighbors sampled per layer during training.
    pub fanout: usize,
    pub hidden: usize,
    pub layers: usize,
    pub activation: Activation,
    pub lambda: f64,
    pub regularizer: RegularizerKind,
    pub memory_size: usize,
    /// Replay memory entries in the training loss. The memory is kept
    /// either way and still feeds the Fisher estimate.
    pub replay: bool,
    pub memory_strategy: MemoryStrategy,
    pub alpha: f64,
    pub threshold: ThresholdRule,
    pub detector: Detector,
    pub propagation: Propagation,
    /// Online and single models also train on the `L`-hop ball of changed nodes.
    pub online_neighborhood: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            momentum: 0.9,
            lr_floor: 0.05,
            epochs: 20,
            batch_size: 32,
            fanout: 10,
            hidden: 64,
            layers: 2,
            activation: Activation::Relu,
            lambda: 200.0,
            regularizer: RegularizerKind::Ewc,
            memory_size: 250,
            replay: true,
            memory_strategy: MemoryStrategy::Stepwise,
            alpha: 1.0,
            threshold: ThresholdRule::Ratio(0.8),
            detector: Detector::Approx,
            propagation: Propagation::NeighborsOnly,
            online_neighborhood: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Learning rate used in `epoch` of a step.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if self.lr_floor == 1.0 || self.epochs < 2 {
            return self.lr;
        }
        let frac = epoch.min(self.epochs - 1) as f64 / (self.epochs - 1) as f64;
        self.lr * (1.0 - (1.0 - self.lr_floor) * frac)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.lr_floor > 0.0 && self.lr_floor <= 1.0) {
            return bad(format!("lr_floor must lie in (0, 1], got {}", self.lr_floor));
        }
        if self.batch_size == 0 || self.fanout == 0 || self.hidden == 0 || self.layers == 0 {
            return bad("batch_size, fanout, hidden and layers must be positive".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be nonnegative, got {}", self.lambda));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be nonnegative, got {}", self.alpha));
        }
        self.threshold.validate()?;
        Ok(())
    }

    pub fn fanouts(&self) -> Vec<usize> {
        vec![self.fanout; self.layers]
    }

    /// `λ` actually applied: zero without a regularizer.
    pub fn effective_lambda(&self) -> f64 {
        match self.regularizer {
            RegularizerKind::None => 0.0,
            _ => self.lambda,
        }
    }

    fn alpha_for_strategy(&self) -> f64 {
        match self.memory_strategy {
            MemoryStrategy::Stepwise => self.alpha,
            _ => 0.0,
        }
    }
}

/// Loss terms normalized by the number of trained nodes `|M ∪ I|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub new: f64,
    pub data: f64,
    pub model: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: u32,
    pub new_nodes: usize,
    /// `|I(ΔG^t)|` for the continual model, the changed-node count otherwise.
    pub influenced: usize,
    /// Training items per epoch, replay included.
    pub trained: usize,
    pub epoch_loss: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    pub detect_seconds: f64,
    /// Deterministic objective before and after the step's training.
    pub loss_before: LossBreakdown,
    pub loss: LossBreakdown,
    pub checkpoint: Option<PathBuf>,
}

impl StepReport {
    pub fn seconds_per_epoch(&self) -> f64 {
        if self.epoch_seconds.is_empty() {
            0.0
        } else {
            self.epoch_seconds.iter().sum::<f64>() / self.epoch_seconds.len() as f64
        }
    }

    /// Copy with every wall-clock field zeroed, for determinism checks.
    pub fn without_timing(&self) -> StepReport {
        let mut r = self.clone();
        r.epoch_seconds.iter_mut().for_each(|s| *s = 0.0);
        r.detect_seconds = 0.0;
        r
    }
}

/// Sum of `−log p(label)` with full neighborhoods.
fn summed_loss(params: &GnnParams, g: &GraphState, nodes: &[NodeId], mem: Option<&Memory>) -> Result<f64> {
    let mut total = 0.0;
    if !nodes.is_empty() {
        let logits = embed(params, g, nodes, params.layer_count());
        for (i, &v) in nodes.iter().enumerate() {
            let k = g.label(v)?.ok_or(Error::Unlabeled(v))?;
            total += cross_entropy(logits.row(i), k as usize);
        }
    }
    for e in mem.map(Memory::entries).unwrap_or_default() {
        let logits = embed(params, &e.ego, &[e.ego.center()], params.layer_count());
        total += cross_entropy(logits.row(0), e.label as usize);
    }
    Ok(total)
}

/// Deterministic (full-fanout) decomposition of the step objective over the
/// live nodes `nodes` and the memory entries. Every term, the penalty
/// included, is divided by the number of training nodes.
pub fn loss_breakdown(
    params: &GnnParams,
    g: &GraphState,
    nodes: &[NodeId],
    mem: Option<&Memory>,
    fisher: Option<&FisherDiag>,
    lambda: f64,
) -> Result<LossBreakdown> {
    let count = nodes.len() + mem.map_or(0, Memory::len);
    let scale = if count == 0 { 0.0 } else { 1.0 / count as f64 };
    let new = summed_loss(params, g, nodes, None)? * scale;
    let data = summed_loss(params, g, &[], mem)? * scale;
    let model = match fisher {
        Some(f) => ewc_penalty(params, f, lambda)?.0 * scale,
        None => 0.0,
    };
    Ok(LossBreakdown {
        new,
        data,
        model,
        total: new + data + model,
    })
}

/// Shuffled minibatch SGD over `items` for `cfg.epochs` epochs. Returns the
/// per-epoch mean minibatch loss (plus the penalty at epoch end) and the
/// wall time of each epoch.
pub fn train_epochs(
    params: &mut GnnParams,
    items: &[TrainItem<'_>],
    fisher: Option<&FisherDiag>,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut times = Vec::with_capacity(cfg.epochs);
    if items.is_empty() {
        return Ok((losses, times));
    }
    let fanout = cfg.fanouts();
    let lambda = cfg.effective_lambda() / items.len() as f64;
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut velocity = (cfg.momentum > 0.0).then(|| Gradients::zeros_like(params));
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let lr = cfg.lr_at(epoch);
        order.shuffle(rng);
        let mut sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| items[i]));
            let (loss, mut grads) = loss_and_grad(params, &batch, &fanout, rng)?;
            sum += loss * batch.len() as f64;
            if let Some(v) = velocity.as_mut() {
                v.values_mut().for_each(|x| *x *= cfg.momentum);
                v.add_scaled(&grads, 1.0);
                grads = v.clone();
            }
            match fisher {
                Some(f) if lambda > 0.0 => penalized_step(params, &grads, f, lambda, lr)?,
                _ => params.apply_sgd(&grads, lr)?,
            }
        }
        let penalty = match fisher {
            Some(f) => ewc_penalty(params, f, lambda)?.0,
            None => 0.0,
        };
        losses.push(sum / items.len() as f64 + penalty);
        times.push(start.elapsed().as_secs_f64());
    }
    Ok((losses, times))
}

fn trainable_labeled(g: &GraphState, nodes: &[NodeId], trainable: &[bool]) -> Vec<NodeId> {
    nodes
        .iter()
        .copied()
        .filter(|v| trainable.get(v.index()).copied().unwrap_or(false) && g.label_of(*v).is_some())
        .collect()
}

fn live_items<'a>(g: &'a GraphState, nodes: &[NodeId]) -> Result<Vec<TrainItem<'a>>> {
    nodes.iter().map(|&v| TrainItem::from_view(g, v)).collect()
}

/// Random streams used by one learner. Each purpose has its own stream so
/// that, for example, memory sampling never shifts the training samples.
#[derive(Clone, Debug)]
pub struct LearnerRngs {
    pub init: ChaCha8Rng,
    pub train: ChaCha8Rng,
    pub memory: ChaCha8Rng,
    pub fisher: ChaCha8Rng,
}

impl LearnerRngs {
    pub fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        };
        LearnerRngs {
            init: stream(0),
            train: stream(1),
            memory: stream(2),
            fisher: stream(3),
        }
    }
}

/// One continual-learning step from `θ^{t−1}` on `g_prev` with `delta`.
///
/// Order: materialize `G^t`, detect `I(ΔG^t)`, load the replay batch,
/// estimate the Fisher diagonal, train, then offer `I(ΔG^t)` to memory.
/// Only nodes with `trainable[id]` set are trained on or stored.
pub fn continual_step(
    params: &GnnParams,
    mem: &mut Memory,
    g_prev: &GraphState,
    delta: &SnapshotDelta,
    cfg: &TrainConfig,
    trainable: &[bool],
    rngs: &mut LearnerRngs,
) -> Result<(GnnParams, GraphState, StepReport)> {
    let g = g_prev.apply_delta(delta)?;
    let mut params = params.clone();
    let classes = g.class_count();
    if classes > params.class_count() {
        params.grow_classes(classes);
    }

    let detection = detect(cfg.detector, &params, g_prev, &g, delta, cfg.threshold, cfg.propagation)?;
    let live = trainable_labeled(&g, &detection.influenced, trainable);

    let fanout = cfg.fanouts();
    let replay = mem.replay_batch();
    let fisher = match cfg.regularizer {
        RegularizerKind::None => None,
        RegularizerKind::L2 => Some(FisherDiag::uniform(&params, 1.0)),
        RegularizerKind::Ewc => Some(fisher_from_items(&params, &replay, &fanout, &mut rngs.fisher)?),
    };
    let lambda = cfg.effective_lambda();

    let mut items = live_items(&g, &live)?;
    let replayed = cfg.replay.then_some(&*mem);
    if replayed.is_some() {
        items.extend(replay.iter().copied());
    }
    let trained = items.len();
    let loss_before = loss_breakdown(&params, &g, &live, replayed, fisher.as_ref(), lambda)?;
    let (epoch_loss, epoch_seconds) = train_epochs(&mut params, &items, fisher.as_ref(), cfg, &mut rngs.train)?;
    let loss = loss_breakdown(&params, &g, &live, replayed, fisher.as_ref(), lambda)?;
    drop(items);
    drop(replay);

    mem.update(&live, &g, &mut rngs.memory)?;

    let report = StepReport {
        step: delta.time,
        new_nodes: delta.new_nodes.len(),
        influenced: detection.influenced.len(),
        trained,
        epoch_loss,
        epoch_seconds,
        detect_seconds: detection.elapsed.as_secs_f64(),
        loss_before,
        loss,
        checkpoint: None,
    };
    Ok((params, g, report))
}

/// Per-model state carried across steps.
#[derive(Clone, Debug)]
pub struct Learner {
    kind: ModelKind,
    cfg: TrainConfig,
    params: Option<GnnParams>,
    graph: GraphState,
    memory: Memory,
    rngs: LearnerRngs,
    checkpoint_dir: Option<PathBuf>,
}

impl Learner {
    pub fn new(kind: ModelKind, cfg: TrainConfig, feature_dim: usize) -> Result<Self> {
        cfg.validate()?;
        let memory = Memory::new(cfg.memory_size, cfg.memory_strategy, cfg.alpha_for_strategy(), cfg.layers);
        let rngs = LearnerRngs::new(cfg.seed);
        Ok(Learner {
            kind,
            cfg,
            params: None,
            graph: GraphState::empty(feature_dim),
            memory,
            rngs,
            checkpoint_dir: None,
        })
    }

    /// Saves `step<t>.ckpt` into `dir` after every step.
    pub fn with_checkpoints(mut self, dir: PathBuf) -> Self {
        self.checkpoint_dir = Some(dir);
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn config_mut(&mut self) -> &mut TrainConfig {
        &mut self.cfg
    }

    pub fn params(&self) -> Option<&GnnParams> {
        self.params.as_ref()
    }

    /// Replaces the current parameters, e.g. with a reloaded checkpoint.
    pub fn set_params(&mut self, params: GnnParams) {
        self.params = Some(params);
    }

    pub fn graph(&self) -> &GraphState {
        &self.graph
    }

    pub fn memory(&self) -> &Memory {
        &self.memory
    }

    fn fresh_params(&mut self, classes: usize) -> GnnParams {
        GnnParams::init(
            self.graph.feature_dim(),
            self.cfg.hidden,
            classes.max(1),
            self.cfg.layers,
            self.cfg.activation,
            &mut self.rngs.init,
        )
    }

    /// Applies `delta` and trains according to the model kind.
    pub fn step(&mut self, delta: &SnapshotDelta, trainable: &[bool]) -> Result<StepReport> {
        let mut report = if self.kind == ModelKind::Continual {
            let params = match self.params.take() {
                Some(p) => p,
                // First step: every node is new, so I(ΔG^0) is all of G^0.
                None => {
                    let classes = delta.new_nodes.iter().filter_map(|n| n.label).max().map_or(0, |k| k as usize + 1);
                    self.fresh_params(classes)
                }
            };
            let (p, g, report) = continual_step(
                &params,
                &mut self.memory,
                &self.graph,
                delta,
                &self.cfg,
                trainable,
                &mut self.rngs,
            )?;
            self.params = Some(p);
            self.graph = g;
            report
        } else {
            self.baseline_step(delta, trainable)?
        };
        if let (Some(dir), Some(p)) = (&self.checkpoint_dir, &self.params) {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("step{}.ckpt", delta.time));
            p.save(&path)?;
            report.checkpoint = Some(path);
        }
        Ok(report)
    }

    fn baseline_step(&mut self, delta: &SnapshotDelta, trainable: &[bool]) -> Result<StepReport> {
        let g = self.graph.apply_delta(delta)?;
        let classes = g.class_count();
        let first = self.params.is_none();
        self.graph = g;
        let g = &self.graph;

        let reinit = first || matches!(self.kind, ModelKind::Single | ModelKind::Retrained);
        let mut params = if reinit {
            GnnParams::init(
                g.feature_dim(),
                self.cfg.hidden,
                classes.max(1),
                self.cfg.layers,
                self.cfg.activation,
                &mut self.rngs.init,
            )
        } else {
            self.params.take().unwrap()
        };
        if classes > params.class_count() {
            params.grow_classes(classes);
        }

        let changed = if self.cfg.online_neighborhood && !delta.is_empty() {
            g.l_hop_set(&delta.touched_nodes(), self.cfg.layers)?
        } else {
            delta.touched_nodes()
        };
        let candidates: Vec<NodeId> = match self.kind {
            ModelKind::Pretrained if !first => Vec::new(),
            ModelKind::Retrained | ModelKind::Pretrained => g.nodes().collect(),
            _ => changed.clone(),
        };
        let live = trainable_labeled(g, &candidates, trainable);
        let items = live_items(g, &live)?;
        let loss_before = loss_breakdown(&params, g, &live, None, None, 0.0)?;
        let (epoch_loss, epoch_seconds) = train_epochs(&mut params, &items, None, &self.cfg, &mut self.rngs.train)?;
        let loss = loss_breakdown(&params, g, &live, None, None, 0.0)?;
        self.params = Some(params);
        Ok(StepReport {
            step: delta.time,
            new_nodes: delta.new_nodes.len(),
            influenced: changed.len(),
            trained: live.len(),
            epoch_loss,
            epoch_seconds,
            detect_seconds: 0.0,
            loss_before,
            loss,
            checkpoint: None,
        })
    }
}

/// Runs `kind` over the whole stream. `trainable[id]` marks nodes that may
/// be trained on; `None` allows every labeled node.
pub fn run_model(
    kind: ModelKind,
    stream: &[SnapshotDelta],
    cfg: &TrainConfig,
    trainable: Option<&[bool]>,
) -> Result<Vec<(GnnParams, StepReport)>> {
    let first = stream.first().ok_or_else(|| Error::Config("empty stream".into()))?;
    let dim = first
        .new_nodes
        .first()
        .map(|n| n.features.len())
        .ok_or_else(|| Error::Config("first step adds no nodes".into()))?;
    let all;
    let mask = match trainable {
        Some(m) => m,
        None => {
            all = vec![true; stream.iter().map(|d| d.new_nodes.len()).sum()];
            &all
        }
    };
    let mut learner = Learner::new(kind, cfg.clone(), dim)?;
    let mut out = Vec::with_capacity(stream.len());
    for delta in stream {
        let report = learner.step(delta, mask)?;
        out.push((learner.params().unwrap().clone(), report));
    }
    Ok(out)
}

pub fn run_continual(
    stream: &[SnapshotDelta],
    cfg: &TrainConfig,
    trainable: Option<&[bool]>,
) -> Result<Vec<(GnnParams, StepReport)>> {
    run_model(ModelKind::Continual, stream, cfg, trainable)
}

pub fn run_pretrained(
    stream: &[SnapshotDelta],
    cfg: &TrainConfig,
    trainable: Option<&[bool]>,
) -> Result<Vec<(GnnParams, StepReport)>> {
    run_model(ModelKind::Pretrained, stream, cfg, trainable)
}

pub fn run_online(
    stream: &[SnapshotDelta],
    cfg: &TrainConfig,
    trainable: Option<&[bool]>,
) -> Result<Vec<(GnnParams, StepReport)>> {
    run_model(ModelKind::Online, stream, cfg, trainable)
}

pub fn run_single(
    stream: &[SnapshotDelta],
    cfg: &TrainConfig,
    trainable: Option<&[bool]>,
) -> Result<Vec<(GnnParams, StepReport)>> {
    run_model(ModelKind::Single, stream, cfg, trainable)
}

pub fn run_retrained(
    stream: &[SnapshotDelta],
    cfg: &TrainConfig,
    trainable: Option<&[bool]>,
) -> Result<Vec<(GnnParams, StepReport)>> {
    run_model(ModelKind::Retrained, stream, cfg, trainable)
}
