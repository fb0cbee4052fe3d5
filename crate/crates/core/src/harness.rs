//! Experiment runners and reports.
//!
//! Every step's newly labeled nodes are split once into train and test
//! (default 70/30) and the split is shared by every model of an experiment.
//! After training on step `t` each model is evaluated on that step's test
//! nodes (or all test nodes so far with `accumulate_test`) with the
//! deterministic full-neighborhood forward. F1 is macro-averaged.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::consolidation::RegularizerKind;
use crate::detection::{score_approx, score_bfs, score_naive, Detector};
use crate::error::{Error, Result};
use crate::gnn::{embed, GnnParams};
use crate::graph::{GraphState, GraphView, NodeId, SnapshotDelta};
use crate::io::{load_stream, StreamFiles};
use crate::memory::MemoryStrategy;
use crate::metrics::{accuracy, argmax, macro_f1};
use crate::synth::{build_stream, SynthConfig};
use crate::trainer::{Learner, ModelKind, StepReport, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Synth(SynthConfig),
    Dir(PathBuf),
}

impl DataSource {
    pub fn load(&self) -> Result<Vec<SnapshotDelta>> {
        match self {
            DataSource::Synth(cfg) => build_stream(cfg),
            DataSource::Dir(dir) => {
                if !dir.is_dir() {
                    return Err(Error::Config(format!("dataset directory {} does not exist", dir.display())));
                }
                load_stream(&StreamFiles::in_dir(dir))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub data: DataSource,
    pub models: Vec<ModelKind>,
    pub train: TrainConfig,
    /// Fraction of each step's new labeled nodes used for training.
    pub split: f64,
    pub split_seed: u64,
    pub accumulate_test: bool,
    /// Steps whose test nodes form the tracked cohorts of the case study.
    pub cohorts: Vec<u32>,
    pub out_dir: Option<PathBuf>,
    /// Write `run/<name>/step<t>.ckpt` files under `out_dir`.
    pub checkpoints: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "synthetic".into(),
            data: DataSource::Synth(SynthConfig::default()),
            models: vec![ModelKind::Continual],
            train: TrainConfig::default(),
            split: 0.7,
            split_seed: 0,
            accumulate_test: false,
            cohorts: vec![0, 8],
            out_dir: None,
            checkpoints: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split must lie in (0, 1), got {}", self.split)));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models selected".into()));
        }
        if let DataSource::Synth(cfg) = &self.data {
            cfg.validate()?;
        }
        self.train.validate()
    }
}

/// One evaluation of one model at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: String,
    pub step: u32,
    /// `all` or `V^<t>`.
    pub cohort: String,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub train_seconds_per_epoch: f64,
    pub detect_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub train_seconds_per_epoch: f64,
    pub detect_seconds: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<MetricRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn summary_for(&self, model: ModelKind) -> Option<&SummaryRow> {
        let name = model.to_string();
        self.summary.iter().find(|s| s.model == name)
    }

    /// Rows of `model` for `cohort`, in step order.
    pub fn series(&self, model: ModelKind, cohort: &str) -> Vec<&MetricRow> {
        let name = model.to_string();
        self.rows.iter().filter(|r| r.model == name && r.cohort == cohort).collect()
    }
}

/// Train/test assignment of every node in a stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Vec<bool>,
    /// Test nodes that arrived at each step.
    pub test_by_step: Vec<Vec<NodeId>>,
}

/// Shuffles each step's new labeled nodes and puts the first
/// `round(ratio · n)` into train. Unlabeled nodes are in neither side.
pub fn split_stream(stream: &[SnapshotDelta], ratio: f64, seed: u64) -> Split {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = stream.iter().map(|d| d.new_nodes.len()).sum();
    let mut train = vec![false; total];
    let mut test_by_step = Vec::with_capacity(stream.len());
    for d in stream {
        let mut labeled: Vec<NodeId> = d.new_nodes.iter().filter(|n| n.label.is_some()).map(|n| n.id).collect();
        labeled.shuffle(&mut rng);
        let cut = (ratio * labeled.len() as f64).round() as usize;
        for &v in &labeled[..cut] {
            train[v.index()] = true;
        }
        let mut test = labeled[cut..].to_vec();
        test.sort_unstable();
        test_by_step.push(test);
    }
    Split { train, test_by_step }
}

/// `(macro-F1, accuracy)` of `params` on `nodes` of `g`.
pub fn evaluate(params: &GnnParams, g: &GraphState, nodes: &[NodeId]) -> (f64, f64) {
    if nodes.is_empty() {
        return (0.0, 0.0);
    }
    let logits = embed(params, g, nodes, params.layer_count());
    let truth: Vec<u32> = nodes.iter().map(|&v| g.label_of(v).expect("test nodes are labeled")).collect();
    let pred: Vec<u32> = (0..nodes.len()).map(|i| argmax(logits.row(i)) as u32).collect();
    (macro_f1(&truth, &pred), accuracy(&truth, &pred))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn summarize(rows: &[MetricRow], models: &[ModelKind]) -> Vec<SummaryRow> {
    models
        .iter()
        .map(|m| {
            let name = m.to_string();
            let mine: Vec<&MetricRow> = rows.iter().filter(|r| r.model == name && r.cohort == "all").collect();
            SummaryRow {
                model: name,
                macro_f1: mean(mine.iter().map(|r| r.macro_f1)),
                accuracy: mean(mine.iter().map(|r| r.accuracy)),
                train_seconds_per_epoch: mean(mine.iter().map(|r| r.train_seconds_per_epoch)),
                detect_seconds: mean(mine.iter().map(|r| r.detect_seconds)),
            }
        })
        .collect()
}

/// Hook called after each model step with the trained learner.
type StepHook<'a> = dyn FnMut(&Learner, &StepReport) -> Result<()> + 'a;

fn run_models(
    spec: &ExperimentSpec,
    stream: &[SnapshotDelta],
    split: &Split,
    hook: &mut StepHook<'_>,
) -> Result<Vec<MetricRow>> {
    let dim = stream
        .first()
        .and_then(|d| d.new_nodes.first())
        .map(|n| n.features.len())
        .ok_or_else(|| Error::Config("stream is empty".into()))?;
    let mut rows = Vec::new();
    for &kind in &spec.models {
        let mut learner = Learner::new(kind, spec.train.clone(), dim)?;
        if spec.checkpoints {
            let base = spec.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            learner = learner.with_checkpoints(base.join("run").join(format!("{}-{kind}", spec.name)));
        }
        let mut test: Vec<NodeId> = Vec::new();
        for (t, delta) in stream.iter().enumerate() {
            let report = learner.step(delta, &split.train)?;
            if spec.accumulate_test {
                test.extend(&split.test_by_step[t]);
            } else {
                test.clone_from(&split.test_by_step[t]);
            }
            let params = learner.params().expect("trained");
            let (f1, acc) = evaluate(params, learner.graph(), &test);
            rows.push(MetricRow {
                model: kind.to_string(),
                step: delta.time,
                cohort: "all".into(),
                macro_f1: f1,
                accuracy: acc,
                train_seconds_per_epoch: report.seconds_per_epoch(),
                detect_seconds: report.detect_seconds,
            });
            for &c in &spec.cohorts {
                if let Some(nodes) = split.test_by_step.get(c as usize) {
                    if c <= delta.time && !nodes.is_empty() {
                        let (f1, acc) = evaluate(params, learner.graph(), nodes);
                        rows.push(MetricRow {
                            model: kind.to_string(),
                            step: delta.time,
                            cohort: format!("V^{c}"),
                            macro_f1: f1,
                            accuracy: acc,
                            train_seconds_per_epoch: report.seconds_per_epoch(),
                            detect_seconds: report.detect_seconds,
                        });
                    }
                }
            }
            hook(&learner, &report)?;
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "model,step,cohort,macro_f1,accuracy,train_seconds_per_epoch,detect_seconds";

pub fn rows_to_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("# F1 is macro-averaged over classes\n");
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.model, r.step, r.cohort, r.macro_f1, r.accuracy, r.train_seconds_per_epoch, r.detect_seconds
        )
        .unwrap();
    }
    out
}

fn write_report(dir: &Path, report: &ExperimentReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), rows_to_csv(&report.rows))?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report.summary)?)?;
    Ok(())
}

/// Trains every model in `spec` over the stream and evaluates each step.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let stream = spec.data.load()?;
    let split = split_stream(&stream, spec.split, spec.split_seed);
    let no_cohorts = ExperimentSpec {
        cohorts: Vec::new(),
        ..spec.clone()
    };
    let rows = run_models(&no_cohorts, &stream, &split, &mut |_, _| Ok(()))?;
    let report = ExperimentReport {
        summary: summarize(&rows, &spec.models),
        rows,
    };
    if let Some(dir) = &spec.out_dir {
        write_report(dir, &report)?;
    }
    Ok(report)
}

fn embeddings_csv(params: &GnnParams, g: &GraphState, nodes: &[NodeId]) -> String {
    let depth = params.layer_count().saturating_sub(1).max(1);
    let h = embed(params, g, nodes, depth);
    let mut out = String::new();
    for (i, v) in nodes.iter().enumerate() {
        out.push_str(&v.to_string());
        for x in h.row(i) {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Tracks the cohorts' accuracy at every step and, with an output
/// directory, dumps the cohorts' last hidden representations per step to
/// `<out>/<model>/embeddings_step<t>.csv` (`node_id` followed by the vector).
pub fn run_case_study(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let stream = spec.data.load()?;
    let split = split_stream(&stream, spec.split, spec.split_seed);
    let mut tracked: Vec<NodeId> = Vec::new();
    for &c in &spec.cohorts {
        let nodes = split
            .test_by_step
            .get(c as usize)
            .filter(|n| !n.is_empty())
            .ok_or_else(|| Error::Config(format!("cohort V^{c} is empty")))?;
        tracked.extend(nodes);
    }
    tracked.sort_unstable();
    let out_dir = spec.out_dir.clone();
    let rows = run_models(spec, &stream, &split, &mut |learner, report| {
        if let Some(dir) = &out_dir {
            let present: Vec<NodeId> =
                tracked.iter().copied().filter(|v| v.index() < learner.graph().num_nodes()).collect();
            let sub = dir.join(learner.kind().to_string());
            fs::create_dir_all(&sub)?;
            let csv = embeddings_csv(learner.params().unwrap(), learner.graph(), &present);
            fs::write(sub.join(format!("embeddings_step{}.csv", report.step)), csv)?;
        }
        Ok(())
    })?;
    let report = ExperimentReport {
        summary: summarize(&rows, &spec.models),
        rows,
    };
    if let Some(dir) = &spec.out_dir {
        write_report(dir, &report)?;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationAxis {
    Detector,
    MemoryStrategy,
    MemorySize,
    Lambda,
    RegKind,
    /// `data` (replay only), `model` (regularizer only), `both`, `none`.
    ViewCombo,
}

impl std::str::FromStr for AblationAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detector" => Ok(AblationAxis::Detector),
            "memory_strategy" => Ok(AblationAxis::MemoryStrategy),
            "memory_size" => Ok(AblationAxis::MemorySize),
            "lambda" => Ok(AblationAxis::Lambda),
            "reg_kind" => Ok(AblationAxis::RegKind),
            "view_combo" => Ok(AblationAxis::ViewCombo),
            other => Err(Error::Config(format!("unknown ablation axis `{other}`"))),
        }
    }
}

impl AblationAxis {
    pub fn default_values(self) -> Vec<String> {
        let v: &[&str] = match self {
            AblationAxis::Detector => &["naive", "bfs", "approx"],
            AblationAxis::MemoryStrategy => &["random", "hierarchical", "stepwise"],
            AblationAxis::MemorySize => &["50", "100", "250", "500"],
            AblationAxis::Lambda => &["0", "50", "100", "200", "400"],
            AblationAxis::RegKind => &["none", "l2", "ewc"],
            AblationAxis::ViewCombo => &["none", "data", "model", "both"],
        };
        v.iter().map(|s| s.to_string()).collect()
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &TrainConfig, value: &str) -> Result<TrainConfig> {
        let mut cfg = base.clone();
        let num = |v: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::Config(format!("`{v}` is not a number")))
        };
        match self {
            AblationAxis::Detector => cfg.detector = value.parse::<Detector>()?,
            AblationAxis::MemoryStrategy => cfg.memory_strategy = value.parse::<MemoryStrategy>()?,
            AblationAxis::MemorySize => cfg.memory_size = num(value)? as usize,
            AblationAxis::Lambda => cfg.lambda = num(value)?,
            AblationAxis::RegKind => cfg.regularizer = value.parse::<RegularizerKind>()?,
            AblationAxis::ViewCombo => {
                let (data, model) = match value {
                    "none" => (false, false),
                    "data" => (true, false),
                    "model" => (false, true),
                    "both" => (true, true),
                    other => return Err(Error::Config(format!("unknown view combination `{other}`"))),
                };
                cfg.replay = data;
                if !model {
                    cfg.regularizer = RegularizerKind::None;
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridPoint {
    pub value: String,
    pub rows: Vec<MetricRow>,
    pub summary: SummaryRow,
}

/// Runs the continual model once per value of `axis`.
pub fn run_ablation(spec: &ExperimentSpec, axis: AblationAxis, values: &[String]) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    let stream = spec.data.load()?;
    let split = split_stream(&stream, spec.split, spec.split_seed);
    let mut grid = Vec::with_capacity(values.len());
    for value in values {
        let point = ExperimentSpec {
            models: vec![ModelKind::Continual],
            train: axis.apply(&spec.train, value)?,
            cohorts: Vec::new(),
            checkpoints: false,
            ..spec.clone()
        };
        let rows = run_models(&point, &stream, &split, &mut |_, _| Ok(()))?;
        let summary = summarize(&rows, &point.models).remove(0);
        grid.push(GridPoint {
            value: value.clone(),
            rows,
            summary,
        });
    }
    if let Some(dir) = &spec.out_dir {
        fs::create_dir_all(dir)?;
        let mut csv = String::from("value,");
        csv.push_str(CSV_HEADER);
        csv.push('\n');
        for p in &grid {
            for line in rows_to_csv(&p.rows).lines().skip(2) {
                writeln!(csv, "{},{line}", p.value).unwrap();
            }
        }
        fs::write(dir.join("metrics.csv"), csv)?;
        let summary: BTreeMap<&str, &SummaryRow> = grid.iter().map(|p| (p.value.as_str(), &p.summary)).collect();
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleAxis {
    /// Vary the number of nodes already in the graph, fixed `|ΔV|`.
    NetworkSize,
    /// Vary `|ΔV|` on a fixed base graph.
    StreamSize,
}

impl std::str::FromStr for ScaleAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "network_size" => Ok(ScaleAxis::NetworkSize),
            "stream_size" => Ok(ScaleAxis::StreamSize),
            other => Err(Error::Config(format!("unknown scalability axis `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalePoint {
    /// Nodes in the graph after the timed step.
    pub nodes: usize,
    /// New nodes in the timed step.
    pub delta_nodes: usize,
    /// Seconds per epoch, keyed by model name.
    pub epoch_seconds: BTreeMap<String, f64>,
    /// Wall time of the whole one-epoch step (detection, Fisher, training,
    /// memory update), keyed by model name.
    pub step_seconds: BTreeMap<String, f64>,
    /// Detection seconds, keyed by detector name.
    pub detect_seconds: BTreeMap<String, f64>,
    /// `|N^L_ΔV|`, the pool scored by the exact restricted detector.
    pub ball: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleReport {
    pub axis: ScaleAxis,
    pub points: Vec<ScalePoint>,
    /// Least-squares slope of seconds per epoch against the axis variable.
    pub slopes: BTreeMap<String, f64>,
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x.iter().copied());
    let my = mean(y.iter().copied());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Times one step of `|ΔV| = delta` new nodes on a sparse graph of `base`
/// existing nodes. The graph before the step is built directly from the
/// generator; the timed models start from the same parameters.
pub fn time_step(
    synth: &SynthConfig,
    train: &TrainConfig,
    base: usize,
    delta: usize,
    repeats: usize,
) -> Result<ScalePoint> {
    let cfg = SynthConfig {
        steps: 2,
        per_step: 0,
        structure_shift: 2,
        attribute_shift: 2,
        ..synth.clone()
    };
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let build = |t: u32, start: usize, count: usize, classes: &[u32], rng: &mut ChaCha8Rng| {
        let new: Vec<u32> = (0..count).map(|j| cfg.class_of(NodeId::from(start + j))).collect();
        let features = crate::synth::gen_step_attributes(&cfg, t, count, rng);
        let edge_adds = crate::synth::gen_step_structure(&cfg, t, classes, &new, rng);
        let new_nodes = features
            .into_iter()
            .zip(&new)
            .enumerate()
            .map(|(j, (f, &k))| crate::graph::NewNode {
                id: NodeId::from(start + j),
                features: f,
                label: Some(k),
            })
            .collect();
        (
            SnapshotDelta {
                time: t,
                new_nodes,
                edge_adds,
                ..SnapshotDelta::empty(t)
            },
            new,
        )
    };
    let (d0, classes) = build(0, 0, base, &[], &mut rng);
    let (d1, _) = build(1, base, delta, &classes, &mut rng);
    let mask = vec![true; base + delta];

    let mut epoch_seconds = BTreeMap::new();
    let mut step_seconds = BTreeMap::new();
    let timed = TrainConfig {
        epochs: 1,
        ..train.clone()
    };
    for kind in [ModelKind::Continual, ModelKind::Retrained] {
        let mut best = f64::INFINITY;
        let mut best_step = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            // Build the base graph (and the continual memory) without training.
            let mut learner = Learner::new(kind, TrainConfig { epochs: 0, ..timed.clone() }, cfg.feature_dim)?;
            learner.step(&d0, &mask)?;
            learner.config_mut().epochs = 1;
            let start = Instant::now();
            let report = learner.step(&d1, &mask)?;
            best_step = best_step.min(start.elapsed().as_secs_f64());
            best = best.min(report.seconds_per_epoch());
        }
        epoch_seconds.insert(kind.to_string(), best);
        step_seconds.insert(kind.to_string(), best_step);
    }

    let g0 = GraphState::empty(cfg.feature_dim).apply_delta(&d0)?;
    let g1 = g0.apply_delta(&d1)?;
    let params = GnnParams::init(
        cfg.feature_dim,
        train.hidden,
        cfg.classes as usize,
        train.layers,
        train.activation,
        &mut ChaCha8Rng::seed_from_u64(train.seed),
    );
    let ball = g1.l_hop_set(&d1.touched_nodes(), train.layers)?.len();
    let mut detect_seconds = BTreeMap::new();
    let all: Vec<NodeId> = g1.nodes().collect();
    for det in [Detector::Naive, Detector::Bfs, Detector::Approx] {
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            match det {
                Detector::Naive => drop(score_naive(&params, &g0, &g1, &all)?),
                Detector::Bfs => drop(score_bfs(&params, &g0, &g1, &d1, train.layers)?),
                Detector::Approx => drop(score_approx(&params, &g0, &g1, &d1, train.layers, train.propagation)?),
            }
            best = best.min(start.elapsed().as_secs_f64());
        }
        detect_seconds.insert(det.to_string(), best);
    }
    Ok(ScalePoint {
        nodes: base + delta,
        delta_nodes: delta,
        epoch_seconds,
        step_seconds,
        detect_seconds,
        ball,
    })
}

/// Per-step cost of continual vs retrained training across sizes.
/// `sizes` are base graph sizes for [`ScaleAxis::NetworkSize`] (with
/// `|ΔV| = fixed`) or `|ΔV|` values for [`ScaleAxis::StreamSize`] (with the
/// base graph fixed at `fixed` nodes).
pub fn run_scalability(
    synth: &SynthConfig,
    train: &TrainConfig,
    axis: ScaleAxis,
    sizes: &[usize],
    fixed: usize,
    repeats: usize,
) -> Result<ScaleReport> {
    let mut points = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let (base, delta) = match axis {
            ScaleAxis::NetworkSize => (s, fixed),
            ScaleAxis::StreamSize => (fixed, s),
        };
        points.push(time_step(synth, train, base, delta, repeats)?);
    }
    let x: Vec<f64> = points
        .iter()
        .map(|p| match axis {
            ScaleAxis::NetworkSize => p.nodes as f64,
            ScaleAxis::StreamSize => p.delta_nodes as f64,
        })
        .collect();
    let mut slopes = BTreeMap::new();
    for kind in [ModelKind::Continual, ModelKind::Retrained] {
        let name = kind.to_string();
        let y: Vec<f64> = points.iter().map(|p| p.epoch_seconds[&name]).collect();
        slopes.insert(name, slope(&x, &y));
    }
    Ok(ScaleReport { axis, points, slopes })
}
