//! Synthetic streaming network with a structural shift and an attribute shift.
//!
//! Before `structure_shift` every new node of class `k` links to uniformly
//! chosen earlier nodes of its own class so that class `k` reaches mean
//! degree `er_degrees[k]`. From `structure_shift` on, each pair formed by a
//! new node and any earlier node is linked with `p_in` (same class) or
//! `p_out`. Feature 0 is drawn from `N(mean_before, 1)` before
//! `attribute_shift` and from `N(mean_after, 1)` afterwards; all other
//! features are standard normal. Raw values are clipped to `±clip` and mapped
//! affinely onto `[0, 1]`. Classes alternate by node id.

use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NewNode, NodeId, SnapshotDelta};
use crate::io::write_stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub steps: u32,
    pub per_step: usize,
    pub feature_dim: usize,
    pub classes: u32,
    pub structure_shift: u32,
    pub attribute_shift: u32,
    pub er_degrees: Vec<f64>,
    pub p_in: f64,
    pub p_out: f64,
    pub mean_before: f64,
    pub mean_after: f64,
    /// Raw features are clipped to `[-clip, clip]` before rescaling.
    pub clip: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            steps: 24,
            per_step: 128,
            feature_dim: 64,
            classes: 2,
            structure_shift: 8,
            attribute_shift: 16,
            er_degrees: vec![4.0, 10.0],
            p_in: 0.02,
            p_out: 0.001,
            mean_before: -1.0,
            mean_after: 1.0,
            clip: 5.0,
            seed: 0,
        }
    }
}

/// What gets written next to the stream files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SynthConfig,
    pub class_assignment: String,
    pub nodes: usize,
    pub edges: usize,
    pub feature_rescale: String,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if self.feature_dim == 0 || self.classes == 0 {
            return bad("feature_dim and classes must be positive".into());
        }
        if self.structure_shift > self.steps || self.attribute_shift > self.steps {
            return bad(format!(
                "phase boundaries ({}, {}) outside 0..={}",
                self.structure_shift, self.attribute_shift, self.steps
            ));
        }
        if self.er_degrees.len() != self.classes as usize
            || self.er_degrees.iter().any(|d| !(*d >= 0.0 && d.is_finite()))
        {
            return bad(format!("need one nonnegative ER degree per class, got {:?}", self.er_degrees));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.clip > 0.0 && self.clip.is_finite()) {
            return bad(format!("clip must be positive, got {}", self.clip));
        }
        Ok(())
    }

    pub fn total_nodes(&self) -> usize {
        self.steps as usize * self.per_step
    }

    pub fn class_of(&self, id: NodeId) -> u32 {
        id.0 % self.classes
    }

    /// `[-clip, clip] → [0, 1]`.
    pub fn rescale(&self, x: f64) -> f64 {
        (x.clamp(-self.clip, self.clip) + self.clip) / (2.0 * self.clip)
    }
}

/// Edges from the new nodes to earlier nodes. `existing[i]` is the class of
/// node `i`; the new nodes take ids `existing.len()..` with classes `new`.
/// Every returned pair is `(new node, earlier node)`.
pub fn gen_step_structure<R: Rng + ?Sized>(
    cfg: &SynthConfig,
    t: u32,
    existing: &[u32],
    new: &[u32],
    rng: &mut R,
) -> Vec<(NodeId, NodeId)> {
    let mut edges = Vec::new();
    let base = existing.len();
    if t < cfg.structure_shift {
        let mut by_class: Vec<Vec<u32>> = vec![Vec::new(); cfg.classes as usize];
        for (i, &k) in existing.iter().enumerate() {
            by_class[k as usize].push(i as u32);
        }
        for (j, &k) in new.iter().enumerate() {
            let v = (base + j) as u32;
            let half = cfg.er_degrees[k as usize] / 2.0;
            let mut want = half.floor() as usize;
            if rng.random::<f64>() < half.fract() {
                want += 1;
            }
            let pool = &by_class[k as usize];
            let take = want.min(pool.len());
            let mut picks: Vec<u32> = sample(rng, pool.len(), take).into_iter().map(|i| pool[i]).collect();
            picks.sort_unstable();
            edges.extend(picks.into_iter().map(|u| (NodeId(v), NodeId(u))));
            by_class[k as usize].push(v);
        }
    } else {
        let mut classes: Vec<u32> = existing.to_vec();
        for (j, &k) in new.iter().enumerate() {
            let v = (base + j) as u32;
            for (u, &ku) in classes.iter().enumerate() {
                let p = if ku == k { cfg.p_in } else { cfg.p_out };
                if rng.random::<f64>() < p {
                    edges.push((NodeId(v), NodeId(u as u32)));
                }
            }
            classes.push(k);
        }
    }
    edges
}

/// Feature rows for `count` new nodes arriving at step `t`, already in `[0, 1]`.
pub fn gen_step_attributes<R: Rng + ?Sized>(
    cfg: &SynthConfig,
    t: u32,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let mean = if t < cfg.attribute_shift { cfg.mean_before } else { cfg.mean_after };
    let first = Normal::new(mean, 1.0).expect("unit variance");
    (0..count)
        .map(|_| {
            (0..cfg.feature_dim)
                .map(|i| {
                    let raw = if i == 0 {
                        first.sample(rng)
                    } else {
                        StandardNormal.sample(rng)
                    };
                    cfg.rescale(raw)
                })
                .collect()
        })
        .collect()
}

/// The full stream, one delta per step.
pub fn build_stream(cfg: &SynthConfig) -> Result<Vec<SnapshotDelta>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut classes: Vec<u32> = Vec::with_capacity(cfg.total_nodes());
    let mut deltas = Vec::with_capacity(cfg.steps as usize);
    for t in 0..cfg.steps {
        let base = classes.len();
        let new: Vec<u32> = (0..cfg.per_step).map(|j| cfg.class_of(NodeId::from(base + j))).collect();
        let features = gen_step_attributes(cfg, t, new.len(), &mut rng);
        let edge_adds = gen_step_structure(cfg, t, &classes, &new, &mut rng);
        let new_nodes = features
            .into_iter()
            .zip(&new)
            .enumerate()
            .map(|(j, (features, &k))| NewNode {
                id: NodeId::from(base + j),
                features,
                label: Some(k),
            })
            .collect();
        classes.extend(&new);
        deltas.push(SnapshotDelta {
            time: t,
            new_nodes,
            edge_adds,
            ..SnapshotDelta::empty(t)
        });
    }
    Ok(deltas)
}

/// Generates the stream and writes the stream files plus `manifest.json`.
pub fn write_synth(cfg: &SynthConfig, dir: &Path) -> Result<Manifest> {
    let deltas = build_stream(cfg)?;
    write_stream(dir, &deltas)?;
    let manifest = Manifest {
        config: cfg.clone(),
        class_assignment: format!("alternating: class = id mod {}", cfg.classes),
        nodes: deltas.iter().map(|d| d.new_nodes.len()).sum(),
        edges: deltas.iter().map(|d| d.edge_adds.len()).sum(),
        feature_rescale: format!("x' = (clamp(x, -{c}, {c}) + {c}) / {}", 2.0 * cfg.clip, c = cfg.clip),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphState;
    use crate::io::{load_stream, StreamFiles};
    use crate::testutil::rng;

    fn small(steps: u32, per_step: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            steps,
            per_step,
            feature_dim: 4,
            structure_shift: steps.min(8),
            attribute_shift: steps.min(16),
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn default_config_totals() {
        let cfg = SynthConfig::default();
        let deltas = build_stream(&cfg).unwrap();
        assert_eq!(deltas.len(), 24);
        let mut g = GraphState::empty(64);
        for d in &deltas {
            g = g.apply_delta(d).unwrap();
        }
        assert_eq!(g.num_nodes(), 3072);
        assert_eq!(g.feature_dim(), 64);
        assert_eq!(g.class_count(), 2);
        for d in &deltas {
            let ones = d.new_nodes.iter().filter(|n| n.label == Some(1)).count();
            assert_eq!(ones, 64);
        }
    }

    #[test]
    fn single_step_and_zero_nodes() {
        let deltas = build_stream(&small(1, 6, 1)).unwrap();
        assert_eq!(deltas.len(), 1);
        assert!(gen_step_attributes(&SynthConfig::default(), 3, 0, &mut rng(0)).is_empty());
    }

    #[test]
    fn two_new_nodes_only_have_few_partners() {
        let cfg = SynthConfig::default();
        let edges = gen_step_structure(&cfg, 0, &[], &[0, 1], &mut rng(3));
        // Different classes and no earlier nodes: nobody to link to.
        assert!(edges.is_empty());
        let edges = gen_step_structure(&cfg, 0, &[], &[1, 1], &mut rng(3));
        assert_eq!(edges, vec![(NodeId(1), NodeId(0))]);
    }

    #[test]
    fn edges_only_point_backwards() {
        for d in build_stream(&small(12, 40, 5)).unwrap() {
            for &(u, v) in &d.edge_adds {
                assert!(v < u);
                assert!(d.new_nodes.iter().any(|n| n.id == u));
            }
        }
    }

    #[test]
    fn same_seed_gives_identical_files() {
        let cfg = small(10, 30, 9);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_synth(&cfg, a.path()).unwrap();
        write_synth(&cfg, b.path()).unwrap();
        for f in ["edges.txt", "features.txt", "labels.txt", "schedule.txt", "manifest.json"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }

    #[test]
    fn files_load_back_losslessly() {
        let cfg = small(10, 30, 4);
        let dir = tempfile::tempdir().unwrap();
        write_synth(&cfg, dir.path()).unwrap();
        let loaded = load_stream(&StreamFiles::in_dir(dir.path())).unwrap();
        assert_eq!(loaded, build_stream(&cfg).unwrap());
    }

    #[test]
    fn er_phase_mean_degree_matches_configuration() {
        let cfg = SynthConfig::default();
        let labels: Vec<u32> = (0..1000).map(|i| i % 2).collect();
        let mut means = [0.0; 2];
        for seed in 0..20 {
            let edges = gen_step_structure(&cfg, 0, &[], &labels, &mut rng(seed));
            let mut deg = [0usize; 2];
            for (u, v) in edges {
                deg[labels[u.index()] as usize] += 1;
                deg[labels[v.index()] as usize] += 1;
            }
            for k in 0..2 {
                means[k] += deg[k] as f64 / 500.0 / 20.0;
            }
        }
        assert!((means[0] - 4.0).abs() < 0.4, "{means:?}");
        assert!((means[1] - 10.0).abs() < 1.0, "{means:?}");
    }

    #[test]
    fn community_phase_rates_match_configuration() {
        let cfg = SynthConfig::default();
        let labels: Vec<u32> = (0..1000).map(|i| i % 2).collect();
        let (mut intra, mut inter) = (0usize, 0usize);
        for seed in 0..20 {
            for (u, v) in gen_step_structure(&cfg, 8, &[], &labels, &mut rng(seed)) {
                if labels[u.index()] == labels[v.index()] {
                    intra += 1;
                } else {
                    inter += 1;
                }
            }
        }
        let intra_pairs = 2.0 * (500.0 * 499.0 / 2.0) * 20.0;
        let inter_pairs = 500.0 * 500.0 * 20.0;
        let ratio = (intra as f64 / intra_pairs) / (inter as f64 / inter_pairs);
        let target = cfg.p_in / cfg.p_out;
        assert!(ratio > target / 1.5 && ratio < target * 1.5, "ratio {ratio}");
    }

    #[test]
    fn attribute_shift_moves_only_the_first_feature() {
        let cfg = SynthConfig::default();
        let mut diffs = Vec::new();
        let mut other = Vec::new();
        for seed in 0..20 {
            let mut r = rng(seed);
            let before = gen_step_attributes(&cfg, 15, 128, &mut r);
            let after = gen_step_attributes(&cfg, 16, 128, &mut r);
            let mean = |rows: &[Vec<f64>], i: usize| rows.iter().map(|x| x[i]).sum::<f64>() / rows.len() as f64;
            diffs.push(mean(&after, 0) - mean(&before, 0));
            other.push(mean(&after, 7) - mean(&before, 7));
        }
        let avg = diffs.iter().sum::<f64>() / 20.0;
        // Shift of 2 raw units, scaled by 1 / (2·clip).
        assert!((avg - 0.2).abs() < 0.02, "dim-0 shift {avg}");
        // Every seed separates: the per-cohort std of the mean is ~0.1/sqrt(128).
        assert!(diffs.iter().all(|&d| d > 0.1));
        let avg_other = other.iter().sum::<f64>() / 20.0;
        assert!(avg_other.abs() < 0.01, "dim-7 shift {avg_other}");
    }

    #[test]
    fn features_stay_in_unit_interval() {
        for d in build_stream(&small(20, 50, 2)).unwrap() {
            for n in &d.new_nodes {
                assert!(n.features.iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = SynthConfig::default();
        cfg.p_in = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = SynthConfig::default();
        cfg.structure_shift = 40;
        assert!(cfg.validate().is_err());
        let mut cfg = SynthConfig::default();
        cfg.er_degrees = vec![4.0];
        assert!(cfg.validate().is_err());
    }
}
