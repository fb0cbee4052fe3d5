//! Replay memory of frozen ego-networks.
//!
//! Slots are apportioned across classes in proportion to how many labeled
//! nodes of each class the stream has produced (`n_k`), with at least one
//! slot per observed class when capacity allows. Within a class the memory
//! is a reservoir: a candidate of class `k` is admitted with probability
//! `min(1, m_k/n_k · (1 + α·importance))` and replaces a uniformly chosen
//! entry of its class, or fills a free slot of its class.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::TrainItem;
use crate::graph::{EgoNet, GraphState, GraphView, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryStrategy {
    /// Uniform reservoir over all slots; ignores classes and importance.
    Random,
    /// Class-stratified reservoir without importance (`α = 0`).
    Hierarchical,
    /// Class-stratified reservoir weighted by node importance.
    Stepwise,
}

impl FromStr for MemoryStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(MemoryStrategy::Random),
            "hierarchical" => Ok(MemoryStrategy::Hierarchical),
            "stepwise" => Ok(MemoryStrategy::Stepwise),
            other => Err(Error::Config(format!("unknown memory strategy `{other}`"))),
        }
    }
}

impl fmt::Display for MemoryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryStrategy::Random => "random",
            MemoryStrategy::Hierarchical => "hierarchical",
            MemoryStrategy::Stepwise => "stepwise",
        })
    }
}

#[derive(Clone, Debug)]
pub struct MemoryEntry {
    pub ego: EgoNet,
    pub label: u32,
    pub step: u32,
    seq: u64,
}

#[derive(Clone, Debug)]
pub struct Memory {
    capacity: usize,
    strategy: MemoryStrategy,
    alpha: f64,
    ego_depth: usize,
    entries: Vec<MemoryEntry>,
    seen: Vec<u64>,
    next_seq: u64,
}

/// Fraction of `v`'s labeled neighbors whose label differs from `v`'s.
/// Unlabeled neighbors are skipped; no labeled neighbors gives 0.
pub fn node_importance<G: GraphView + ?Sized>(view: &G, v: NodeId) -> Result<f64> {
    if v.index() >= view.num_nodes() {
        return Err(Error::UnknownNode(v));
    }
    let own = view.label_of(v).ok_or(Error::Unlabeled(v))?;
    let (mut labeled, mut differ) = (0usize, 0usize);
    for &u in view.neighbors_of(v) {
        if let Some(k) = view.label_of(u) {
            labeled += 1;
            if k != own {
                differ += 1;
            }
        }
    }
    Ok(if labeled == 0 {
        0.0
    } else {
        differ as f64 / labeled as f64
    })
}

/// Largest-remainder apportionment of `capacity` slots by `seen` counts.
/// Every class with a nonzero count gets at least one slot when
/// `capacity` covers all such classes.
pub fn slot_targets(capacity: usize, seen: &[u64]) -> Vec<usize> {
    let total: u64 = seen.iter().sum();
    let mut targets = vec![0usize; seen.len()];
    if total == 0 || capacity == 0 {
        return targets;
    }
    let mut rema: Vec<(usize, u128)> = Vec::with_capacity(seen.len());
    let mut assigned = 0;
    for (k, &n) in seen.iter().enumerate() {
        let share = capacity as u128 * n as u128;
        targets[k] = (share / total as u128) as usize;
        assigned += targets[k];
        rema.push((k, share % total as u128));
    }
    rema.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(k, _) in rema.iter().take(capacity - assigned) {
        targets[k] += 1;
    }
    let observed = seen.iter().filter(|&&n| n > 0).count();
    if capacity >= observed {
        for k in 0..seen.len() {
            if seen[k] > 0 && targets[k] == 0 {
                let donor = (0..seen.len())
                    .max_by(|&a, &b| targets[a].cmp(&targets[b]).then(b.cmp(&a)))
                    .unwrap();
                targets[donor] -= 1;
                targets[k] = 1;
            }
        }
    }
    targets
}

impl Memory {
    /// `ego_depth` is the number of GNN layers; stored egos cover the full
    /// receptive field of their center.
    pub fn new(capacity: usize, strategy: MemoryStrategy, alpha: f64, ego_depth: usize) -> Self {
        Memory {
            capacity,
            strategy,
            alpha,
            ego_depth,
            entries: Vec::new(),
            seen: Vec::new(),
            next_seq: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn strategy(&self) -> MemoryStrategy {
        self.strategy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    /// `n_k`: labeled candidates of class `k` observed so far.
    pub fn seen(&self, class: u32) -> u64 {
        self.seen.get(class as usize).copied().unwrap_or(0)
    }

    pub fn class_count(&self, class: u32) -> usize {
        self.entries.iter().filter(|e| e.label == class).count()
    }

    /// Current `m_k` for every class observed so far.
    pub fn targets(&self) -> Vec<usize> {
        slot_targets(self.capacity, &self.seen)
    }

    /// Admission probability of a candidate of class `class`, given that
    /// `n_k` already counts it.
    pub fn replace_prob(&self, class: u32, importance: f64) -> f64 {
        let total: u64 = self.seen.iter().sum();
        let n_k = self.seen(class);
        if self.capacity == 0 || n_k == 0 {
            return 0.0;
        }
        match self.strategy {
            MemoryStrategy::Random => (self.capacity as f64 / total as f64).min(1.0),
            MemoryStrategy::Hierarchical => {
                replace_prob(self.targets()[class as usize], n_k, 0.0, importance)
            }
            MemoryStrategy::Stepwise => {
                replace_prob(self.targets()[class as usize], n_k, self.alpha, importance)
            }
        }
    }

    /// Offers each candidate to the memory in order. Candidates must be
    /// labeled nodes of `g`.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        candidates: &[NodeId],
        g: &GraphState,
        rng: &mut R,
    ) -> Result<()> {
        let step = g.time().unwrap_or(0);
        for &v in candidates {
            let class = g.label(v)?.ok_or(Error::Unlabeled(v))?;
            if self.seen.len() <= class as usize {
                self.seen.resize(class as usize + 1, 0);
            }
            self.seen[class as usize] += 1;
            if self.capacity == 0 {
                continue;
            }
            let importance = match self.strategy {
                MemoryStrategy::Stepwise => node_importance(g, v)?,
                _ => 0.0,
            };
            let p = self.replace_prob(class, importance);
            if rng.random::<f64>() >= p {
                continue;
            }
            // A stored node whose neighborhood changed is refreshed in place.
            let stored = self.entries.iter().position(|e| e.ego.center_global() == v);
            let Some(slot) = stored.map(Slot::Replace).or_else(|| self.choose_slot(class, rng)) else {
                continue;
            };
            let entry = MemoryEntry {
                ego: g.freeze_ego(v, self.ego_depth)?,
                label: class,
                step,
                seq: self.next_seq,
            };
            self.next_seq += 1;
            match slot {
                Slot::Append => self.entries.push(entry),
                Slot::Replace(i) => self.entries[i] = entry,
            }
        }
        Ok(())
    }

    fn choose_slot<R: Rng + ?Sized>(&mut self, class: u32, rng: &mut R) -> Option<Slot> {
        if self.strategy == MemoryStrategy::Random {
            return Some(if self.entries.len() < self.capacity {
                Slot::Append
            } else {
                Slot::Replace(rng.random_range(0..self.entries.len()))
            });
        }
        let targets = self.targets();
        let mut counts = vec![0usize; targets.len()];
        for e in &self.entries {
            counts[e.label as usize] += 1;
        }
        let k = class as usize;
        if counts[k] < targets[k] {
            if self.entries.len() < self.capacity {
                return Some(Slot::Append);
            }
            // Full but under target: the class furthest over its target
            // gives up its oldest entry.
            let donor = (0..targets.len())
                .filter(|&j| counts[j] > targets[j])
                .max_by(|&a, &b| {
                    (counts[a] - targets[a]).cmp(&(counts[b] - targets[b])).then(b.cmp(&a))
                })?;
            let oldest = self
                .entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.label as usize == donor)
                .min_by_key(|(_, e)| e.seq)
                .map(|(i, _)| i)?;
            return Some(Slot::Replace(oldest));
        }
        if counts[k] == 0 {
            return None;
        }
        let pick = rng.random_range(0..counts[k]);
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == class)
            .nth(pick)
            .map(|(i, _)| Slot::Replace(i))
    }

    /// One training item per entry, each reading its frozen ego-network.
    pub fn replay_batch(&self) -> Vec<TrainItem<'_>> {
        self.entries
            .iter()
            .map(|e| TrainItem {
                view: &e.ego,
                node: e.ego.center(),
                label: e.label,
            })
            .collect()
    }
}

enum Slot {
    Append,
    Replace(usize),
}

/// `min(1, m_k/n_k · (1 + α·importance))`.
pub fn replace_prob(m_k: usize, n_k: u64, alpha: f64, importance: f64) -> f64 {
    if n_k == 0 {
        return 0.0;
    }
    (m_k as f64 / n_k as f64 * (1.0 + alpha * importance)).clamp(0.0, 1.0)
}
