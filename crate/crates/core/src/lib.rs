//! Streaming graph neural networks trained incrementally.
//!
//! The crate holds an evolving attributed graph ([`graph`]), a mean-aggregator
//! GNN with exact gradients ([`gnn`]), influenced-node detection
//! ([`detection`]), a class-stratified replay memory ([`memory`]),
//! Fisher-weighted consolidation ([`consolidation`]), the per-step training
//! loop and baselines ([`trainer`]), a synthetic stream generator
//! ([`synth`]) and the experiment harness ([`harness`]).

pub mod config;
pub mod consolidation;
pub mod detection;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod memory;
pub mod metrics;
pub mod synth;
pub mod trainer;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use gnn::{Activation, GnnParams, Gradients, TrainItem};
pub use graph::{EgoNet, GraphState, GraphView, NewNode, NodeId, SnapshotDelta};
pub use linalg::Matrix;
pub use memory::{Memory, MemoryStrategy};
