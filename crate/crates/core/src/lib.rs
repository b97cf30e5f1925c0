//! Hierarchical fashion graph network (HFGN).
//!
//! Models users, outfits and fashion items as a three-level graph and learns
//! representations by propagating messages upward: item-to-item within each
//! outfit (guided by category co-occurrence weights), items into outfit
//! embeddings, and historical outfits into user embeddings. Two heads share
//! those representations, a personalized recommendation score and an outfit
//! compatibility score, trained jointly with pairwise (BPR) ranking losses.
//!
//! The crate is self-contained: a small dense tensor type with reverse-mode
//! differentiation ([`tape`]), graph construction ([`graph`]), the model
//! forward pass ([`model`]), joint Adam training ([`train`]), ranking and
//! fill-in-the-blank evaluation ([`eval`]), and dataset tooling including a
//! planted-structure synthetic generator ([`data`], [`synth`]).

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod eval;
pub mod graph;
pub mod model;
pub mod synth;
pub mod tape;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use data::{kcore_filter, load_dataset, DataSplit, Dataset, SplitSpec};
pub use eval::{evaluate_topk, fitb_accuracy, FitbQuery, MetricsReport};
pub use graph::{CategoryGraph, EntityCounts, EntityIndex, HierarchicalGraph, OutfitItemGraph};
pub use model::{Model, ModelConfig, ModelParams};
pub use synth::{generate_synthetic, SyntheticSpec};
pub use tape::{NodeRef, Tape};
pub use tensor::Tensor;
pub use train::{train, TrainConfig, TrainOutcome};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("training error: {0}")]
    Train(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
