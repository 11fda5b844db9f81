//! TransE embeddings: initialization, margin-loss training, evaluation, I/O.
//!
//! A relation is a translation in embedding space, so a true triple
//! `(h, l, t)` should satisfy `h + l ≈ t`. Training minimizes
//! `Σ [γ + d(h + l, t) − d(h' + l, t')]₊` over positives and corrupted
//! negatives, with entity vectors kept on the unit sphere.

mod eval;
mod io;
mod model;
mod train;

use thiserror::Error;

pub use eval::{evaluate_tails, filtered_tail_rank, LinkPredictionReport};
pub use io::{read_model, write_loss_trace, write_model};
pub use model::{init_bound, init_model, EmbeddingModel, NormKind};
pub use train::{
    corrupt_triple, pair_gradient, train, train_with, training_triples, EpochStats, IdTriple, PairGradient,
    TrainConfig, TrainOutcome,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransEError {
    #[error("entity count, relation count and dimension must all be at least 1")]
    InvalidDimension,
    #[error("unknown {0}")]
    UnknownId(String),
    #[error("corruption needs at least two entities")]
    Degenerate,
    #[error("no entity-to-entity triples to train on")]
    EmptyGraph,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model file line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
}
