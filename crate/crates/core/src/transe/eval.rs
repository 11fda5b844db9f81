use std::collections::HashSet;

use super::model::EmbeddingModel;
use super::train::IdTriple;
use crate::par::Executor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPredictionReport {
    pub queries: usize,
    pub mean_rank: f64,
    pub mean_reciprocal_rank: f64,
    pub hits_at_10: f64,
}

impl LinkPredictionReport {
    /// Mean rank of a uniformly random scorer over `n` candidates.
    pub fn random_mean_rank(n_entities: usize) -> f64 {
        (n_entities as f64 + 1.0) / 2.0
    }

    pub fn random_hits_at_10(n_entities: usize) -> f64 {
        (10.0 / n_entities as f64).min(1.0)
    }
}

/// Filtered tail rank of `query`: 1 + the number of candidate tails scoring
/// strictly better than the true tail, skipping candidates that form a known
/// triple.
pub fn filtered_tail_rank(model: &EmbeddingModel, query: IdTriple, known: &HashSet<IdTriple>) -> usize {
    let (h, r, t) = (query.head.0, query.relation.0, query.tail.0);
    let truth = model.distance_unchecked(h, r, t);
    let better = (0..model.n_entities())
        .filter(|&e| e != t)
        .filter(|&e| !known.contains(&IdTriple::new(h, r, e)))
        .filter(|&e| model.distance_unchecked(h, r, e) < truth)
        .count();
    better + 1
}

/// Filtered tail prediction over `queries`, one rank per query computed on
/// the executor.
pub fn evaluate_tails(
    model: &EmbeddingModel,
    queries: &[IdTriple],
    known: &HashSet<IdTriple>,
    exec: &Executor,
) -> LinkPredictionReport {
    let ranks = exec.map(queries, |&q| filtered_tail_rank(model, q, known));
    let n = ranks.len().max(1) as f64;
    LinkPredictionReport {
        queries: ranks.len(),
        mean_rank: ranks.iter().sum::<usize>() as f64 / n,
        mean_reciprocal_rank: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
        hits_at_10: ranks.iter().filter(|&&r| r <= 10).count() as f64 / n,
    }
}
