use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{EmbeddingModel, NormKind};
use super::TransEError;
use crate::kgstore::{EntityId, RelationId, TripleStore};
use crate::par::Executor;

/// A triple in catalog-id form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IdTriple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl IdTriple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Self { head: EntityId(head), relation: RelationId(relation), tail: EntityId(tail) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub norm: NormKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 100,
            batch_size: 128,
            seed: 0,
            norm: NormKind::L2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TransEError> {
        if self.dim == 0 {
            return Err(TransEError::InvalidDimension);
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(TransEError::InvalidConfig(format!("margin {} must be >= 0", self.margin)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TransEError::InvalidConfig(format!(
                "learning rate {} must be > 0",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(TransEError::InvalidConfig("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean hinge loss per training triple, measured before each batch update.
    pub mean_loss: f64,
    /// Max `|‖e‖₂ − 1|` over entities once the epoch finished.
    pub max_norm_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EmbeddingModel,
    pub trace: Vec<EpochStats>,
}

impl TrainOutcome {
    pub fn losses(&self) -> Vec<f64> {
        self.trace.iter().map(|s| s.mean_loss).collect()
    }
}

/// Replaces the head or the tail (probability 1/2 each) with a uniformly
/// drawn entity, redrawing while the replacement equals the original.
pub fn corrupt_triple<R: Rng + ?Sized>(
    triple: IdTriple,
    n_entities: usize,
    rng: &mut R,
) -> Result<IdTriple, TransEError> {
    if n_entities < 2 {
        return Err(TransEError::Degenerate);
    }
    let replace_head = rng.gen_bool(0.5);
    let original = if replace_head { triple.head } else { triple.tail };
    let replacement = loop {
        let e = EntityId(rng.gen_range(0..n_entities));
        if e != original {
            break e;
        }
    };
    let mut out = triple;
    if replace_head {
        out.head = replacement;
    } else {
        out.tail = replacement;
    }
    Ok(out)
}

/// Subgradient contribution of one (positive, negative) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    /// `γ + d(pos) − d(neg)` before clamping.
    pub raw_loss: f64,
    /// Per-entity gradient rows; an entity may appear more than once.
    pub entities: Vec<(EntityId, Vec<f64>)>,
    /// Per-relation gradient rows; one per side of the pair.
    pub relations: Vec<(RelationId, Vec<f64>)>,
}

impl PairGradient {
    pub fn loss(&self) -> f64 {
        self.raw_loss.max(0.0)
    }

    pub fn is_active(&self) -> bool {
        self.raw_loss > 0.0
    }
}

/// Hinge loss `[γ + d(h+l,t) − d(h'+l,t')]₊` and its subgradient.
///
/// Inactive pairs (loss ≤ 0) carry empty gradients. The norm gradient at
/// `d = 0` is taken as zero.
pub fn pair_gradient(model: &EmbeddingModel, margin: f64, pos: IdTriple, neg: IdTriple) -> PairGradient {
    let dim = model.dim();
    let norm = model.norm_kind();
    let residual = |t: IdTriple| -> Vec<f64> {
        let (h, l, e) = (model.entity(t.head.0), model.relation(t.relation.0), model.entity(t.tail.0));
        (0..dim).map(|i| h[i] + l[i] - e[i]).collect()
    };
    let pos_res = residual(pos);
    let neg_res = residual(neg);
    let d_pos = norm.norm(pos_res.iter().copied());
    let d_neg = norm.norm(neg_res.iter().copied());
    let raw_loss = margin + (d_pos - d_neg);
    if raw_loss <= 0.0 {
        return PairGradient { raw_loss, entities: Vec::new(), relations: Vec::new() };
    }
    let g_pos = norm_gradient(norm, &pos_res, d_pos);
    let g_neg = norm_gradient(norm, &neg_res, d_neg);
    let neg_of = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
    let entities = vec![
        (pos.head, g_pos.clone()),
        (pos.tail, neg_of(&g_pos)),
        (neg.head, neg_of(&g_neg)),
        (neg.tail, g_neg.clone()),
    ];
    let relations = vec![(pos.relation, g_pos), (neg.relation, neg_of(&g_neg))];
    PairGradient { raw_loss, entities, relations }
}

fn norm_gradient(norm: NormKind, residual: &[f64], d: f64) -> Vec<f64> {
    match norm {
        NormKind::L2 if d > 0.0 => residual.iter().map(|x| x / d).collect(),
        NormKind::L2 => vec![0.0; residual.len()],
        NormKind::L1 => residual
            .iter()
            .map(|&x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 })
            .collect(),
    }
}

/// Triples with an entity on both sides.
pub fn training_triples(store: &TripleStore) -> Vec<IdTriple> {
    store
        .encoded()
        .iter()
        .filter_map(|e| e.tail.map(|tail| IdTriple { head: e.head, relation: e.relation, tail }))
        .collect()
}

pub fn train(store: &TripleStore, config: &TrainConfig) -> Result<TrainOutcome, TransEError> {
    train_with(store, config, &Executor::sequential())
}

/// Minibatch SGD on the margin ranking loss.
///
/// Each epoch normalizes entity vectors, shuffles the triples, and for each
/// minibatch pairs every positive with one corrupted negative. Gradients of a
/// batch are evaluated at the parameters from the start of the batch (in
/// parallel when the executor allows) and then applied in batch order, so the
/// result does not depend on the executor. Entities are renormalized once the
/// epoch's updates are done.
pub fn train_with(
    store: &TripleStore,
    config: &TrainConfig,
    exec: &Executor,
) -> Result<TrainOutcome, TransEError> {
    config.validate()?;
    let triples = training_triples(store);
    if triples.is_empty() {
        return Err(TransEError::EmptyGraph);
    }
    let n_entities = store.entities().len();
    if n_entities < 2 {
        return Err(TransEError::Degenerate);
    }
    let mut model = EmbeddingModel::init(
        store.entities().clone(),
        store.relations().clone(),
        config.dim,
        config.norm,
        config.seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order = triples.clone();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        model.normalize_entities();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let pairs = batch
                .iter()
                .map(|&pos| corrupt_triple(pos, n_entities, &mut rng).map(|neg| (pos, neg)))
                .collect::<Result<Vec<_>, _>>()?;
            let grads = exec.map(&pairs, |&(pos, neg)| pair_gradient(&model, config.margin, pos, neg));
            for g in &grads {
                loss_sum += g.loss();
            }
            apply(&mut model, &grads, config.learning_rate);
        }
        model.normalize_entities();
        trace.push(EpochStats {
            epoch,
            mean_loss: loss_sum / triples.len() as f64,
            max_norm_deviation: model.max_entity_norm_deviation(),
        });
    }
    Ok(TrainOutcome { model, trace })
}

fn apply(model: &mut EmbeddingModel, grads: &[PairGradient], lr: f64) {
    for g in grads.iter().filter(|g| g.is_active()) {
        for (entity, row) in &g.entities {
            model.entity_mut(entity.0).iter_mut().zip(row).for_each(|(p, d)| *p -= lr * d);
        }
        for (relation, row) in &g.relations {
            model.relation_mut(relation.0).iter_mut().zip(row).for_each(|(p, d)| *p -= lr * d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgstore::Triple;
    use crate::transe::model::init_model;

    fn cycle_store(n: usize) -> TripleStore {
        let triples = (0..n).map(|i| {
            Triple::iris(&format!("urn:e{i}"), "urn:next", &format!("urn:e{}", (i + 1) % n))
        });
        TripleStore::from_triples(triples, false)
    }

    #[test]
    fn corruption_changes_exactly_one_slot() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = IdTriple::new(2, 0, 5);
        for _ in 0..2000 {
            let c = corrupt_triple(t, 7, &mut rng).unwrap();
            assert_eq!(c.relation, t.relation);
            let changed = (c.head != t.head) as u8 + (c.tail != t.tail) as u8;
            assert_eq!(changed, 1);
        }
        // Works even for self-loops and the two-entity minimum.
        let c = corrupt_triple(IdTriple::new(0, 0, 0), 2, &mut rng).unwrap();
        assert_ne!(c, IdTriple::new(0, 0, 0));
    }

    #[test]
    fn corruption_needs_two_entities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            corrupt_triple(IdTriple::new(0, 0, 0), 1, &mut rng),
            Err(TransEError::Degenerate)
        ));
    }

    #[test]
    fn head_replacement_fraction_is_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let t = IdTriple::new(1, 0, 2);
        let heads = (0..10_000)
            .filter(|_| corrupt_triple(t, 50, &mut rng).unwrap().head != t.head)
            .count();
        let frac = heads as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&frac), "{frac}");
    }

    #[test]
    fn identical_negative_saturates_margin() {
        let m = init_model(5, 2, 6, NormKind::L2, 1).unwrap();
        for gamma in [0.0, 0.5, 1.0, 2.25] {
            let t = IdTriple::new(0, 1, 3);
            assert_eq!(pair_gradient(&m, gamma, t, t).loss(), gamma);
        }
    }

    #[test]
    fn zero_epochs_returns_the_initial_model() {
        let store = cycle_store(8);
        let cfg = TrainConfig { dim: 8, epochs: 0, seed: 5, ..Default::default() };
        let out = train(&store, &cfg).unwrap();
        assert!(out.trace.is_empty());
        let init = EmbeddingModel::init(
            store.entities().clone(),
            store.relations().clone(),
            8,
            NormKind::L2,
            5,
        )
        .unwrap();
        assert_eq!(out.model, init);
    }

    #[test]
    fn loss_decreases_on_cycle_graph() {
        let store = cycle_store(8);
        let cfg = TrainConfig { dim: 8, epochs: 200, margin: 1.0, learning_rate: 0.01, ..Default::default() };
        let out = train(&store, &cfg).unwrap();
        let losses = out.losses();
        assert_eq!(losses.len(), 200);
        assert!(losses[199] < losses[0], "{} !< {}", losses[199], losses[0]);
        assert!(losses.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn training_is_deterministic_and_executor_independent() {
        let store = cycle_store(12);
        let cfg = TrainConfig { dim: 10, epochs: 30, batch_size: 4, seed: 77, ..Default::default() };
        let a = train(&store, &cfg).unwrap();
        let b = train(&store, &cfg).unwrap();
        assert_eq!(a.losses(), b.losses());
        assert_eq!(a.model, b.model);
        let c = train_with(&store, &cfg, &Executor::new(4)).unwrap();
        assert_eq!(a.losses(), c.losses());
        assert_eq!(a.model, c.model);
    }

    #[test]
    fn entity_norms_hold_after_every_epoch() {
        let store = cycle_store(10);
        for norm in [NormKind::L1, NormKind::L2] {
            let cfg = TrainConfig { dim: 6, epochs: 25, batch_size: 3, norm, ..Default::default() };
            let out = train(&store, &cfg).unwrap();
            assert!(out.trace.iter().all(|s| s.max_norm_deviation < 1e-9));
            assert!(out.model.is_finite());
        }
    }

    #[test]
    fn error_paths() {
        let empty = TripleStore::from_triples(std::iter::empty(), false);
        assert!(matches!(train(&empty, &TrainConfig::default()), Err(TransEError::EmptyGraph)));
        let literal_only = TripleStore::parse_str("<urn:a> <urn:p> \"x\" .\n").unwrap();
        assert!(matches!(train(&literal_only, &TrainConfig::default()), Err(TransEError::EmptyGraph)));
        let one = TripleStore::from_triples([Triple::iris("urn:a", "urn:p", "urn:a")], false);
        assert!(matches!(train(&one, &TrainConfig::default()), Err(TransEError::Degenerate)));
        let bad = TrainConfig { batch_size: 0, ..Default::default() };
        assert!(matches!(train(&cycle_store(3), &bad), Err(TransEError::InvalidConfig(_))));
    }
}
