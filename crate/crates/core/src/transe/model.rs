use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TransEError;
use crate::kgstore::{Catalog, EntityId, RelationId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormKind {
    L1,
    #[default]
    L2,
}

impl NormKind {
    pub fn norm(self, v: impl IntoIterator<Item = f64>) -> f64 {
        match self {
            NormKind::L1 => v.into_iter().map(f64::abs).sum(),
            NormKind::L2 => v.into_iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// `‖a − b‖` without allocating.
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        self.norm(a.iter().zip(b).map(|(x, y)| x - y))
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
        })
    }
}

impl FromStr for NormKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(NormKind::L1),
            "L2" => Ok(NormKind::L2),
            _ => Err(format!("unknown norm {s:?}, expected L1 or L2")),
        }
    }
}

/// Entity and relation vectors, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    norm: NormKind,
    entities: Catalog,
    relations: Catalog,
    entity_vectors: Vec<f64>,
    relation_vectors: Vec<f64>,
}

impl EmbeddingModel {
    /// Uniform initialization in `[-6/√k, 6/√k]` followed by L2 normalization
    /// of the relation vectors. Entity rows are drawn first, then relations.
    pub fn init(
        entities: Catalog,
        relations: Catalog,
        dim: usize,
        norm: NormKind,
        seed: u64,
    ) -> Result<Self, TransEError> {
        if entities.is_empty() || relations.is_empty() || dim == 0 {
            return Err(TransEError::InvalidDimension);
        }
        let bound = init_bound(dim);
        let uniform = Uniform::new_inclusive(-bound, bound);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entity_vectors = (0..entities.len() * dim).map(|_| uniform.sample(&mut rng)).collect();
        let relation_vectors = (0..relations.len() * dim).map(|_| uniform.sample(&mut rng)).collect();
        let mut model = Self { dim, norm, entities, relations, entity_vectors, relation_vectors };
        for r in 0..model.relations.len() {
            normalize_l2(model.relation_mut(r));
        }
        Ok(model)
    }

    pub(crate) fn from_parts(
        dim: usize,
        norm: NormKind,
        entities: Catalog,
        relations: Catalog,
        entity_vectors: Vec<f64>,
        relation_vectors: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(entity_vectors.len(), entities.len() * dim);
        debug_assert_eq!(relation_vectors.len(), relations.len() * dim);
        Self { dim, norm, entities, relations, entity_vectors, relation_vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> NormKind {
        self.norm
    }

    pub fn entities(&self) -> &Catalog {
        &self.entities
    }

    pub fn relations(&self) -> &Catalog {
        &self.relations
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity(&self, id: usize) -> &[f64] {
        &self.entity_vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn relation(&self, id: usize) -> &[f64] {
        &self.relation_vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn entity_by_key(&self, key: &str) -> Option<&[f64]> {
        self.entities.id(key).map(|id| self.entity(id))
    }

    pub fn entity_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.entity_vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn relation_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.relation_vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub(crate) fn entity_vectors_mut(&mut self) -> &mut [f64] {
        &mut self.entity_vectors
    }

    /// `‖h + l − t‖` under the model's norm.
    pub fn dissimilarity(&self, head: EntityId, relation: RelationId, tail: EntityId) -> Result<f64, TransEError> {
        let ne = self.n_entities();
        for id in [head.0, tail.0] {
            if id >= ne {
                return Err(TransEError::UnknownId(format!("entity {id}")));
            }
        }
        if relation.0 >= self.n_relations() {
            return Err(TransEError::UnknownId(format!("relation {}", relation.0)));
        }
        Ok(self.distance_unchecked(head.0, relation.0, tail.0))
    }

    pub(crate) fn distance_unchecked(&self, head: usize, relation: usize, tail: usize) -> f64 {
        let (h, l, t) = (self.entity(head), self.relation(relation), self.entity(tail));
        self.norm.norm((0..self.dim).map(|i| h[i] + l[i] - t[i]))
    }

    pub fn normalize_entities(&mut self) {
        let dim = self.dim;
        for row in self.entity_vectors_mut().chunks_mut(dim) {
            normalize_l2(row);
        }
    }

    /// Largest `|‖e‖₂ − 1|` over entity vectors.
    pub fn max_entity_norm_deviation(&self) -> f64 {
        self.entity_vectors
            .chunks(self.dim)
            .map(|row| (NormKind::L2.norm(row.iter().copied()) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entity_vectors.iter().chain(&self.relation_vectors).all(|x| x.is_finite())
    }
}

pub fn init_bound(dim: usize) -> f64 {
    6.0 / (dim as f64).sqrt()
}

/// Model over synthetic catalogs `urn:entity:<i>` / `urn:relation:<i>`.
pub fn init_model(
    n_entities: usize,
    n_relations: usize,
    dim: usize,
    norm: NormKind,
    seed: u64,
) -> Result<EmbeddingModel, TransEError> {
    let entities = (0..n_entities).map(|i| format!("urn:entity:{i}")).collect();
    let relations = (0..n_relations).map(|i| format!("urn:relation:{i}")).collect();
    EmbeddingModel::init(entities, relations, dim, norm, seed)
}

pub(crate) fn normalize_l2(row: &mut [f64]) {
    let n = NormKind::L2.norm(row.iter().copied());
    if n > 0.0 {
        row.iter_mut().for_each(|x| *x /= n);
    }
}
