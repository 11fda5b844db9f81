//! Semantic relatedness cost (SRC) of a hypothesis.
//!
//! Every annotated entity contributes a set of molecules, each embedded as
//! the (subject, object) vector pair of its triple. Adjacent entities are
//! compared component-wise: subject vectors against subject vectors and
//! object vectors against object vectors, never crossed. Two entities that
//! share a triple therefore have an adjacency cost of zero.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kgstore::{MoleculeSet, Triple};
use crate::transe::{EmbeddingModel, NormKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelatednessError {
    #[error("embedding dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("molecule set {0} is empty")]
    EmptyMoleculeSet(usize),
    #[error("need at least two entities, got {0}")]
    TooFewEntities(usize),
}

/// Subject and object embeddings of one molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeEmbedding {
    pub subject: Vec<f64>,
    pub object: Vec<f64>,
    pub source: Option<Triple>,
}

impl MoleculeEmbedding {
    pub fn new(subject: Vec<f64>, object: Vec<f64>) -> Self {
        Self { subject, object, source: None }
    }

    /// `None` if either end is missing from the model (e.g. a literal object).
    pub fn from_triple(model: &EmbeddingModel, triple: &Triple) -> Option<Self> {
        let subject = model.entity_by_key(&triple.subject().catalog_key())?.to_vec();
        let object = model.entity_by_key(&triple.object().catalog_key())?.to_vec();
        Some(Self { subject, object, source: Some(triple.clone()) })
    }

    pub fn dim(&self) -> usize {
        self.subject.len()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            subject: self.subject.iter().map(|x| x * c).collect(),
            object: self.object.iter().map(|x| x * c).collect(),
            source: self.source.clone(),
        }
    }
}

pub fn embed_molecules(model: &EmbeddingModel, set: &MoleculeSet) -> Vec<MoleculeEmbedding> {
    set.molecules.iter().filter_map(|t| MoleculeEmbedding::from_triple(model, t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// Minimum over every (a, b) molecule pair.
    #[default]
    Cross,
    /// Minimum over index-aligned pairs `(a[n], b[n])`, `n < min(|a|, |b|)`.
    Aligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Smallest adjacency cost along the sentence.
    Min,
    /// Sum of adjacency costs along the sentence.
    #[default]
    Sum,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($ty::$variant),)+
                    _ => Err(format!(concat!("unknown ", stringify!($ty), " {:?}"), s)),
                }
            }
        }
    };
}

keyword_enum!(Pairing { Cross => "cross", Aligned => "aligned" });
keyword_enum!(Aggregation { Min => "min", Sum => "sum" });

/// `δ` between two adjacent entities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdjacencyCost {
    pub subject: f64,
    pub object: f64,
}

impl AdjacencyCost {
    pub fn total(&self) -> f64 {
        self.subject + self.object
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelatednessCost {
    pub subject_cost: f64,
    pub object_cost: f64,
    pub total_cost: f64,
    /// One entry per adjacent entity pair, in sentence order.
    pub deltas: Vec<AdjacencyCost>,
    pub aggregation: Aggregation,
}

pub fn molecule_distance(
    a: &MoleculeEmbedding,
    b: &MoleculeEmbedding,
    norm: NormKind,
) -> Result<(f64, f64), RelatednessError> {
    for (x, y) in [(&a.subject, &b.subject), (&a.object, &b.object), (&a.subject, &a.object)] {
        if x.len() != y.len() {
            return Err(RelatednessError::DimensionMismatch(x.len(), y.len()));
        }
    }
    Ok(distance_unchecked(a, b, norm))
}

fn distance_unchecked(a: &MoleculeEmbedding, b: &MoleculeEmbedding, norm: NormKind) -> (f64, f64) {
    (norm.distance(&a.subject, &b.subject), norm.distance(&a.object, &b.object))
}

fn check_sets(sets: &[&[MoleculeEmbedding]]) -> Result<(), RelatednessError> {
    let mut dim = None;
    for (idx, set) in sets.iter().enumerate() {
        if set.is_empty() {
            return Err(RelatednessError::EmptyMoleculeSet(idx));
        }
        for m in set.iter() {
            let expected = *dim.get_or_insert(m.subject.len());
            for len in [m.subject.len(), m.object.len()] {
                if len != expected {
                    return Err(RelatednessError::DimensionMismatch(expected, len));
                }
            }
        }
    }
    Ok(())
}

/// Subject and object components are minimized independently.
pub fn adjacency_cost(
    a: &[MoleculeEmbedding],
    b: &[MoleculeEmbedding],
    pairing: Pairing,
    norm: NormKind,
) -> Result<AdjacencyCost, RelatednessError> {
    check_sets(&[a, b])?;
    Ok(adjacency_unchecked(a, b, pairing, norm))
}

fn adjacency_unchecked(
    a: &[MoleculeEmbedding],
    b: &[MoleculeEmbedding],
    pairing: Pairing,
    norm: NormKind,
) -> AdjacencyCost {
    let mut best = AdjacencyCost { subject: f64::INFINITY, object: f64::INFINITY };
    let mut consider = |x: &MoleculeEmbedding, y: &MoleculeEmbedding| {
        let (s, o) = distance_unchecked(x, y, norm);
        best.subject = best.subject.min(s);
        best.object = best.object.min(o);
    };
    match pairing {
        Pairing::Cross => {
            for x in a {
                for y in b {
                    consider(x, y);
                }
            }
        }
        Pairing::Aligned => a.iter().zip(b).for_each(|(x, y)| consider(x, y)),
    }
    best
}

pub fn sentence_cost(
    sets: &[Vec<MoleculeEmbedding>],
    aggregation: Aggregation,
    pairing: Pairing,
    norm: NormKind,
) -> Result<RelatednessCost, RelatednessError> {
    if sets.len() < 2 {
        return Err(RelatednessError::TooFewEntities(sets.len()));
    }
    let views: Vec<&[MoleculeEmbedding]> = sets.iter().map(Vec::as_slice).collect();
    check_sets(&views)?;
    let deltas: Vec<AdjacencyCost> =
        views.windows(2).map(|w| adjacency_unchecked(w[0], w[1], pairing, norm)).collect();
    let fold = |component: fn(&AdjacencyCost) -> f64| -> f64 {
        match aggregation {
            Aggregation::Min => deltas.iter().map(component).fold(f64::INFINITY, f64::min),
            Aggregation::Sum => deltas.iter().map(component).sum(),
        }
    };
    let subject_cost = fold(|d| d.subject);
    let object_cost = fold(|d| d.object);
    Ok(RelatednessCost {
        subject_cost,
        object_cost,
        total_cost: subject_cost + object_cost,
        deltas,
        aggregation,
    })
}

/// Cheapest consistent choice of one molecule per entity.
#[derive(Debug, Clone, PartialEq)]
pub struct ViterbiPath {
    pub cost: f64,
    /// Chosen molecule index for each entity.
    pub assignment: Vec<usize>,
}

/// Chain DP minimizing `Σ_t [subject_d + object_d](set_t[n_t], set_{t+1}[n_{t+1}])`.
///
/// Among optimal assignments the lexicographically smallest is returned.
/// The DP runs backwards (cost-to-go) so the forward readout can pick the
/// lowest index at each step.
pub fn viterbi_path_cost(sets: &[Vec<MoleculeEmbedding>], norm: NormKind) -> Result<ViterbiPath, RelatednessError> {
    let views: Vec<&[MoleculeEmbedding]> = sets.iter().map(Vec::as_slice).collect();
    check_sets(&views)?;
    let Some(last) = views.last() else {
        return Ok(ViterbiPath { cost: 0.0, assignment: Vec::new() });
    };
    let edge = |t: usize, i: usize, j: usize| {
        let (s, o) = distance_unchecked(&views[t][i], &views[t + 1][j], norm);
        s + o
    };
    let t_len = views.len();
    // to_go[t][i]: best cost of the suffix starting with molecule i at entity t.
    let mut to_go: Vec<Vec<f64>> = vec![Vec::new(); t_len];
    to_go[t_len - 1] = vec![0.0; last.len()];
    for t in (0..t_len - 1).rev() {
        to_go[t] = (0..views[t].len())
            .map(|i| {
                (0..views[t + 1].len())
                    .map(|j| edge(t, i, j) + to_go[t + 1][j])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
    }
    let argmin = |values: &mut dyn Iterator<Item = f64>| -> (usize, f64) {
        values.enumerate().fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
    };
    let (first, cost) = argmin(&mut to_go[0].iter().copied());
    let mut assignment = vec![first];
    for t in 0..t_len - 1 {
        let i = assignment[t];
        let (j, _) = argmin(&mut (0..views[t + 1].len()).map(|j| edge(t, i, j) + to_go[t + 1][j]));
        assignment.push(j);
    }
    Ok(ViterbiPath { cost, assignment })
}

/// Everything computed for one hypothesis' entity sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceScore {
    pub relatedness: RelatednessCost,
    pub viterbi: ViterbiPath,
    pub n_entities: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoringOptions {
    pub aggregation: Aggregation,
    pub pairing: Pairing,
    pub norm: NormKind,
}

impl ScoringOptions {
    /// Sum aggregation, cross pairing, L1 distances.
    pub fn pipeline_default() -> Self {
        Self { aggregation: Aggregation::Sum, pairing: Pairing::Cross, norm: NormKind::L1 }
    }
}

/// Scores an entity sequence; entities without embeddable molecules are
/// dropped first, and `None` means fewer than two remained.
pub fn score_sentence(
    sets: &[Vec<MoleculeEmbedding>],
    options: ScoringOptions,
) -> Result<Option<SentenceScore>, RelatednessError> {
    let usable: Vec<Vec<MoleculeEmbedding>> = sets.iter().filter(|s| !s.is_empty()).cloned().collect();
    if usable.len() < 2 {
        return Ok(None);
    }
    let relatedness = sentence_cost(&usable, options.aggregation, options.pairing, options.norm)?;
    let viterbi = viterbi_path_cost(&usable, options.norm)?;
    Ok(Some(SentenceScore { relatedness, viterbi, n_entities: usable.len() }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &[f64], o: &[f64]) -> MoleculeEmbedding {
        MoleculeEmbedding::new(s.to_vec(), o.to_vec())
    }

    #[test]
    fn molecule_distance_examples() {
        let a = m(&[1.0, 0.0], &[0.5, 0.5]);
        assert_eq!(molecule_distance(&a, &a, NormKind::L1).unwrap(), (0.0, 0.0));
        let shared_subject = m(&[1.0, 0.0], &[0.0, 2.0]);
        let (s, o) = molecule_distance(&a, &shared_subject, NormKind::L2).unwrap();
        assert_eq!(s, 0.0);
        assert!(o > 0.0);
        let b = m(&[0.0, 0.0], &[0.5, 0.5]);
        assert_eq!(molecule_distance(&a, &b, NormKind::L1).unwrap().0, 1.0);
        let short = m(&[0.0], &[0.0]);
        assert!(matches!(
            molecule_distance(&a, &short, NormKind::L1),
            Err(RelatednessError::DimensionMismatch(2, 1))
        ));
    }

    #[test]
    fn adjacency_identical_sets_and_shared_subject() {
        let set = vec![m(&[1.0, 2.0], &[3.0, 4.0]), m(&[0.0, 1.0], &[1.0, 0.0])];
        let c = adjacency_cost(&set, &set, Pairing::Cross, NormKind::L1).unwrap();
        assert_eq!((c.subject, c.object), (0.0, 0.0));
        let other = vec![m(&[5.0, 5.0], &[5.0, 5.0]), m(&[0.0, 1.0], &[9.0, 9.0])];
        let c = adjacency_cost(&set, &other, Pairing::Cross, NormKind::L1).unwrap();
        assert_eq!(c.subject, 0.0);
        assert!(c.object > 0.0);
        assert!(matches!(
            adjacency_cost(&set, &[], Pairing::Cross, NormKind::L1),
            Err(RelatednessError::EmptyMoleculeSet(1))
        ));
    }

    #[test]
    fn aligned_pairing_uses_shared_indices_only() {
        let a = vec![m(&[0.0], &[0.0]), m(&[10.0], &[10.0]), m(&[3.0], &[3.0])];
        let b = vec![m(&[1.0], &[2.0]), m(&[0.0], &[0.0])];
        let aligned = adjacency_cost(&a, &b, Pairing::Aligned, NormKind::L1).unwrap();
        assert_eq!((aligned.subject, aligned.object), (1.0, 2.0));
        let cross = adjacency_cost(&a, &b, Pairing::Cross, NormKind::L1).unwrap();
        assert_eq!((cross.subject, cross.object), (0.0, 0.0));
    }

    fn singleton_chain(subjects: &[f64]) -> Vec<Vec<MoleculeEmbedding>> {
        subjects.iter().map(|&s| vec![m(&[s], &[0.0])]).collect()
    }

    #[test]
    fn sentence_cost_aggregations() {
        // Adjacent subject distances 0.5, 0.2, 0.9.
        let sets = singleton_chain(&[0.0, 0.5, 0.7, 1.6]);
        let min = sentence_cost(&sets, Aggregation::Min, Pairing::Cross, NormKind::L1).unwrap();
        assert!((min.subject_cost - 0.2).abs() < 1e-12);
        let sum = sentence_cost(&sets, Aggregation::Sum, Pairing::Cross, NormKind::L1).unwrap();
        assert!((sum.subject_cost - 1.6).abs() < 1e-12);
        assert_eq!(sum.deltas.len(), 3);
        assert_eq!(sum.total_cost, sum.subject_cost + sum.object_cost);

        let two = singleton_chain(&[0.0, 0.25]);
        for agg in [Aggregation::Min, Aggregation::Sum] {
            let c = sentence_cost(&two, agg, Pairing::Cross, NormKind::L1).unwrap();
            assert_eq!(c.subject_cost, c.deltas[0].subject);
        }
        assert!(matches!(
            sentence_cost(&two[..1], Aggregation::Sum, Pairing::Cross, NormKind::L1),
            Err(RelatednessError::TooFewEntities(1))
        ));
    }

    #[test]
    fn viterbi_singletons_and_trivial_chain() {
        let sets = singleton_chain(&[0.0, 0.5, 0.7, 1.6]);
        let path = viterbi_path_cost(&sets, NormKind::L1).unwrap();
        assert!((path.cost - 1.6).abs() < 1e-12);
        assert_eq!(path.assignment, vec![0, 0, 0, 0]);
        let one = viterbi_path_cost(&sets[..1], NormKind::L1).unwrap();
        assert_eq!(one.cost, 0.0);
        assert_eq!(one.assignment, vec![0]);
    }

    #[test]
    fn viterbi_prefers_consistent_choice_and_lowest_index() {
        // Independent minima pick different molecules for the middle entity;
        // the chain must commit to one.
        let sets = vec![
            vec![m(&[0.0], &[0.0])],
            vec![m(&[0.0], &[5.0]), m(&[5.0], &[0.0])],
            vec![m(&[5.0], &[5.0])],
        ];
        let path = viterbi_path_cost(&sets, NormKind::L1).unwrap();
        assert_eq!(path.cost, 10.0);
        assert_eq!(path.assignment, vec![0, 0, 0]);
        let independent: f64 = sentence_cost(&sets, Aggregation::Sum, Pairing::Cross, NormKind::L1)
            .unwrap()
            .total_cost;
        assert!(independent <= path.cost);
    }

    #[test]
    fn score_sentence_drops_empty_sets() {
        let sets = vec![vec![m(&[0.0], &[0.0])], vec![], vec![m(&[1.0], &[1.0])]];
        let s = score_sentence(&sets, ScoringOptions::pipeline_default()).unwrap().unwrap();
        assert_eq!(s.n_entities, 2);
        assert_eq!(s.relatedness.total_cost, 2.0);
        assert!(score_sentence(&sets[..2], ScoringOptions::pipeline_default()).unwrap().is_none());
    }

    #[test]
    fn keyword_parsing() {
        assert_eq!("Cross".parse::<Pairing>().unwrap(), Pairing::Cross);
        assert_eq!("aligned".parse::<Pairing>().unwrap(), Pairing::Aligned);
        assert_eq!("min".parse::<Aggregation>().unwrap(), Aggregation::Min);
        assert_eq!(Aggregation::Sum.to_string(), "sum");
        assert!("max".parse::<Aggregation>().is_err());
    }
}
