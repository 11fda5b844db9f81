use std::fmt;
use std::str::FromStr;

use super::{Hypothesis, NBestError, NBestList};
use crate::relatedness::SentenceScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostField {
    #[default]
    Total,
    Subject,
    Object,
    Viterbi,
}

impl fmt::Display for CostField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostField::Total => "total",
            CostField::Subject => "subject",
            CostField::Object => "object",
            CostField::Viterbi => "viterbi",
        })
    }
}

impl FromStr for CostField {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "total" => Ok(CostField::Total),
            "subject" => Ok(CostField::Subject),
            "object" => Ok(CostField::Object),
            "viterbi" => Ok(CostField::Viterbi),
            _ => Err(format!("unknown cost field {s:?}")),
        }
    }
}

/// The cost columns of one scored hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSummary {
    pub subject: f64,
    pub object: f64,
    pub total: f64,
    pub viterbi: f64,
    pub n_entities: usize,
}

impl CostSummary {
    pub fn get(&self, field: CostField) -> f64 {
        match field {
            CostField::Total => self.total,
            CostField::Subject => self.subject,
            CostField::Object => self.object,
            CostField::Viterbi => self.viterbi,
        }
    }
}

impl From<&SentenceScore> for CostSummary {
    fn from(s: &SentenceScore) -> Self {
        Self {
            subject: s.relatedness.subject_cost,
            object: s.relatedness.object_cost,
            total: s.relatedness.total_cost,
            viterbi: s.viterbi.cost,
            n_entities: s.n_entities,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HypothesisScore {
    Scored(CostSummary),
    /// Fewer than two linked entities survived.
    Unscored,
}

impl HypothesisScore {
    pub fn summary(&self) -> Option<&CostSummary> {
        match self {
            HypothesisScore::Scored(c) => Some(c),
            HypothesisScore::Unscored => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescoredEntry {
    pub hypothesis: Hypothesis,
    pub score: HypothesisScore,
    pub new_rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescoredList {
    pub utterance: String,
    /// In new-rank order.
    pub entries: Vec<RescoredEntry>,
}

impl RescoredList {
    pub fn best(&self) -> Option<&Hypothesis> {
        self.entries.first().map(|e| &e.hypothesis)
    }
}

/// Stable ascending sort on the selected cost; unscored hypotheses follow
/// every scored one in their original order.
pub fn rescore(list: &NBestList, scores: &[HypothesisScore], field: CostField) -> Result<RescoredList, NBestError> {
    rank_by(list, scores, |c, _| c.get(field))
}

/// Ranks on `α·SRC/max(SRC) + (1−α)·(−asr_score)`, where the maximum runs over
/// the scored hypotheses of this list.
pub fn rescore_interpolated(
    list: &NBestList,
    scores: &[HypothesisScore],
    field: CostField,
    alpha: f64,
) -> Result<RescoredList, NBestError> {
    let max = scores.iter().filter_map(|s| s.summary()).map(|c| c.get(field)).fold(0.0, f64::max);
    rank_by(list, scores, |c, h| {
        let normalized = if max > 0.0 { c.get(field) / max } else { 0.0 };
        alpha * normalized + (1.0 - alpha) * (-h.asr_score)
    })
}

fn rank_by(
    list: &NBestList,
    scores: &[HypothesisScore],
    key: impl Fn(&CostSummary, &Hypothesis) -> f64,
) -> Result<RescoredList, NBestError> {
    if scores.len() != list.hypotheses.len() {
        return Err(NBestError::Misaligned {
            utterance: list.utterance.clone(),
            hypotheses: list.hypotheses.len(),
            costs: scores.len(),
        });
    }
    let mut scored: Vec<(f64, usize)> = Vec::new();
    let mut unscored: Vec<usize> = Vec::new();
    for (i, (s, h)) in scores.iter().zip(&list.hypotheses).enumerate() {
        match s {
            HypothesisScore::Scored(c) => scored.push((key(c, h), i)),
            HypothesisScore::Unscored => unscored.push(i),
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let entries = scored
        .into_iter()
        .map(|(_, i)| i)
        .chain(unscored)
        .enumerate()
        .map(|(pos, i)| RescoredEntry {
            hypothesis: list.hypotheses[i].clone(),
            score: scores[i],
            new_rank: pos + 1,
        })
        .collect();
    Ok(RescoredList { utterance: list.utterance.clone(), entries })
}
