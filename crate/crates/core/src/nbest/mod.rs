//! N-best lists: parsing, SRC rescoring and word error rate.

mod parse;
mod rescore;
mod wer;

use thiserror::Error;

pub use parse::{parse_nbest, parse_nbest_with, parse_references, write_nbest, DEFAULT_N_MAX};
pub use rescore::{CostField, CostSummary, HypothesisScore, RescoredEntry, RescoredList, rescore, rescore_interpolated};
pub use wer::{tokenize, word_error_rate, WerStats};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub utterance: String,
    pub asr_rank: usize,
    /// Recognizer score, higher is better.
    pub asr_score: f64,
    /// Raw hypothesis text as read from the file.
    pub text: String,
    pub words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    pub utterance: String,
    /// Sorted by `asr_rank`, which runs 1..=len without gaps.
    pub hypotheses: Vec<Hypothesis>,
    pub reference: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NBestError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("utterance {utterance}: rank {rank} appears more than once")]
    DuplicateRank { utterance: String, rank: usize },
    #[error("utterance {utterance}: ranks are not 1..{expected} without gaps")]
    GappedRanks { utterance: String, expected: usize },
    #[error("utterance {utterance}: {costs} costs for {hypotheses} hypotheses")]
    Misaligned { utterance: String, hypotheses: usize, costs: usize },
    #[error("reference is empty")]
    EmptyReference,
    #[error("I/O error: {0}")]
    Io(String),
}
