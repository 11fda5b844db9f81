use std::collections::HashMap;
use std::io::{BufRead, Write};

use indexmap::IndexMap;

use super::{Hypothesis, NBestError, NBestList};

/// The paper-default N-best depth.
pub const DEFAULT_N_MAX: usize = 30;

pub fn parse_nbest<R: BufRead>(input: R) -> Result<Vec<NBestList>, NBestError> {
    parse_nbest_with(input, DEFAULT_N_MAX)
}

/// Parses `utt_id<TAB>rank<TAB>asr_score<TAB>text` lines. Utterances keep the
/// order of their first line; hypotheses ranked beyond `n_max` are dropped
/// after rank validation.
pub fn parse_nbest_with<R: BufRead>(input: R, n_max: usize) -> Result<Vec<NBestList>, NBestError> {
    let mut groups: IndexMap<String, Vec<Hypothesis>> = IndexMap::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| NBestError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| NBestError::MalformedLine { line: line_no, reason: reason.to_string() };
        let mut fields = line.splitn(4, '\t');
        let (Some(utt), Some(rank), Some(score), Some(text)) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad("expected utt_id<TAB>rank<TAB>asr_score<TAB>text"));
        };
        let utterance = utt.trim();
        if utterance.is_empty() {
            return Err(bad("empty utterance id"));
        }
        let asr_rank: usize = rank.trim().parse().map_err(|_| bad("rank is not a positive integer"))?;
        if asr_rank == 0 {
            return Err(bad("rank must be at least 1"));
        }
        let asr_score: f64 = score.trim().parse().map_err(|_| bad("asr_score is not a number"))?;
        if !asr_score.is_finite() {
            return Err(bad("asr_score must be finite"));
        }
        let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if words.is_empty() {
            return Err(bad("empty hypothesis"));
        }
        groups.entry(utterance.to_string()).or_default().push(Hypothesis {
            utterance: utterance.to_string(),
            asr_rank,
            asr_score,
            text: text.trim().to_string(),
            words,
        });
    }

    let mut lists = Vec::with_capacity(groups.len());
    for (utterance, mut hypotheses) in groups {
        hypotheses.sort_by_key(|h| h.asr_rank);
        for pair in hypotheses.windows(2) {
            if pair[0].asr_rank == pair[1].asr_rank {
                return Err(NBestError::DuplicateRank { utterance, rank: pair[0].asr_rank });
            }
        }
        if hypotheses.iter().enumerate().any(|(i, h)| h.asr_rank != i + 1) {
            return Err(NBestError::GappedRanks { expected: hypotheses.len(), utterance });
        }
        hypotheses.truncate(n_max.max(1));
        lists.push(NBestList { utterance, hypotheses, reference: None });
    }
    Ok(lists)
}

/// `utt_id<TAB>reference text` lines.
pub fn parse_references<R: BufRead>(input: R) -> Result<HashMap<String, String>, NBestError> {
    let mut refs = HashMap::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| NBestError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((utt, text)) = line.split_once('\t') else {
            return Err(NBestError::MalformedLine {
                line: idx + 1,
                reason: "expected utt_id<TAB>reference text".into(),
            });
        };
        refs.insert(utt.trim().to_string(), text.trim().to_string());
    }
    Ok(refs)
}

/// Writes hypotheses in the input format with the given ranks.
pub fn write_nbest<'a, W, I>(mut out: W, rows: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (usize, &'a Hypothesis)>,
{
    for (rank, h) in rows {
        writeln!(out, "{}\t{}\t{}\t{}", h.utterance, rank, h.asr_score, h.text)?;
    }
    Ok(())
}
