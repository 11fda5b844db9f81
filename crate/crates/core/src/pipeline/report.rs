//! Cost-report CSV and WER summaries.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::nbest::{
    tokenize, word_error_rate, CostSummary, HypothesisScore, NBestError, NBestList, RescoredList,
};
use crate::relatedness::{Aggregation, Pairing};

pub const COST_HEADER: &str =
    "utt_id,rank,subject_cost,object_cost,total_cost,viterbi_cost,n_entities,aggregation,pairing";

/// One cost-report row; `rank` is the recognizer rank of the hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub utterance: String,
    pub rank: usize,
    pub score: HypothesisScore,
    /// Linked entities that had embeddable molecules.
    pub n_entities: usize,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Unscored hypotheses carry `NA` in every cost column.
pub fn write_cost_csv<W: Write>(
    mut out: W,
    rows: &[CostRow],
    aggregation: Aggregation,
    pairing: Pairing,
) -> std::io::Result<()> {
    writeln!(out, "{COST_HEADER}")?;
    for row in rows {
        let costs = match &row.score {
            HypothesisScore::Scored(c) => format!("{},{},{},{}", c.subject, c.object, c.total, c.viterbi),
            HypothesisScore::Unscored => "NA,NA,NA,NA".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&row.utterance),
            row.rank,
            costs,
            row.n_entities,
            aggregation,
            pairing
        )?;
    }
    Ok(())
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => fields.push(std::mem::take(&mut cur)),
            (c, _) => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

/// Reads a cost report back, keyed by `(utt_id, rank)`.
pub fn read_cost_csv<R: BufRead>(input: R) -> Result<HashMap<(String, usize), HypothesisScore>, NBestError> {
    let mut out = HashMap::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| NBestError::Io(e.to_string()))?;
        let bad = |reason: &str| NBestError::MalformedLine { line: line_no, reason: reason.to_string() };
        if line_no == 1 {
            if line.trim() != COST_HEADER {
                return Err(bad("unexpected cost report header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f = split_csv_line(&line);
        if f.len() != 9 {
            return Err(bad("expected 9 columns"));
        }
        let rank: usize = f[1].parse().map_err(|_| bad("invalid rank"))?;
        let n_entities: usize = f[6].parse().map_err(|_| bad("invalid n_entities"))?;
        let score = if f[2] == "NA" {
            HypothesisScore::Unscored
        } else {
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad("invalid cost"));
            HypothesisScore::Scored(CostSummary {
                subject: num(&f[2])?,
                object: num(&f[3])?,
                total: num(&f[4])?,
                viterbi: num(&f[5])?,
                n_entities,
            })
        };
        out.insert((f[0].clone(), rank), score);
    }
    Ok(out)
}

/// Corpus-level error counts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorpusWer {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_words: usize,
}

impl CorpusWer {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    pub fn wer(&self) -> f64 {
        if self.reference_words == 0 {
            0.0
        } else {
            self.errors() as f64 / self.reference_words as f64
        }
    }

    fn add(&mut self, s: &crate::nbest::WerStats) {
        self.substitutions += s.substitutions;
        self.deletions += s.deletions;
        self.insertions += s.insertions;
        self.reference_words += s.reference_len;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WerSummary {
    pub utterances: usize,
    pub original: CorpusWer,
    pub rescored: CorpusWer,
    /// Best hypothesis per utterance, ties to the lower recognizer rank.
    pub oracle: CorpusWer,
}

/// Compares recognizer 1-best, rescored 1-best and oracle over utterances
/// that have a reference. Utterances without one are skipped.
pub fn wer_summary(
    lists: &[NBestList],
    rescored: &[RescoredList],
    references: &HashMap<String, String>,
) -> Result<WerSummary, NBestError> {
    let mut summary = WerSummary::default();
    for (list, resc) in lists.iter().zip(rescored) {
        let Some(reference) = references.get(&list.utterance) else {
            continue;
        };
        let reference = tokenize(reference);
        let score = |text: &str| word_error_rate(&reference, &tokenize(text));
        let per_hyp =
            list.hypotheses.iter().map(|h| score(&h.text)).collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = per_hyp.first() {
            summary.original.add(first);
        }
        if let Some(best) = resc.best() {
            summary.rescored.add(&score(&best.text)?);
        }
        if let Some(oracle) = per_hyp.iter().min_by_key(|s| s.errors()) {
            summary.oracle.add(oracle);
        }
        summary.utterances += 1;
    }
    Ok(summary)
}

pub fn write_wer_summary<W: Write>(mut out: W, summary: &WerSummary) -> std::io::Result<()> {
    writeln!(out, "system,utterances,substitutions,deletions,insertions,reference_words,wer")?;
    for (name, w) in [
        ("original_1best", &summary.original),
        ("rescored_1best", &summary.rescored),
        ("oracle", &summary.oracle),
    ] {
        writeln!(
            out,
            "{name},{},{},{},{},{},{}",
            summary.utterances,
            w.substitutions,
            w.deletions,
            w.insertions,
            w.reference_words,
            w.wer()
        )?;
    }
    Ok(())
}
