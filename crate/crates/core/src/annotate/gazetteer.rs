use std::collections::HashMap;
use std::io::BufRead;

use indexmap::IndexMap;

use super::{AnnotateError, Annotation};

#[derive(Debug, Clone, PartialEq)]
pub struct GazetteerEntry {
    pub iri: String,
    pub confidence: f64,
}

/// Offline surface-form dictionary.
///
/// Keys are normalized (lowercased, whitespace collapsed). Matching works on
/// words, the maximal runs of alphanumeric characters, so a key matches at
/// word boundaries regardless of case, spacing or surrounding punctuation.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: IndexMap<String, GazetteerEntry>,
    by_words: HashMap<Vec<String>, usize>,
    max_words: usize,
}

pub fn normalize_surface(surface: &str) -> String {
    surface.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// `(start, end)` character ranges of the words of `chars`.
fn word_spans(chars: &[char]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in chars.iter().enumerate() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, chars.len()));
    }
    spans
}

fn words_of(chars: &[char], spans: &[(usize, usize)]) -> Vec<String> {
    spans.iter().map(|&(s, e)| chars[s..e].iter().collect::<String>().to_lowercase()).collect()
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, surface: &str) -> Option<&GazetteerEntry> {
        self.entries.get(&normalize_surface(surface))
    }

    pub fn insert(&mut self, surface: &str, iri: &str, confidence: f64) -> Result<(), String> {
        let key = normalize_surface(surface);
        if key.is_empty() {
            return Err("empty surface form".into());
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(format!("confidence {confidence} outside [0, 1]"));
        }
        if self.entries.contains_key(&key) {
            return Err(format!("duplicate surface form {key:?}"));
        }
        let chars: Vec<char> = key.chars().collect();
        let words = words_of(&chars, &word_spans(&chars));
        if words.is_empty() {
            return Err(format!("surface form {key:?} has no words"));
        }
        if self.by_words.contains_key(&words) {
            return Err(format!("surface form {key:?} matches the same words as an earlier entry"));
        }
        self.max_words = self.max_words.max(words.len());
        let (idx, _) = self.entries.insert_full(key, GazetteerEntry { iri: iri.to_string(), confidence });
        self.by_words.insert(words, idx);
        Ok(())
    }

    /// TSV `surface<TAB>iri<TAB>confidence`; confidence defaults to 1.0 when
    /// the column is absent. Blank and `#` lines are skipped.
    pub fn from_tsv<R: BufRead>(input: R) -> Result<Self, AnnotateError> {
        let mut g = Self::new();
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: String| AnnotateError::Gazetteer { line: line_no, reason };
            let line = line.map_err(|e| err(e.to_string()))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let (surface, iri, confidence) = match fields.as_slice() {
                [s, i] => (*s, *i, 1.0),
                [s, i, c] => (*s, *i, c.trim().parse::<f64>().map_err(|_| err(format!("invalid confidence {c:?}")))?),
                _ => return Err(err("expected surface<TAB>iri<TAB>confidence".into())),
            };
            g.insert(surface, iri.trim(), confidence).map_err(err)?;
        }
        Ok(g)
    }
}

/// Longest match wins across the whole text; equal lengths go to the
/// leftmost start. Output is sorted by offset and non-overlapping.
pub fn annotate_offline(text: &str, gazetteer: &Gazetteer) -> Vec<Annotation> {
    if gazetteer.is_empty() {
        return Vec::new();
    }
    let chars: Vec<char> = text.chars().collect();
    let spans = word_spans(&chars);
    let words = words_of(&chars, &spans);

    // (char_start, char_end, entry index)
    let mut candidates = Vec::new();
    for start in 0..words.len() {
        let max_len = gazetteer.max_words.min(words.len() - start);
        for len in 1..=max_len {
            if let Some(&idx) = gazetteer.by_words.get(&words[start..start + len]) {
                candidates.push((spans[start].0, spans[start + len - 1].1, idx));
            }
        }
    }
    candidates.sort_by_key(|&(s, e, _)| (std::cmp::Reverse(e - s), s));

    let mut taken = vec![false; chars.len()];
    let mut chosen = Vec::new();
    for (s, e, idx) in candidates {
        if taken[s..e].iter().any(|&t| t) {
            continue;
        }
        taken[s..e].iter_mut().for_each(|t| *t = true);
        chosen.push((s, e, idx));
    }
    chosen.sort_by_key(|&(s, _, _)| s);
    chosen
        .into_iter()
        .map(|(s, e, idx)| {
            let (_, entry) = gazetteer.entries.get_index(idx).expect("index from the same gazetteer");
            Annotation {
                surface: chars[s..e].iter().collect(),
                offset: s,
                iri: entry.iri.clone(),
                confidence: entry.confidence,
            }
        })
        .collect()
}
