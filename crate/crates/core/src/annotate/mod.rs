//! Entity linking for hypothesis text.

mod gazetteer;
mod spotlight;

use thiserror::Error;

pub use gazetteer::{annotate_offline, normalize_surface, Gazetteer, GazetteerEntry};
pub use spotlight::{parse_spotlight_response, SpotlightClient};

use crate::net::NetError;

/// The paper-default minimum linking confidence.
pub const DEFAULT_CONFIDENCE: f64 = 0.3;

/// A linked mention. `offset` counts characters, not bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub surface: String,
    pub offset: usize,
    pub iri: String,
    pub confidence: f64,
}

impl Annotation {
    pub fn char_len(&self) -> usize {
        self.surface.chars().count()
    }

    pub fn end(&self) -> usize {
        self.offset + self.char_len()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotateError {
    #[error("cannot annotate empty text")]
    EmptyText,
    #[error("gazetteer line {line}: {reason}")]
    Gazetteer { line: usize, reason: String },
    #[error(transparent)]
    Net(#[from] NetError),
}

pub enum AnnotationSource<'a> {
    Remote(&'a SpotlightClient),
    Offline(&'a Gazetteer),
}

pub fn annotate_text(text: &str, source: &AnnotationSource<'_>) -> Result<Vec<Annotation>, AnnotateError> {
    if text.trim().is_empty() {
        return Err(AnnotateError::EmptyText);
    }
    match source {
        AnnotationSource::Remote(client) => client.annotate(text),
        AnnotationSource::Offline(gazetteer) => Ok(annotate_offline(text, gazetteer)),
    }
}

/// Keeps annotations with `confidence >= threshold`, order preserved.
pub fn filter_annotations(annotations: &[Annotation], threshold: f64) -> Vec<Annotation> {
    annotations.iter().filter(|a| a.confidence >= threshold).cloned().collect()
}

/// Checks the annotation invariants against `text`: exact surface match at the
/// character offset, confidence in [0, 1], sorted and non-overlapping.
pub fn check_annotations(text: &str, annotations: &[Annotation]) -> Result<(), String> {
    let chars: Vec<char> = text.chars().collect();
    let mut prev_end = 0;
    for (i, a) in annotations.iter().enumerate() {
        if !(0.0..=1.0).contains(&a.confidence) {
            return Err(format!("annotation {i}: confidence {} outside [0, 1]", a.confidence));
        }
        if i > 0 && a.offset < prev_end {
            return Err(format!("annotation {i} overlaps or is out of order"));
        }
        let end = a.end();
        let span: Option<String> = chars.get(a.offset..end).map(|s| s.iter().collect());
        if span.as_deref() != Some(a.surface.as_str()) {
            return Err(format!("annotation {i}: surface {:?} not found at offset {}", a.surface, a.offset));
        }
        prev_end = end;
    }
    Ok(())
}
