//! Client for Spotlight-compatible annotation services.
//!
//! Request: `POST <endpoint>` with form fields `text` and `confidence`,
//! `Accept: application/json`. Response: a JSON object whose optional
//! `Resources` array holds objects with `@URI`, `@surfaceForm`, `@offset` and
//! `@similarityScore` (decimal strings). `@offset` counts UTF-16 code units,
//! as the reference service is JVM-based, and is converted to characters.

use std::time::Duration;

use serde_json::Value;

use super::{check_annotations, AnnotateError, Annotation, DEFAULT_CONFIDENCE};
use crate::net::{self, NetError};

pub struct SpotlightClient {
    endpoint: String,
    confidence: f64,
    agent: ureq::Agent,
}

impl SpotlightClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            confidence: DEFAULT_CONFIDENCE,
            agent: net::agent(Duration::from_secs(30)),
        }
    }

    /// Confidence sent to the service; results are still filtered locally.
    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn annotate(&self, text: &str) -> Result<Vec<Annotation>, AnnotateError> {
        let confidence = self.confidence.to_string();
        let response = self
            .agent
            .post(&self.endpoint)
            .set("Accept", "application/json")
            .send_form(&[("text", text), ("confidence", &confidence)])
            .map_err(NetError::from)?;
        let body = net::read_body(response)?;
        Ok(parse_spotlight_response(text, &body)?)
    }
}

fn field_str<'a>(obj: &'a Value, key: &str) -> Result<&'a str, NetError> {
    obj.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| NetError::Protocol(format!("resource missing string field {key}")))
}

fn field_number(obj: &Value, key: &str) -> Result<f64, NetError> {
    match obj.get(key) {
        Some(Value::String(s)) => s.trim().parse().ok(),
        Some(Value::Number(n)) => n.as_f64(),
        _ => None,
    }
    .ok_or_else(|| NetError::Protocol(format!("resource field {key} is not a decimal")))
}

fn utf16_to_char_offset(text: &str, units: usize) -> Option<usize> {
    let mut seen = 0;
    for (idx, c) in text.chars().enumerate() {
        if seen == units {
            return Some(idx);
        }
        seen += c.len_utf16();
        if seen > units {
            return None;
        }
    }
    (seen == units).then(|| text.chars().count())
}

/// Parses a response body for `text`. An absent `Resources` key means no
/// annotations. Overlapping resources keep the earlier (then longer) one.
pub fn parse_spotlight_response(text: &str, body: &str) -> Result<Vec<Annotation>, NetError> {
    let json: Value = serde_json::from_str(body).map_err(|e| NetError::Protocol(format!("invalid JSON: {e}")))?;
    let Some(obj) = json.as_object() else {
        return Err(NetError::Protocol("response is not a JSON object".into()));
    };
    let resources = match obj.get("Resources") {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(Value::Array(items)) => items,
        // Some serializers collapse single-element arrays into an object.
        Some(single @ Value::Object(_)) => std::slice::from_ref(single),
        Some(_) => return Err(NetError::Protocol("Resources is not an array".into())),
    };
    let mut annotations = Vec::with_capacity(resources.len());
    for r in resources {
        let iri = field_str(r, "@URI")?.to_string();
        let surface = field_str(r, "@surfaceForm")?.to_string();
        let raw_offset = field_number(r, "@offset")?;
        let confidence = field_number(r, "@similarityScore")?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(NetError::Protocol(format!("similarity score {confidence} outside [0, 1]")));
        }
        if raw_offset < 0.0 || raw_offset.fract() != 0.0 {
            return Err(NetError::Protocol(format!("invalid offset {raw_offset}")));
        }
        let offset = utf16_to_char_offset(text, raw_offset as usize)
            .ok_or_else(|| NetError::Protocol(format!("offset {raw_offset} outside the text")))?;
        annotations.push(Annotation { surface, offset, iri, confidence });
    }
    annotations.sort_by(|a, b| a.offset.cmp(&b.offset).then(b.char_len().cmp(&a.char_len())));
    let mut kept: Vec<Annotation> = Vec::with_capacity(annotations.len());
    for a in annotations {
        if kept.last().is_some_and(|prev| a.offset < prev.end()) {
            continue;
        }
        kept.push(a);
    }
    check_annotations(text, &kept).map_err(NetError::Protocol)?;
    Ok(kept)
}
