//! Annotated corpus reader: passages with event mentions, triggers, and
//! argument spans, read from UTF-8 JSONL (one document per line).
//!
//! Offsets are character offsets into the document text, because cloze
//! insertion downstream operates on raw text. Every span is checked against
//! the text it annotates at load time. Gold labels are optional so the same
//! reader serves prediction-only and evaluation runs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::Ontology;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("document {doc_id}: {message}")]
    Validation { doc_id: String, message: String },
}

/// A text span in character offsets: `start` inclusive, `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentMention {
    pub id: String,
    #[serde(flatten)]
    pub span: Span,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_entity_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMention {
    pub id: String,
    pub event_type: String,
    pub trigger: Span,
    pub arguments: Vec<ArgumentMention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub events: Vec<EventMention>,
}

/// Maps a character-offset range to the byte-offset range of the same text.
/// Returns `None` when the range does not fit the text.
pub(crate) fn char_range_to_bytes(text: &str, start: usize, end: usize) -> Option<(usize, usize)> {
    if start >= end {
        return None;
    }
    let mut byte_start = None;
    let mut byte_end = None;
    let mut n_chars = 0;
    for (count, (byte_idx, _)) in text.char_indices().enumerate() {
        if count == start {
            byte_start = Some(byte_idx);
        }
        if count == end {
            byte_end = Some(byte_idx);
        }
        n_chars = count + 1;
    }
    if end == n_chars {
        byte_end = Some(text.len());
    }
    Some((byte_start?, byte_end?))
}

/// Substring of `text` at a character-offset range.
pub(crate) fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    let (b0, b1) = char_range_to_bytes(text, start, end)?;
    Some(&text[b0..b1])
}

impl Span {
    /// Checks offsets against the owning text: `0 <= start < end <= len`
    /// and `text` equal to the substring at `[start, end)`.
    pub fn validate(&self, owning_text: &str) -> Result<(), String> {
        let Some(actual) = char_slice(owning_text, self.start, self.end) else {
            return Err(format!(
                "span ({}, {}) out of bounds for text of {} chars",
                self.start,
                self.end,
                owning_text.chars().count()
            ));
        };
        if actual != self.text {
            return Err(format!(
                "span ({}, {}) text mismatch: annotated {:?}, document has {:?}",
                self.start, self.end, self.text, actual
            ));
        }
        Ok(())
    }
}

impl Document {
    /// Validates spans, id uniqueness, and ontology membership.
    pub fn validate(&self, ontology: &Ontology) -> Result<(), CorpusError> {
        let fail = |message: String| CorpusError::Validation {
            doc_id: self.doc_id.clone(),
            message,
        };
        let mut event_ids = std::collections::BTreeSet::new();
        for event in &self.events {
            if !event_ids.insert(&event.id) {
                return Err(fail(format!("duplicate event id {:?}", event.id)));
            }
            let roles = ontology
                .roles(&event.event_type)
                .ok_or_else(|| fail(format!("unknown event type {:?}", event.event_type)))?;
            event
                .trigger
                .validate(&self.text)
                .map_err(|m| fail(format!("event {:?} trigger: {m}", event.id)))?;
            let mut arg_ids = std::collections::BTreeSet::new();
            for arg in &event.arguments {
                if !arg_ids.insert(&arg.id) {
                    return Err(fail(format!(
                        "event {:?} has duplicate argument id {:?}",
                        event.id, arg.id
                    )));
                }
                arg.span
                    .validate(&self.text)
                    .map_err(|m| fail(format!("argument {:?}: {m}", arg.id)))?;
                if let Some(role) = &arg.gold_role {
                    if !roles.iter().any(|r| &r.name == role) {
                        return Err(fail(format!(
                            "argument {:?}: gold role {role:?} not in role set of {:?}",
                            arg.id, event.event_type
                        )));
                    }
                }
                if let Some(et) = &arg.gold_entity_type {
                    if ontology.entity_type(et).is_none() {
                        return Err(fail(format!(
                            "argument {:?}: unknown gold entity type {et:?}",
                            arg.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reads a JSONL corpus in file order, validating every document against the
/// ontology. Blank lines are skipped.
pub fn read_corpus(
    path: impl AsRef<Path>,
    ontology: &Ontology,
) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text, ontology)
}

/// Parses JSONL corpus text. See [`read_corpus`].
pub fn parse_corpus(text: &str, ontology: &Ontology) -> Result<Vec<Document>, CorpusError> {
    let mut documents = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(line).map_err(|source| CorpusError::Line {
                line: idx + 1,
                source,
            })?;
        doc.validate(ontology)?;
        documents.push(doc);
    }
    Ok(documents)
}

/// Every pair of distinct events where the first has type `event_a_type`,
/// the second `event_b_type`, and an argument of the first has exactly the
/// same `(start, end)` offsets as an argument of the second. Order follows
/// event order, then argument order.
pub fn shared_arguments<'a>(
    doc: &'a Document,
    event_a_type: &str,
    event_b_type: &str,
) -> Vec<(
    &'a EventMention,
    &'a EventMention,
    &'a ArgumentMention,
    &'a ArgumentMention,
)> {
    let mut out = Vec::new();
    for (i, event_a) in doc.events.iter().enumerate() {
        if event_a.event_type != event_a_type {
            continue;
        }
        for (j, event_b) in doc.events.iter().enumerate() {
            if i == j || event_b.event_type != event_b_type {
                continue;
            }
            for arg_a in &event_a.arguments {
                for arg_b in &event_b.arguments {
                    if arg_a.span.start == arg_b.span.start && arg_a.span.end == arg_b.span.end {
                        out.push((event_a, event_b, arg_a, arg_b));
                    }
                }
            }
        }
    }
    out
}
