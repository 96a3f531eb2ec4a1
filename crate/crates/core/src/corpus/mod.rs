//! Corpus conversion between brat standoff and CoNLL-style BIO files.
//!
//! All offsets count Unicode scalar values, never bytes.

mod bio;
mod brat;
mod conll;
mod convert;
mod tokenize;

pub use bio::{align_bio, decode_bio, repair_bio, resolve_overlaps, AlignWarning, OverlapPolicy};
pub use brat::{parse_brat, write_brat};
pub use conll::{read_conll, read_conll_with_offsets, read_offsets, write_conll, write_offsets};
pub use convert::{convert_document, export_document, merge_spans_across_entities, Converted};
pub use tokenize::tokenize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
}

impl RawDocument {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        RawDocument {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Characters `[start, end)` of the text.
    pub fn slice(&self, start: usize, end: usize) -> String {
        char_slice(&self.text, start, end)
    }
}

pub fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntityAnnotation {
    pub ann_id: String,
    pub label: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn new(surface: impl Into<String>, start: usize, end: usize) -> Self {
        Token {
            surface: surface.into(),
            start,
            end,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TaggedSentence {
    pub tokens: Vec<Token>,
    pub tags: Vec<String>,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<Token>, tags: Vec<String>) -> Self {
        assert_eq!(tokens.len(), tags.len(), "one tag per token");
        TaggedSentence { tokens, tags }
    }

    /// Sentence with every tag "O".
    pub fn untagged(tokens: Vec<Token>) -> Self {
        let tags = vec!["O".to_string(); tokens.len()];
        TaggedSentence { tokens, tags }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// True when every `I-X` follows `B-X` or `I-X`.
    pub fn is_valid_bio(&self) -> bool {
        is_valid_bio(&self.tags)
    }
}

pub fn is_valid_bio(tags: &[String]) -> bool {
    let mut prev: Option<&str> = None;
    for tag in tags {
        if let Some(label) = tag.strip_prefix("I-") {
            if prev != Some(label) {
                return false;
            }
            prev = Some(label);
        } else if let Some(label) = tag.strip_prefix("B-") {
            prev = Some(label);
        } else {
            prev = None;
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedDocument {
    pub doc: RawDocument,
    pub entities: Vec<EntityAnnotation>,
    pub sentences: Vec<TaggedSentence>,
}

/// A labeled character span decoded from BIO tags.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledSpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}
