//! Stacked-embedding BiLSTM-CRF named entity recognition for Spanish
//! clinical text.
//!
//! The crate covers the whole pipeline: brat/CoNLL corpus handling, a neural
//! sentence splitter, static word embeddings (skip-gram, structured
//! skip-gram, subword n-grams), BPE piece embeddings, character language
//! models with contextual and pooled embeddings, the CRF tagger with its
//! training schedule and search, and strict entity-level evaluation.

pub mod bpe;
pub mod cli;
pub mod charlm;
pub mod container;
pub mod corpus;
pub mod embeddings;
pub mod eos;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod lstm;
pub mod synthetic;
pub mod tagger;

pub use error::{Error, Result};
