//! Token-level embeddings: skip-gram with negative sampling, its
//! position-aware (structured) variant and the character n-gram variant,
//! all stored as word2vec text.

mod skipgram;
mod subword;
mod vocab;
mod word2vec;

use std::collections::BTreeMap;

use log::warn;

pub use skipgram::{
    sgns_loss_grad, train_skipgram, train_structured_skipgram, train_subword_skipgram, SgnsGrad,
    SkipGramConfig, SkipGramModel,
};
pub use subword::{extract_ngrams, fnv1a, SubwordIndex, BOW, EOW};
pub use vocab::{build_vocab, Vocab};
pub use word2vec::{load_ngram_index, load_word2vec, save_ngram_index, save_word2vec};

use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Plain,
    Structured,
    Subword,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Structured => "structured",
            Variant::Subword => "subword",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain" => Some(Variant::Plain),
            "structured" => Some(Variant::Structured),
            "subword" => Some(Variant::Subword),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LookupKind {
    InVocab,
    /// OOV composed from `known` of `total` n-grams.
    Composed { known: usize, total: usize },
    /// OOV under a variant without subword information.
    OovZero,
    /// OOV whose n-grams are all unknown.
    OovAllUnknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub vocab: Vocab,
    pub input: Matrix,
    pub variant: Variant,
    pub subword: Option<SubwordIndex>,
    /// Training settings, recorded for export.
    pub metadata: BTreeMap<String, String>,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn lookup_detailed(&self, word: &str) -> (Vec<f64>, LookupKind) {
        if let Some(id) = self.vocab.id(word) {
            return (self.input.row(id).to_vec(), LookupKind::InVocab);
        }
        match &self.subword {
            Some(index) => {
                let (v, known) = index.compose(word);
                let total = extract_ngrams(word, index.n_min, index.n_max).len();
                if known == 0 {
                    warn!("OovAllUnknown: no known n-gram for {word:?}");
                    (v, LookupKind::OovAllUnknown)
                } else {
                    (v, LookupKind::Composed { known, total })
                }
            }
            None => (vec![0.0; self.dim()], LookupKind::OovZero),
        }
    }

    /// Stored vector, n-gram composition for subword OOVs, zeros otherwise.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        self.lookup_detailed(word).0
    }
}
