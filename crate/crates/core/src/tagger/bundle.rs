//! A trained tagger together with its embedding stack, and the end-to-end
//! tagging path from raw text to brat annotations.

use std::path::Path;

use serde_json::json;

use super::model::{TaggerConfig, TaggerParams};
use super::stack::{stack_embed, EmbeddingStack};
use super::train::{TagSet, TrainOutcome};
use crate::container::{self, Container};
use crate::corpus::{char_slice, decode_bio, repair_bio, tokenize, write_brat, TaggedSentence, Token};
use crate::eos::SentenceSplitter;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Parameters};

pub struct TaggerModel {
    pub stack: EmbeddingStack,
    pub params: TaggerParams,
    pub tags: TagSet,
}

impl TaggerModel {
    pub fn new(stack: EmbeddingStack, outcome: TrainOutcome) -> Self {
        TaggerModel {
            stack,
            params: outcome.params,
            tags: outcome.tags,
        }
    }

    pub fn config(&self) -> TaggerConfig {
        TaggerConfig {
            hidden: self.params.hidden(),
            layers: self.params.layers.len(),
            dropout: self.params.dropout,
            reproject: self.params.reproject(),
        }
    }

    /// Repaired BIO tags for one tokenized sentence.
    pub fn predict(&mut self, tokens: &[&str]) -> Result<Vec<String>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let x = stack_embed(tokens, &mut self.stack)?;
        let raw: Vec<String> = self
            .params
            .decode(&x)
            .into_iter()
            .map(|k| self.tags.tag(k).to_string())
            .collect();
        Ok(repair_bio(&raw))
    }

    /// Tags sentences whose tokens carry document offsets.
    pub fn tag_sentences(&mut self, sentences: &[TaggedSentence]) -> Result<Vec<TaggedSentence>> {
        sentences
            .iter()
            .map(|s| {
                let tags = self.predict(&s.surfaces())?;
                Ok(TaggedSentence::new(s.tokens.clone(), tags))
            })
            .collect()
    }

    /// Tokenizes and splits `text`, tags every sentence and renders the
    /// entities as a brat `.ann` whose surfaces are exact text slices.
    pub fn tag_text(&mut self, text: &str, splitter: &dyn SentenceSplitter) -> Result<(Vec<TaggedSentence>, String)> {
        let sentences = sentences_of(text, splitter);
        let tagged = self.tag_sentences(&sentences)?;
        let spans: Vec<_> = tagged.iter().flat_map(decode_bio).collect();
        let ann = write_brat(&spans, |s| char_slice(text, s.start, s.end));
        Ok((tagged, ann))
    }

    pub fn to_container(&self) -> Container {
        let cfg = self.config();
        let mut c = Container::new(json!({
            "kind": "tagger",
            "tags": self.tags.tags(),
            "input_dim": self.params.input_dim(),
            "hidden": cfg.hidden,
            "layers": cfg.layers,
            "dropout": cfg.dropout,
            "reproject": cfg.reproject,
        }));
        c.put_params("tagger", &self.params);
        self.stack.write_into(&mut c);
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let m = &c.manifest;
        if m.get("kind").and_then(|k| k.as_str()) != Some("tagger") {
            return Err(Error::ModelMissingComponent("tagger".into()));
        }
        let stack = EmbeddingStack::read_from(c)?;
        let tags: Vec<String> = container::decode_field(m, "tags")?;
        let cfg = TaggerConfig {
            hidden: container::usize_field(m, "hidden")?,
            layers: container::usize_field(m, "layers")?,
            dropout: container::decode_field(m, "dropout")?,
            reproject: container::decode_field(m, "reproject")?,
        };
        let input_dim = container::usize_field(m, "input_dim")?;
        if input_dim != stack.total_dim() {
            return Err(Error::DimensionMismatch {
                component: "stack".into(),
                expected: input_dim,
                got: stack.total_dim(),
            });
        }
        let mut params = TaggerParams::new(input_dim, tags.len(), &cfg, 0);
        c.load_params("tagger", &mut params)?;
        Ok(TaggerModel {
            stack,
            params,
            tags: TagSet::from_tags(tags),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(&Container::read(path)?)
    }

    pub fn num_parameters(&self) -> usize {
        self.params.num_parameters()
    }
}

/// Document tokens grouped by the splitter's sentence spans.
pub fn sentences_of(text: &str, splitter: &dyn SentenceSplitter) -> Vec<TaggedSentence> {
    let spans = splitter.split(text);
    let mut groups: Vec<Vec<Token>> = vec![Vec::new(); spans.len()];
    let mut stray = Vec::new();
    for tok in tokenize(text) {
        match spans.iter().position(|&(s, e)| tok.start >= s && tok.start < e) {
            Some(i) => groups[i].push(tok),
            None => stray.push(tok),
        }
    }
    groups.push(stray);
    groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(TaggedSentence::untagged)
        .collect()
}

/// Emissions for a sentence, exposed for inspection.
pub fn emissions(model: &mut TaggerModel, tokens: &[&str]) -> Result<Matrix> {
    let x = stack_embed(tokens, &mut model.stack)?;
    Ok(model.params.encode(&x))
}
