//! Token embedders and their concatenation.

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::bpe::{token_vector, MergeTable, PieceEmbeddingTable, Pooling};
use crate::charlm::{extract_cse, pce_embed, reset_memory, CharLM, PceMemory, PoolOp};
use crate::container::{self, Container};
use crate::embeddings::{EmbeddingTable, SubwordIndex, Variant, Vocab};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Maps a sentence to one vector per token.
pub trait TokenEmbedder {
    fn kind(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn embed(&mut self, tokens: &[&str]) -> Vec<Vec<f64>>;
    /// Whether output depends on previously embedded sentences.
    fn is_stateful(&self) -> bool {
        false
    }
    /// Called at the start of every training epoch.
    fn reset_epoch(&mut self) {}
    /// Writes tensors under `prefix` and returns the manifest descriptor.
    fn write_into(&self, c: &mut Container, prefix: &str) -> Value;
}

/// Contextual string embeddings from a forward and a backward char LM.
pub struct CseEmbedder {
    pub forward: CharLM,
    pub backward: CharLM,
}

impl TokenEmbedder for CseEmbedder {
    fn kind(&self) -> &'static str {
        "cse"
    }

    fn dim(&self) -> usize {
        self.forward.hidden() + self.backward.hidden()
    }

    fn embed(&mut self, tokens: &[&str]) -> Vec<Vec<f64>> {
        extract_cse(tokens, &self.forward, &self.backward)
    }

    fn write_into(&self, c: &mut Container, prefix: &str) -> Value {
        self.forward.write_into(c, &format!("{prefix}.fwd"));
        self.backward.write_into(c, &format!("{prefix}.bwd"));
        json!({"kind": self.kind(), "dim": self.dim()})
    }
}

/// Contextual embeddings concatenated with a pooled memory of each word's
/// earlier contextual vectors.
pub struct PceEmbedder {
    pub cse: CseEmbedder,
    pub pool: PoolOp,
    pub memory: PceMemory,
}

impl PceEmbedder {
    pub fn new(forward: CharLM, backward: CharLM, pool: PoolOp) -> Self {
        PceEmbedder {
            cse: CseEmbedder { forward, backward },
            pool,
            memory: PceMemory::new(),
        }
    }
}

impl TokenEmbedder for PceEmbedder {
    fn kind(&self) -> &'static str {
        "pce"
    }

    fn dim(&self) -> usize {
        2 * self.cse.dim()
    }

    fn embed(&mut self, tokens: &[&str]) -> Vec<Vec<f64>> {
        let cse = self.cse.embed(tokens);
        pce_embed(tokens, &cse, &mut self.memory, self.pool)
    }

    fn is_stateful(&self) -> bool {
        true
    }

    fn reset_epoch(&mut self) {
        reset_memory(&mut self.memory);
    }

    fn write_into(&self, c: &mut Container, prefix: &str) -> Value {
        self.cse.write_into(c, prefix);
        json!({"kind": self.kind(), "dim": self.dim(), "pool": self.pool.as_str()})
    }
}

/// Word-level table lookup (plain, structured or subword).
pub struct StaticEmbedder {
    pub table: EmbeddingTable,
}

impl TokenEmbedder for StaticEmbedder {
    fn kind(&self) -> &'static str {
        "static"
    }

    fn dim(&self) -> usize {
        self.table.dim()
    }

    fn embed(&mut self, tokens: &[&str]) -> Vec<Vec<f64>> {
        tokens.iter().map(|t| self.table.lookup(t)).collect()
    }

    fn write_into(&self, c: &mut Container, prefix: &str) -> Value {
        let t = &self.table;
        c.insert(format!("{prefix}.input"), t.input.clone());
        let mut desc = json!({
            "kind": self.kind(),
            "dim": self.dim(),
            "variant": t.variant.as_str(),
            "words": t.vocab.words(),
            "counts": t.vocab.counts(),
        });
        if let Some(sw) = &t.subword {
            c.insert(format!("{prefix}.ngrams"), sw.matrix.clone());
            let ngrams: Vec<&str> = sw.entries().into_iter().map(|(g, _)| g).collect();
            desc["subword"] = json!({
                "n_min": sw.n_min,
                "n_max": sw.n_max,
                "buckets": sw.buckets,
                "ngrams": ngrams,
            });
        }
        desc
    }
}

/// Pooled BPE piece vectors.
pub struct BpeEmbedder {
    pub merges: MergeTable,
    pub table: PieceEmbeddingTable,
    pub pooling: Pooling,
}

impl TokenEmbedder for BpeEmbedder {
    fn kind(&self) -> &'static str {
        "bpe"
    }

    fn dim(&self) -> usize {
        match self.pooling {
            Pooling::Mean => self.table.dim(),
            Pooling::FirstLast => 2 * self.table.dim(),
        }
    }

    fn embed(&mut self, tokens: &[&str]) -> Vec<Vec<f64>> {
        tokens
            .iter()
            .map(|t| token_vector(t, &self.merges, &self.table, self.pooling))
            .collect()
    }

    fn write_into(&self, c: &mut Container, prefix: &str) -> Value {
        c.insert(format!("{prefix}.pieces"), self.table.matrix.clone());
        c.insert(
            format!("{prefix}.unknown"),
            Matrix::from_vec(1, self.table.dim(), self.table.unknown.clone()),
        );
        json!({
            "kind": self.kind(),
            "dim": self.dim(),
            "pooling": self.pooling.as_str(),
            "merges": self.merges.merges(),
            "target_vocab_size": self.merges.target_vocab_size,
            "pieces": self.table.pieces(),
        })
    }
}

fn read_embedder(c: &Container, prefix: &str, desc: &Value) -> Result<Box<dyn TokenEmbedder>> {
    let bad = |what: &str| Error::MalformedContainer(format!("{prefix}: {what}"));
    let kind = container::str_field(desc, "kind")?;
    let embedder: Box<dyn TokenEmbedder> = match kind {
        "cse" | "pce" => {
            let forward = CharLM::read_from(c, &format!("{prefix}.fwd"))?;
            let backward = CharLM::read_from(c, &format!("{prefix}.bwd"))?;
            if kind == "cse" {
                Box::new(CseEmbedder { forward, backward })
            } else {
                let pool = PoolOp::parse(container::str_field(desc, "pool")?).ok_or_else(|| bad("unknown pool op"))?;
                Box::new(PceEmbedder::new(forward, backward, pool))
            }
        }
        "static" => {
            let words: Vec<String> = container::decode_field(desc, "words")?;
            let counts: Vec<u64> = container::decode_field(desc, "counts")?;
            if words.len() != counts.len() {
                return Err(bad("words and counts differ in length"));
            }
            let vocab = Vocab::from_counts(words.iter().cloned().zip(counts).collect());
            if vocab.words() != &words[..] {
                return Err(bad("vocabulary order is not canonical"));
            }
            let variant =
                Variant::parse(container::str_field(desc, "variant")?).ok_or_else(|| bad("unknown variant"))?;
            let subword = match desc.get("subword") {
                Some(sw) => {
                    let n_min = container::usize_field(sw, "n_min")?;
                    let n_max = container::usize_field(sw, "n_max")?;
                    let matrix = c.get(&format!("{prefix}.ngrams"))?.clone();
                    let buckets: Option<usize> = container::decode_field(sw, "buckets")?;
                    Some(match buckets {
                        Some(b) => {
                            let mut idx = SubwordIndex::hashed(b, n_min, n_max, matrix.cols());
                            idx.matrix = matrix;
                            idx
                        }
                        None => {
                            let ngrams: Vec<String> = container::decode_field(sw, "ngrams")?;
                            let map: HashMap<String, usize> =
                                ngrams.into_iter().enumerate().map(|(i, g)| (g, i)).collect();
                            SubwordIndex::from_parts(n_min, n_max, map, matrix)
                        }
                    })
                }
                None => None,
            };
            let input = c.get(&format!("{prefix}.input"))?.clone();
            if input.rows() != vocab.len() {
                return Err(bad("input matrix rows differ from vocabulary size"));
            }
            Box::new(StaticEmbedder {
                table: EmbeddingTable {
                    vocab,
                    input,
                    variant,
                    subword,
                    metadata: Default::default(),
                },
            })
        }
        "bpe" => {
            let merges: Vec<(String, String)> = container::decode_field(desc, "merges")?;
            let target = container::usize_field(desc, "target_vocab_size")?;
            let pieces: Vec<String> = container::decode_field(desc, "pieces")?;
            let pooling =
                Pooling::parse(container::str_field(desc, "pooling")?).ok_or_else(|| bad("unknown pooling"))?;
            let matrix = c.get(&format!("{prefix}.pieces"))?.clone();
            let unknown = c.get(&format!("{prefix}.unknown"))?.as_slice().to_vec();
            if matrix.rows() != pieces.len() || unknown.len() != matrix.cols() {
                return Err(bad("piece table shape mismatch"));
            }
            Box::new(BpeEmbedder {
                merges: MergeTable::new(merges, target),
                table: PieceEmbeddingTable::new(pieces, matrix, unknown),
                pooling,
            })
        }
        other => return Err(Error::ModelMissingComponent(format!("embedder kind {other:?}"))),
    };
    let dim = container::usize_field(desc, "dim")?;
    if embedder.dim() != dim {
        return Err(Error::DimensionMismatch {
            component: prefix.to_string(),
            expected: dim,
            got: embedder.dim(),
        });
    }
    Ok(embedder)
}

/// Ordered list of embedders whose outputs are concatenated per token.
#[derive(Default)]
pub struct EmbeddingStack {
    components: Vec<Box<dyn TokenEmbedder>>,
}

impl EmbeddingStack {
    pub fn new(components: Vec<Box<dyn TokenEmbedder>>) -> Self {
        EmbeddingStack { components }
    }

    pub fn push(&mut self, e: Box<dyn TokenEmbedder>) {
        self.components.push(e);
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.components.iter().map(|c| c.dim()).sum()
    }

    pub fn kinds(&self) -> Vec<&'static str> {
        self.components.iter().map(|c| c.kind()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.dim()).collect()
    }

    pub fn is_stateful(&self) -> bool {
        self.components.iter().any(|c| c.is_stateful())
    }

    pub fn reset_epoch(&mut self) {
        self.components.iter_mut().for_each(|c| c.reset_epoch());
    }

    /// Writes every component under `stack.<i>` and the descriptor list
    /// under the manifest key `stack`.
    pub fn write_into(&self, c: &mut Container) {
        let descs: Vec<Value> = self
            .components
            .iter()
            .enumerate()
            .map(|(i, e)| e.write_into(c, &format!("stack.{i}")))
            .collect();
        if let Some(obj) = c.manifest.as_object_mut() {
            obj.insert("stack".into(), Value::Array(descs));
        }
    }

    pub fn read_from(c: &Container) -> Result<Self> {
        let descs = c
            .manifest
            .get("stack")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::ModelMissingComponent("stack".into()))?;
        let components = descs
            .iter()
            .enumerate()
            .map(|(i, d)| read_embedder(c, &format!("stack.{i}"), d))
            .collect::<Result<_>>()?;
        Ok(EmbeddingStack { components })
    }
}

/// Row `t` is the concatenation of every component's vector for token `t`,
/// in stack order.
pub fn stack_embed(tokens: &[&str], stack: &mut EmbeddingStack) -> Result<Matrix> {
    let total = stack.total_dim();
    let mut out = Matrix::zeros(tokens.len(), total);
    let mut offset = 0;
    for c in stack.components.iter_mut() {
        let dim = c.dim();
        let vectors = c.embed(tokens);
        if vectors.len() != tokens.len() {
            return Err(Error::DimensionMismatch {
                component: format!("{} (token count)", c.kind()),
                expected: tokens.len(),
                got: vectors.len(),
            });
        }
        for (t, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    component: c.kind().to_string(),
                    expected: dim,
                    got: v.len(),
                });
            }
            out.row_mut(t)[offset..offset + dim].copy_from_slice(v);
        }
        offset += dim;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    pub(crate) struct Fixed {
        pub dim: usize,
        pub actual: usize,
        pub value: f64,
    }

    impl TokenEmbedder for Fixed {
        fn kind(&self) -> &'static str {
            "fixed"
        }
        fn dim(&self) -> usize {
            self.dim
        }
        fn embed(&mut self, tokens: &[&str]) -> Vec<Vec<f64>> {
            tokens.iter().map(|_| vec![self.value; self.actual]).collect()
        }
        fn write_into(&self, _: &mut Container, _: &str) -> Value {
            json!({"kind": "fixed"})
        }
    }

    fn fixed(dim: usize, value: f64) -> Box<dyn TokenEmbedder> {
        Box::new(Fixed { dim, actual: dim, value })
    }

    #[test]
    fn dims_add_up() {
        let mut s = EmbeddingStack::new(vec![fixed(64, 1.0), fixed(300, 2.0), fixed(300, 3.0), fixed(100, 4.0)]);
        assert_eq!(s.total_dim(), 764);
        let m = stack_embed(&["a", "b"], &mut s).unwrap();
        assert_eq!(m.shape(), (2, 764));
        assert_eq!(m.get(1, 63), 1.0);
        assert_eq!(m.get(1, 64), 2.0);
        assert_eq!(m.get(1, 763), 4.0);
    }

    #[test]
    fn single_component_passthrough() {
        let table = EmbeddingTable {
            vocab: Vocab::from_counts(vec![("dolor".into(), 2)]),
            input: Matrix::from_rows(&[vec![0.5, -0.5]]),
            variant: Variant::Plain,
            subword: None,
            metadata: Default::default(),
        };
        let mut s = EmbeddingStack::new(vec![Box::new(StaticEmbedder { table })]);
        let m = stack_embed(&["dolor", "fiebre"], &mut s).unwrap();
        assert_eq!(m.row(0), &[0.5, -0.5]);
        assert_eq!(m.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn wrong_length_is_dimension_mismatch() {
        let mut s = EmbeddingStack::new(vec![fixed(3, 0.0), Box::new(Fixed { dim: 4, actual: 5, value: 0.0 })]);
        assert!(matches!(
            stack_embed(&["x"], &mut s),
            Err(Error::DimensionMismatch { expected: 4, got: 5, .. })
        ));
    }

    #[test]
    fn bpe_and_static_round_trip_through_container() {
        let merges = MergeTable::new(vec![("_o".into(), "r".into()), ("a".into(), "l".into())], 10);
        let table = PieceEmbeddingTable::new(
            vec!["_or".into(), "al".into()],
            Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]),
            vec![0.5, 0.5],
        );
        let mut idx = SubwordIndex::exact(["oral"], 3, 6, 2);
        idx.matrix.as_mut_slice().iter_mut().enumerate().for_each(|(i, v)| *v = i as f64);
        let st = EmbeddingTable {
            vocab: Vocab::from_counts(vec![("oral".into(), 3), ("dosis".into(), 1)]),
            input: Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]),
            variant: Variant::Subword,
            subword: Some(idx),
            metadata: Default::default(),
        };
        let mut stack = EmbeddingStack::new(vec![
            Box::new(BpeEmbedder { merges, table, pooling: Pooling::FirstLast }),
            Box::new(StaticEmbedder { table: st }),
        ]);
        let mut c = Container::new(json!({}));
        stack.write_into(&mut c);
        let c = Container::from_bytes(&c.to_bytes()).unwrap();
        let mut back = EmbeddingStack::read_from(&c).unwrap();
        assert_eq!(back.kinds(), vec!["bpe", "static"]);
        let toks = ["oral", "orales", "x"];
        assert_eq!(stack_embed(&toks, &mut back).unwrap(), stack_embed(&toks, &mut stack).unwrap());
    }
}
