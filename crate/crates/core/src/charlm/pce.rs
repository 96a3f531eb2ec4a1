use std::collections::HashMap;

use super::CharLM;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PoolOp {
    Min,
    Max,
    #[default]
    Mean,
}

impl PoolOp {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "min" => Some(PoolOp::Min),
            "max" => Some(PoolOp::Max),
            "mean" => Some(PoolOp::Mean),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PoolOp::Min => "min",
            PoolOp::Max => "max",
            PoolOp::Mean => "mean",
        }
    }
}

/// Running statistics over every contextual instance of one word.
/// The sum uses Neumaier compensation.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub count: u64,
    sum: Vec<f64>,
    compensation: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Aggregate {
    fn new(v: &[f64]) -> Self {
        Aggregate {
            count: 1,
            sum: v.to_vec(),
            compensation: vec![0.0; v.len()],
            min: v.to_vec(),
            max: v.to_vec(),
        }
    }

    fn update(&mut self, v: &[f64]) {
        self.count += 1;
        for (k, &x) in v.iter().enumerate() {
            let s = self.sum[k];
            let t = s + x;
            self.compensation[k] += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
            self.sum[k] = t;
            self.min[k] = self.min[k].min(x);
            self.max[k] = self.max[k].max(x);
        }
    }

    pub fn sum(&self) -> Vec<f64> {
        self.sum.iter().zip(&self.compensation).map(|(s, c)| s + c).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum().into_iter().map(|s| s / n).collect()
    }

    pub fn pooled(&self, op: PoolOp) -> Vec<f64> {
        match op {
            PoolOp::Min => self.min.clone(),
            PoolOp::Max => self.max.clone(),
            PoolOp::Mean => self.mean(),
        }
    }
}

/// Word → aggregate of all contextual embeddings seen so far. Reset at the
/// start of every training epoch; accumulates during tagging.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PceMemory {
    words: HashMap<String, Aggregate>,
}

impl PceMemory {
    pub fn new() -> Self {
        PceMemory::default()
    }

    pub fn get(&self, word: &str) -> Option<&Aggregate> {
        self.words.get(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn aggregates(&self) -> impl Iterator<Item = (&str, &Aggregate)> {
        self.words.iter().map(|(w, a)| (w.as_str(), a))
    }

    /// Adds `v` as a new instance of `word` and returns the pooled vector
    /// over all instances including this one.
    pub fn observe(&mut self, word: &str, v: &[f64], op: PoolOp) -> Vec<f64> {
        match self.words.get_mut(word) {
            Some(agg) => {
                agg.update(v);
                agg.pooled(op)
            }
            None => {
                self.words.insert(word.to_string(), Aggregate::new(v));
                v.to_vec()
            }
        }
    }
}

/// Empties the memory.
pub fn reset_memory(memory: &mut PceMemory) {
    memory.words.clear();
}

/// Contextual string embeddings: for each token, the forward LM state after
/// its last character concatenated with the backward LM state after its
/// first character (read right to left). The sentence is rendered with
/// single spaces between tokens.
pub fn extract_cse(tokens: &[&str], fwd: &CharLM, bwd: &CharLM) -> Vec<Vec<f64>> {
    if tokens.is_empty() {
        return Vec::new();
    }
    let sentence = tokens.join(" ");
    let n = sentence.chars().count();
    let f_states = fwd.hidden_states(&fwd.encode(&sentence));
    let b_states = bwd.hidden_states(&bwd.encode(&sentence));
    let mut pos = 0;
    tokens
        .iter()
        .map(|t| {
            let len = t.chars().count();
            let (first, last) = (pos, pos + len.max(1) - 1);
            pos += len + 1;
            let mut v = f_states[last].clone();
            v.extend_from_slice(&b_states[n - 1 - first]);
            v
        })
        .collect()
}

/// Concatenates each contextual vector with the pooled vector over all of
/// that word's instances so far (this one included).
pub fn pce_embed(tokens: &[&str], cse_vectors: &[Vec<f64>], memory: &mut PceMemory, pool: PoolOp) -> Vec<Vec<f64>> {
    tokens
        .iter()
        .zip(cse_vectors)
        .map(|(t, v)| {
            let pooled = memory.observe(t, v, pool);
            let mut out = v.clone();
            out.extend(pooled);
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charlm::{train_char_lm, CharLmConfig, Direction};

    #[test]
    fn first_occurrence_is_doubled() {
        for op in [PoolOp::Min, PoolOp::Max, PoolOp::Mean] {
            let mut mem = PceMemory::new();
            let out = pce_embed(&["x"], &[vec![1.0, -2.0]], &mut mem, op);
            assert_eq!(out[0], vec![1.0, -2.0, 1.0, -2.0]);
        }
    }

    #[test]
    fn two_instance_pooling() {
        let v = vec![0.0, 2.0];
        let w = vec![2.0, 0.0];
        for (op, expect) in [(PoolOp::Mean, [1.0, 1.0]), (PoolOp::Min, [0.0, 0.0]), (PoolOp::Max, [2.0, 2.0])] {
            let mut mem = PceMemory::new();
            pce_embed(&["x"], &[v.clone()], &mut mem, op);
            let out = pce_embed(&["x"], &[w.clone()], &mut mem, op);
            assert_eq!(out[0][2..], expect);
        }
    }

    #[test]
    fn counts_and_reset() {
        let mut mem = PceMemory::new();
        for _ in 0..4 {
            pce_embed(&["a", "b"], &[vec![1.0], vec![2.0]], &mut mem, PoolOp::Mean);
        }
        assert_eq!(mem.get("a").unwrap().count, 4);
        reset_memory(&mut mem);
        assert!(mem.is_empty());
        reset_memory(&mut mem);
        let out = pce_embed(&["a"], &[vec![5.0]], &mut mem, PoolOp::Mean);
        assert_eq!(out[0], vec![5.0, 5.0]);
    }

    #[test]
    fn reset_matters_only_for_recurring_words() {
        let doc1 = (["dolor", "agudo"], [vec![1.0], vec![3.0]]);
        let doc2 = (["dolor", "leve"], [vec![2.0], vec![4.0]]);
        let run = |reset: bool| {
            let mut mem = PceMemory::new();
            pce_embed(&doc1.0, &doc1.1, &mut mem, PoolOp::Mean);
            if reset {
                reset_memory(&mut mem);
            }
            pce_embed(&doc2.0, &doc2.1, &mut mem, PoolOp::Mean)
        };
        let (with, without) = (run(true), run(false));
        assert_ne!(with[0], without[0]); // "dolor" recurred
        assert_eq!(with[1], without[1]); // "leve" did not
    }

    #[test]
    fn mean_of_identical_instances() {
        let v = vec![0.1, -1e-3, 12345.678, 1.0 / 3.0];
        let mut mem = PceMemory::new();
        for k in 1..=1000 {
            let out = pce_embed(&["w"], &[v.clone()], &mut mem, PoolOp::Mean);
            if k % 97 == 0 || k == 1000 {
                for (a, b) in out[0][4..].iter().zip(&v) {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn cse_shapes_and_context_sensitivity() {
        let text = "el paciente toma amoxicilina oral . la paciente toma ibuprofeno oral .\n".repeat(20);
        let cfg = CharLmConfig { hidden: 12, embed_dim: 6, epochs: 2, seq_len: 30, ..CharLmConfig::default() };
        let (fwd, _) = train_char_lm(&text, &cfg, Direction::Forward).unwrap();
        let (bwd, _) = train_char_lm(&text, &cfg, Direction::Backward).unwrap();
        let a = extract_cse(&["el", "paciente", "toma"], &fwd, &bwd);
        let b = extract_cse(&["la", "paciente", "duerme"], &fwd, &bwd);
        assert!(a.iter().all(|v| v.len() == 24));
        assert_ne!(a[1], b[1]);
        let single = extract_cse(&["oral"], &fwd, &bwd);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0][..12], fwd.hidden_states(&fwd.encode("oral"))[3][..]);
        assert_eq!(single[0][12..], bwd.hidden_states(&bwd.encode("oral"))[3][..]);
        assert!(extract_cse(&[], &fwd, &bwd).is_empty());
    }
}
