use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::container::{self, Container};
use crate::error::{Error, Result};
use crate::linalg::{axpy, clip_global_norm, log_sum_exp, sgd_step, softmax, Matrix, Parameters};
use crate::lstm::{Lstm, LstmState};

/// Index 0 of every character vocabulary is the unknown character.
pub const UNK: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Backward => "bwd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fwd" | "forward" => Some(Direction::Forward),
            "bwd" | "backward" => Some(Direction::Backward),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharLmConfig {
    pub hidden: usize,
    pub embed_dim: usize,
    /// Truncated back-propagation window.
    pub seq_len: usize,
    pub lr: f64,
    pub epochs: usize,
    pub clip: f64,
    pub seed: u64,
}

impl Default for CharLmConfig {
    fn default() -> Self {
        CharLmConfig {
            hidden: 128,
            embed_dim: 32,
            seq_len: 50,
            lr: 1.0,
            epochs: 10,
            clip: 5.0,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharLmParams {
    pub embedding: Matrix,
    pub lstm: Lstm,
    pub proj: Matrix,
    pub proj_b: Matrix,
}

impl Parameters for CharLmParams {
    fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut v = vec![("embedding".to_string(), &self.embedding)];
        v.extend(self.lstm.tensors().into_iter().map(|(n, t)| (format!("lstm.{n}"), t)));
        v.push(("proj".into(), &self.proj));
        v.push(("proj_b".into(), &self.proj_b));
        v
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut v = vec![("embedding".to_string(), &mut self.embedding)];
        v.extend(self.lstm.tensors_mut().into_iter().map(|(n, t)| (format!("lstm.{n}"), t)));
        v.push(("proj".into(), &mut self.proj));
        v.push(("proj_b".into(), &mut self.proj_b));
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharLM {
    pub direction: Direction,
    pub char_vocab: BTreeMap<char, usize>,
    pub params: CharLmParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharLmReport {
    pub epoch_losses: Vec<f64>,
    /// Per-character perplexity of the trained model on its corpus.
    pub final_perplexity: f64,
}

impl CharLM {
    /// Freshly initialized model over the characters of `alphabet`.
    pub fn new(direction: Direction, alphabet: &str, hidden: usize, embed_dim: usize, seed: u64) -> Self {
        let mut chars: Vec<char> = alphabet.chars().collect();
        chars.sort_unstable();
        chars.dedup();
        let char_vocab: BTreeMap<char, usize> = chars.into_iter().enumerate().map(|(i, c)| (c, i + 1)).collect();
        Self::with_vocab(direction, char_vocab, hidden, embed_dim, seed)
    }

    fn with_vocab(direction: Direction, char_vocab: BTreeMap<char, usize>, hidden: usize, embed_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = char_vocab.len() + 1;
        CharLM {
            direction,
            char_vocab,
            params: CharLmParams {
                embedding: Matrix::uniform_fan_in(v, embed_dim, embed_dim, &mut rng),
                lstm: Lstm::new(embed_dim, hidden, &mut rng),
                proj: Matrix::uniform_fan_in(v, hidden, hidden, &mut rng),
                proj_b: Matrix::zeros(v, 1),
            },
        }
    }

    pub fn hidden(&self) -> usize {
        self.params.lstm.hidden()
    }

    /// Softmax size (known characters plus unknown).
    pub fn vocab_size(&self) -> usize {
        self.params.proj.rows()
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        let ids = text.chars().map(|c| self.char_vocab.get(&c).copied().unwrap_or(UNK));
        match self.direction {
            Direction::Forward => ids.collect(),
            Direction::Backward => {
                let mut v: Vec<usize> = ids.collect();
                v.reverse();
                v
            }
        }
    }

    /// Next-character distribution after reading `ids` from `state`.
    pub fn next_distribution(&self, state: &LstmState) -> Vec<f64> {
        let mut logits = self.params.proj_b.as_slice().to_vec();
        self.params.proj.matvec_acc(&state.h, &mut logits);
        softmax(&logits)
    }

    /// Hidden states after each id, in reading order.
    pub fn hidden_states(&self, ids: &[usize]) -> Vec<Vec<f64>> {
        let mut state = LstmState::zeros(self.hidden());
        ids.iter()
            .map(|&id| {
                self.params.lstm.step(self.params.embedding.row(id), &mut state);
                state.h.clone()
            })
            .collect()
    }

    /// Summed cross-entropy of predicting `ids[t+1]` from `ids[..=t]`,
    /// starting from `init`. Gradients are added into `grads`; returns the
    /// loss and the final state.
    pub fn sequence_loss_grad(&self, ids: &[usize], init: &LstmState, grads: &mut CharLmParams) -> (f64, LstmState) {
        let p = &self.params;
        let steps = ids.len().saturating_sub(1);
        if steps == 0 {
            return (0.0, init.clone());
        }
        let xs: Vec<Vec<f64>> = ids[..steps].iter().map(|&i| p.embedding.row(i).to_vec()).collect();
        let (hs, last, trace) = p.lstm.forward(&xs, init);
        let mut loss = 0.0;
        let mut d_hs = Vec::with_capacity(steps);
        for (t, h) in hs.iter().enumerate() {
            let target = ids[t + 1];
            let mut logits = p.proj_b.as_slice().to_vec();
            p.proj.matvec_acc(h, &mut logits);
            let lse = log_sum_exp(&logits);
            loss += lse - logits[target];
            let mut d_logits: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
            d_logits[target] -= 1.0;
            grads.proj.add_outer(1.0, &d_logits, h);
            axpy(1.0, &d_logits, grads.proj_b.as_mut_slice());
            let mut dh = vec![0.0; h.len()];
            p.proj.matvec_t_acc(&d_logits, &mut dh);
            d_hs.push(dh);
        }
        let (dxs, _) = p.lstm.backward(&trace, &d_hs, None, &mut grads.lstm);
        for (&id, dx) in ids[..steps].iter().zip(&dxs) {
            axpy(1.0, dx, grads.embedding.row_mut(id));
        }
        (loss, last)
    }

    /// Per-character perplexity over `text` (read in the model's direction).
    pub fn perplexity(&self, text: &str) -> f64 {
        let ids = self.encode(text);
        if ids.len() < 2 {
            return f64::NAN;
        }
        let mut state = LstmState::zeros(self.hidden());
        let mut nll = 0.0;
        for w in ids.windows(2) {
            self.params.lstm.step(self.params.embedding.row(w[0]), &mut state);
            let mut logits = self.params.proj_b.as_slice().to_vec();
            self.params.proj.matvec_acc(&state.h, &mut logits);
            nll += log_sum_exp(&logits) - logits[w[1]];
        }
        (nll / (ids.len() - 1) as f64).exp()
    }

    pub fn to_container(&self) -> Container {
        let mut c = Container::new(json!({ "kind": "char_lm" }));
        self.write_into(&mut c, "lm");
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        if container::str_field(&c.manifest, "kind")? != "char_lm" {
            return Err(Error::MalformedContainer("not a character language model".into()));
        }
        Self::read_from(c, "lm")
    }

    /// Stores the model under `prefix` (manifest entry + tensors).
    pub fn write_into(&self, c: &mut Container, prefix: &str) {
        let vocab: Vec<String> = self.char_vocab.keys().map(|ch| ch.to_string()).collect();
        let entry = json!({
            "direction": self.direction.as_str(),
            "char_vocab": vocab,
            "hidden": self.hidden(),
            "embed_dim": self.params.embedding.cols(),
        });
        if let Some(obj) = c.manifest.as_object_mut() {
            obj.insert(prefix.to_string(), entry);
        }
        c.put_params(prefix, &self.params);
    }

    pub fn read_from(c: &Container, prefix: &str) -> Result<Self> {
        let m = container::field(&c.manifest, prefix)?;
        let direction = Direction::parse(container::str_field(m, "direction")?)
            .ok_or_else(|| Error::MalformedContainer("unknown LM direction".into()))?;
        let vocab: Vec<String> = container::decode_field(m, "char_vocab")?;
        let char_vocab = crate::eos::chars_to_vocab(&vocab, 1)?;
        let mut lm = Self::with_vocab(
            direction,
            char_vocab,
            container::usize_field(m, "hidden")?,
            container::usize_field(m, "embed_dim")?,
            0,
        );
        c.load_params(prefix, &mut lm.params)?;
        Ok(lm)
    }
}

/// Trains a character LM with truncated back-propagation through time over
/// consecutive `seq_len` windows, carrying the hidden state across windows.
pub fn train_char_lm(corpus: &str, config: &CharLmConfig, direction: Direction) -> Result<(CharLM, CharLmReport)> {
    let n_chars = corpus.chars().count();
    if config.seq_len == 0 || n_chars < 2 * config.seq_len {
        return Err(Error::InsufficientData(format!(
            "corpus has {n_chars} characters, need at least {}",
            2 * config.seq_len
        )));
    }
    let mut lm = CharLM::new(direction, corpus, config.hidden, config.embed_dim, config.seed);
    let ids = lm.encode(corpus);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut state = LstmState::zeros(config.hidden);
        let mut total = 0.0;
        let mut count = 0usize;
        let mut start = 0;
        while start + 1 < ids.len() {
            let end = (start + config.seq_len + 1).min(ids.len());
            let window = &ids[start..end];
            let mut grads = lm.params.zeroed();
            let (loss, next_state) = lm.sequence_loss_grad(window, &state, &mut grads);
            let steps = (window.len() - 1) as f64;
            for (_, g) in grads.tensors_mut() {
                g.as_mut_slice().iter_mut().for_each(|x| *x /= steps);
            }
            clip_global_norm(&mut grads, config.clip);
            sgd_step(&mut lm.params, &grads, config.lr);
            total += loss;
            count += window.len() - 1;
            state = next_state;
            start = end - 1;
        }
        epoch_losses.push(total / count as f64);
    }
    let final_perplexity = lm.perplexity(corpus);
    Ok((
        lm,
        CharLmReport {
            epoch_losses,
            final_perplexity,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::periodic_text;
    use rand::Rng;

    #[test]
    fn periodic_corpus_is_learned() {
        let text = periodic_text("abc", 10_000);
        let config = CharLmConfig { hidden: 32, embed_dim: 8, epochs: 3, ..CharLmConfig::default() };
        let (_, report) = train_char_lm(&text, &config, Direction::Forward).unwrap();
        assert!(report.final_perplexity <= 1.1, "{report:?}");
    }

    #[test]
    fn untrained_model_is_near_uniform() {
        let alphabet = "abcdefghijklmnopqrst";
        let lm = CharLM::new(Direction::Forward, alphabet, 32, 8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chars: Vec<char> = alphabet.chars().collect();
        let text: String = (0..5000).map(|_| chars[rng.gen_range(0..chars.len())]).collect();
        let v = lm.vocab_size() as f64;
        let ppl = lm.perplexity(&text);
        assert!((ppl - v).abs() / v <= 0.1, "ppl {ppl} vs {v}");
    }

    #[test]
    fn deterministic_and_guarded() {
        let text = periodic_text("abcd", 400);
        let config = CharLmConfig { hidden: 8, embed_dim: 4, epochs: 2, seq_len: 20, ..CharLmConfig::default() };
        let a = train_char_lm(&text, &config, Direction::Backward).unwrap();
        let b = train_char_lm(&text, &config, Direction::Backward).unwrap();
        assert_eq!(a.1.epoch_losses.last(), b.1.epoch_losses.last());
        assert_eq!(a.0, b.0);
        assert!(matches!(
            train_char_lm("abc", &config, Direction::Forward),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let lm = CharLM::new(Direction::Forward, "xyz", 6, 3, 0);
        let mut state = LstmState::zeros(6);
        for id in lm.encode("xyzzy") {
            lm.params.lstm.step(lm.params.embedding.row(id), &mut state);
            let s: f64 = lm.next_distribution(&state).iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn backward_reads_reversed() {
        let lm = CharLM::new(Direction::Backward, "ab", 4, 2, 0);
        assert_eq!(lm.encode("aab"), vec![2, 1, 1]);
    }

    #[test]
    fn container_round_trip() {
        let lm = CharLM::new(Direction::Backward, "hola mundo", 5, 3, 9);
        let back = CharLM::from_container(&Container::from_bytes(&lm.to_container().to_bytes()).unwrap()).unwrap();
        assert_eq!(back, lm);
    }
}
