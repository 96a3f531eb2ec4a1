//! Sentence boundary detection.
//!
//! [`EosModel`] is a binary classifier over every occurrence of a candidate
//! end-of-sentence character: the characters around the candidate are
//! embedded, read by a single-layer LSTM, and the final hidden state is
//! mapped to a boundary probability. [`RuleSplitter`] is the model-free
//! fallback.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::container::{self, Container};
use crate::error::{Error, Result};
use crate::linalg::{axpy, clip_global_norm, dot, sgd_step, sigmoid, Matrix, Parameters};
use crate::lstm::{Lstm, LstmState};

/// Reserved padding symbol used outside the text.
pub const PAD: char = '\u{0}';
const UNK_INDEX: usize = 0;
const PAD_INDEX: usize = 1;

pub trait SentenceSplitter {
    /// Character spans `(start, end)` of the sentences in `text`, ordered,
    /// non-overlapping, trimmed of surrounding whitespace.
    fn split(&self, text: &str) -> Vec<(usize, usize)>;
}

/// Turns "split after character i" decisions into trimmed spans that cover
/// every non-whitespace character.
fn spans_from_boundaries(chars: &[char], boundaries: &[usize]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut push = |s: usize, e: usize| {
        let mut s = s;
        let mut e = e;
        while s < e && chars[s].is_whitespace() {
            s += 1;
        }
        while e > s && chars[e - 1].is_whitespace() {
            e -= 1;
        }
        if s < e {
            spans.push((s, e));
        }
    };
    for &b in boundaries {
        push(start, b + 1);
        start = b + 1;
    }
    push(start, chars.len());
    spans
}

/// Splits after `.`, `?` or `!` followed by whitespace and an uppercase
/// letter, and (optionally) at every line break.
#[derive(Clone, Debug)]
pub struct RuleSplitter {
    pub split_on_newlines: bool,
}

impl Default for RuleSplitter {
    fn default() -> Self {
        RuleSplitter {
            split_on_newlines: true,
        }
    }
}

impl SentenceSplitter for RuleSplitter {
    fn split(&self, text: &str) -> Vec<(usize, usize)> {
        let chars: Vec<char> = text.chars().collect();
        let mut boundaries = Vec::new();
        for i in 0..chars.len() {
            let c = chars[i];
            if self.split_on_newlines && c == '\n' {
                boundaries.push(i);
                continue;
            }
            if matches!(c, '.' | '?' | '!') {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_whitespace() && chars[j] != '\n' {
                    j += 1;
                }
                if j > i + 1 && j < chars.len() && chars[j].is_uppercase() {
                    boundaries.push(i);
                }
            }
        }
        spans_from_boundaries(&chars, &boundaries)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EosConfig {
    pub window: usize,
    pub candidates: Vec<char>,
    pub threshold: f64,
    pub embed_dim: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for EosConfig {
    fn default() -> Self {
        EosConfig {
            window: 5,
            candidates: vec!['.', '?', '!', ':', ';'],
            threshold: 0.5,
            embed_dim: 16,
            hidden: 32,
            epochs: 5,
            lr: 0.1,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EosCandidate {
    pub position: usize,
    pub left_window: String,
    pub right_window: String,
}

impl EosCandidate {
    /// `left ++ candidate ++ right`, the sequence the classifier reads.
    fn sequence(&self, candidate: char) -> Vec<char> {
        let mut seq: Vec<char> = self.left_window.chars().collect();
        seq.push(candidate);
        seq.extend(self.right_window.chars());
        seq
    }
}

/// One candidate per occurrence of a candidate character, with windows of
/// exactly `window` characters padded by [`PAD`] at the text edges.
pub fn extract_candidates(text: &str, candidates: &[char], window: usize) -> Vec<EosCandidate> {
    let chars: Vec<char> = text.chars().collect();
    let at = |i: isize| -> char {
        if i < 0 || i as usize >= chars.len() {
            PAD
        } else {
            chars[i as usize]
        }
    };
    chars
        .iter()
        .enumerate()
        .filter(|(_, c)| candidates.contains(c))
        .map(|(pos, _)| {
            let p = pos as isize;
            let w = window as isize;
            EosCandidate {
                position: pos,
                left_window: (p - w..p).map(at).collect(),
                right_window: (p + 1..=p + w).map(at).collect(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EosParams {
    pub embedding: Matrix,
    pub lstm: Lstm,
    pub out_w: Matrix,
    pub out_b: Matrix,
}

impl Parameters for EosParams {
    fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut v = vec![("embedding".to_string(), &self.embedding)];
        v.extend(self.lstm.tensors().into_iter().map(|(n, t)| (format!("lstm.{n}"), t)));
        v.push(("out_w".into(), &self.out_w));
        v.push(("out_b".into(), &self.out_b));
        v
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut v = vec![("embedding".to_string(), &mut self.embedding)];
        v.extend(self.lstm.tensors_mut().into_iter().map(|(n, t)| (format!("lstm.{n}"), t)));
        v.push(("out_w".into(), &mut self.out_w));
        v.push(("out_b".into(), &mut self.out_b));
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EosModel {
    pub char_vocab: BTreeMap<char, usize>,
    pub params: EosParams,
    pub window: usize,
    pub candidates: Vec<char>,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EosTrainReport {
    pub epoch_losses: Vec<f64>,
    /// Candidate accuracy on the held-out tenth of the input sentences.
    pub held_out_accuracy: f64,
}

/// Concatenates sentences with single spaces; returns the text and the
/// character positions of true sentence ends that are candidate characters.
pub fn join_labeled(sentences: &[String], candidates: &[char]) -> (String, Vec<usize>) {
    let mut text = String::new();
    let mut ends = Vec::new();
    let mut len = 0;
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            text.push(' ');
            len += 1;
        }
        let s = s.trim();
        text.push_str(s);
        len += s.chars().count();
        if s.chars().last().is_some_and(|c| candidates.contains(&c)) {
            ends.push(len - 1);
        }
    }
    (text, ends)
}

impl EosModel {
    fn new(char_vocab: BTreeMap<char, usize>, config: &EosConfig, rng: &mut ChaCha8Rng) -> Self {
        let v = char_vocab.len() + 2;
        let params = EosParams {
            embedding: Matrix::uniform_fan_in(v, config.embed_dim, config.embed_dim, rng),
            lstm: Lstm::new(config.embed_dim, config.hidden, rng),
            out_w: Matrix::uniform_fan_in(1, config.hidden, config.hidden, rng),
            out_b: Matrix::zeros(1, 1),
        };
        EosModel {
            char_vocab,
            params,
            window: config.window,
            candidates: config.candidates.clone(),
            threshold: config.threshold,
        }
    }

    fn index(&self, c: char) -> usize {
        if c == PAD {
            PAD_INDEX
        } else {
            self.char_vocab.get(&c).copied().unwrap_or(UNK_INDEX)
        }
    }

    fn inputs(&self, seq: &[char]) -> (Vec<usize>, Vec<Vec<f64>>) {
        let ids: Vec<usize> = seq.iter().map(|&c| self.index(c)).collect();
        let xs = ids.iter().map(|&i| self.params.embedding.row(i).to_vec()).collect();
        (ids, xs)
    }

    /// Boundary probability for a raw character window.
    pub fn classify_window(&self, seq: &[char]) -> f64 {
        let (_, xs) = self.inputs(seq);
        let mut state = LstmState::zeros(self.params.lstm.hidden());
        for x in &xs {
            self.params.lstm.step(x, &mut state);
        }
        sigmoid(dot(self.params.out_w.row(0), &state.h) + self.params.out_b.get(0, 0))
    }

    pub fn classify(&self, text: &str, candidate: &EosCandidate) -> f64 {
        let c = text.chars().nth(candidate.position).unwrap_or(PAD);
        self.classify_window(&candidate.sequence(c))
    }

    /// Binary cross-entropy of one window and its gradient.
    fn loss_and_grad(&self, seq: &[char], label: bool, grads: &mut EosParams) -> f64 {
        let p = &self.params;
        let (ids, xs) = self.inputs(seq);
        let hd = p.lstm.hidden();
        let (hs, _, trace) = p.lstm.forward(&xs, &LstmState::zeros(hd));
        let h_last = hs.last().expect("non-empty window");
        let logit = dot(p.out_w.row(0), h_last) + p.out_b.get(0, 0);
        let prob = sigmoid(logit);
        let y = if label { 1.0 } else { 0.0 };
        let loss = -(y * prob.max(1e-300).ln() + (1.0 - y) * (1.0 - prob).max(1e-300).ln());
        let d_logit = prob - y;
        axpy(d_logit, h_last, grads.out_w.row_mut(0));
        grads.out_b.add_at(0, 0, d_logit);
        let mut d_hs = vec![vec![0.0; hd]; hs.len()];
        let last = d_hs.len() - 1;
        axpy(d_logit, p.out_w.row(0), &mut d_hs[last]);
        let (dxs, _) = p.lstm.backward(&trace, &d_hs, None, &mut grads.lstm);
        for (id, dx) in ids.iter().zip(&dxs) {
            axpy(1.0, dx, grads.embedding.row_mut(*id));
        }
        loss
    }

    /// Positions in `text` after which a sentence ends.
    pub fn boundaries(&self, text: &str) -> Vec<usize> {
        let chars: Vec<char> = text.chars().collect();
        extract_candidates(text, &self.candidates, self.window)
            .into_iter()
            .filter(|c| self.classify_window(&c.sequence(chars[c.position])) >= self.threshold)
            .map(|c| c.position)
            .collect()
    }

    /// Fraction of candidate characters classified correctly in the text
    /// formed by joining `sentences`.
    pub fn accuracy(&self, sentences: &[String]) -> f64 {
        let (text, ends) = join_labeled(sentences, &self.candidates);
        let chars: Vec<char> = text.chars().collect();
        let cands = extract_candidates(&text, &self.candidates, self.window);
        if cands.is_empty() {
            return 1.0;
        }
        let correct = cands
            .iter()
            .filter(|c| {
                let predicted = self.classify_window(&c.sequence(chars[c.position])) >= self.threshold;
                predicted == ends.binary_search(&c.position).is_ok()
            })
            .count();
        correct as f64 / cands.len() as f64
    }

    pub fn to_container(&self) -> Container {
        let vocab: Vec<String> = self.char_vocab.keys().map(|c| c.to_string()).collect();
        let mut c = Container::new(json!({
            "kind": "eos",
            "window": self.window,
            "candidates": self.candidates.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "threshold": self.threshold,
            "char_vocab": vocab,
            "embed_dim": self.params.embedding.cols(),
            "hidden": self.params.lstm.hidden(),
        }));
        c.put_params("eos", &self.params);
        c
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let m = &c.manifest;
        if container::str_field(m, "kind")? != "eos" {
            return Err(Error::MalformedContainer("not a sentence-boundary model".into()));
        }
        let vocab: Vec<String> = container::decode_field(m, "char_vocab")?;
        let candidates: Vec<String> = container::decode_field(m, "candidates")?;
        let char_vocab = chars_to_vocab(&vocab, 2)?;
        let config = EosConfig {
            window: container::usize_field(m, "window")?,
            candidates: candidates.iter().filter_map(|s| s.chars().next()).collect(),
            threshold: container::decode_field(m, "threshold")?,
            embed_dim: container::usize_field(m, "embed_dim")?,
            hidden: container::usize_field(m, "hidden")?,
            ..EosConfig::default()
        };
        let mut model = EosModel::new(char_vocab, &config, &mut ChaCha8Rng::seed_from_u64(0));
        c.load_params("eos", &mut model.params)?;
        Ok(model)
    }
}

/// Maps single-character strings to dense ids starting at `offset`.
pub(crate) fn chars_to_vocab(chars: &[String], offset: usize) -> Result<BTreeMap<char, usize>> {
    chars
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => Ok((c, i + offset)),
                _ => Err(Error::MalformedContainer(format!("bad vocabulary entry {s:?}"))),
            }
        })
        .collect()
}

impl SentenceSplitter for EosModel {
    fn split(&self, text: &str) -> Vec<(usize, usize)> {
        let chars: Vec<char> = text.chars().collect();
        spans_from_boundaries(&chars, &self.boundaries(text))
    }
}

/// Splits `text` into sentence spans with a trained model.
pub fn split_sentences(text: &str, model: &EosModel) -> Vec<(usize, usize)> {
    model.split(text)
}

/// Trains a boundary classifier from sentences. The last tenth (at least one
/// sentence) is held out for the reported accuracy.
pub fn train_eos(sentences: &[String], config: &EosConfig) -> Result<(EosModel, EosTrainReport)> {
    if sentences.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 sentences, got {}",
            sentences.len()
        )));
    }
    if config.candidates.is_empty() || config.window == 0 {
        return Err(Error::InvalidConfig("empty candidate set or zero window".into()));
    }
    let held = (sentences.len() / 10).max(1);
    let (train_part, held_out) = sentences.split_at(sentences.len() - held);
    let train_part = if train_part.is_empty() { held_out } else { train_part };

    let (text, ends) = join_labeled(train_part, &config.candidates);
    let chars: Vec<char> = text.chars().collect();
    let mut distinct: Vec<char> = chars.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let char_vocab: BTreeMap<char, usize> =
        distinct.into_iter().enumerate().map(|(i, c)| (c, i + 2)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EosModel::new(char_vocab, config, &mut rng);

    let mut examples: Vec<(Vec<char>, bool)> = extract_candidates(&text, &config.candidates, config.window)
        .into_iter()
        .map(|c| {
            let label = ends.binary_search(&c.position).is_ok();
            (c.sequence(chars[c.position]), label)
        })
        .collect();
    if examples.is_empty() {
        return Err(Error::InsufficientData("no candidate characters in training text".into()));
    }

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        examples.shuffle(&mut rng);
        let mut total = 0.0;
        for (seq, label) in &examples {
            let mut grads = model.params.zeroed();
            total += model.loss_and_grad(seq, *label, &mut grads);
            clip_global_norm(&mut grads, 5.0);
            sgd_step(&mut model.params, &grads, config.lr);
        }
        epoch_losses.push(total / examples.len() as f64);
    }
    let held_out_accuracy = model.accuracy(held_out);
    Ok((
        model,
        EosTrainReport {
            epoch_losses,
            held_out_accuracy,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;
    use proptest::prelude::*;

    #[test]
    fn candidates_at_each_period() {
        let cands = extract_candidates("Hola. Qué tal.", &EosConfig::default().candidates, 5);
        let pos: Vec<usize> = cands.iter().map(|c| c.position).collect();
        assert_eq!(pos, vec![4, 13]);
        assert_eq!(cands[0].left_window, "\u{0}Hola");
        assert_eq!(cands[0].right_window, " Qué ");
        assert!(extract_candidates("sin puntos", &['.'], 5).is_empty());
    }

    #[test]
    fn single_char_is_fully_padded() {
        let cands = extract_candidates(".", &['.'], 5);
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].left_window, PAD.to_string().repeat(5));
        assert_eq!(cands[0].right_window, PAD.to_string().repeat(5));
    }

    #[test]
    fn single_sentence_is_insufficient() {
        let err = train_eos(&["Hola.".to_string()], &EosConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn rule_splitter_basics() {
        let s = RuleSplitter::default();
        assert_eq!(s.split("Hola. Qué tal."), vec![(0, 5), (6, 14)]);
        assert_eq!(s.split("sin puntos aquí"), vec![(0, 15)]);
        assert!(s.split("").is_empty());
        assert_eq!(s.split("dosis 2.5 mg. Bien"), vec![(0, 13), (14, 18)]);
    }

    fn trained() -> EosModel {
        let sents = synthetic::eos_sentences(300, 3);
        let config = EosConfig { epochs: 4, hidden: 16, embed_dim: 8, ..EosConfig::default() };
        train_eos(&sents, &config).unwrap().0
    }

    #[test]
    fn trained_model_splits_and_round_trips() {
        let model = trained();
        let spans = split_sentences("Hola. Qué tal.", &model);
        assert_eq!(spans, vec![(0, 5), (6, 14)]);
        assert_eq!(split_sentences("sin candidatos aquí", &model), vec![(0, 19)]);
        assert!(split_sentences("", &model).is_empty());
        let back = EosModel::from_container(&Container::from_bytes(&model.to_container().to_bytes()).unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn recovers_its_own_training_boundaries() {
        let sents = synthetic::eos_sentences(300, 3);
        let model = trained();
        let (text, ends) = join_labeled(&sents, &model.candidates);
        let found = model.boundaries(&text);
        let hit = ends.iter().filter(|e| found.binary_search(e).is_ok()).count();
        assert!(hit as f64 >= 0.99 * ends.len() as f64, "{hit}/{}", ends.len());
    }

    #[test]
    fn training_is_deterministic() {
        let sents = synthetic::eos_sentences(60, 9);
        let config = EosConfig { epochs: 1, hidden: 8, embed_dim: 4, ..EosConfig::default() };
        let a = train_eos(&sents, &config).unwrap();
        let b = train_eos(&sents, &config).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn classifier_output_is_a_probability(window in proptest::collection::vec(any::<char>(), 11)) {
            let model = EosModel::new(
                [('a', 2), ('.', 3)].into_iter().collect(),
                &EosConfig { hidden: 6, embed_dim: 3, ..EosConfig::default() },
                &mut ChaCha8Rng::seed_from_u64(3),
            );
            let p = model.classify_window(&window);
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn rule_spans_partition_non_whitespace(text in "[A-Za-z .?!\n]{0,80}") {
            let chars: Vec<char> = text.chars().collect();
            let spans = RuleSplitter::default().split(&text);
            let mut covered = vec![false; chars.len()];
            let mut last = 0;
            for &(s, e) in &spans {
                prop_assert!(s < e && s >= last);
                last = e;
                for c in &mut covered[s..e] { *c = true; }
            }
            for (i, ch) in chars.iter().enumerate() {
                if !ch.is_whitespace() { prop_assert!(covered[i]); }
            }
        }
    }
}
