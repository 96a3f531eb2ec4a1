use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build_vocab, EmbeddingTable, SubwordIndex, Variant, Vocab};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, sigmoid, Matrix};

#[derive(Clone, Debug, PartialEq)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to `1e-4 · lr`.
    pub lr: f64,
    pub min_count: u64,
    /// Frequent-word subsampling threshold; `0` disables subsampling.
    pub subsample_t: f64,
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    /// Hash n-grams into this many rows instead of an exact dictionary.
    pub buckets: Option<usize>,
}

impl Default for SkipGramConfig {
    /// word2vec's skip-gram defaults (window 5, 5 negatives, lr 0.025,
    /// sample 1e-3, min-count 5) at 300 dimensions.
    fn default() -> Self {
        SkipGramConfig {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            min_count: 5,
            subsample_t: 1e-3,
            seed: 1,
            n_min: 3,
            n_max: 6,
            buckets: None,
        }
    }
}

impl SkipGramConfig {
    /// fastText's skip-gram defaults (lr 0.05, sample 1e-4, n-grams 3–6).
    pub fn fasttext_defaults() -> Self {
        SkipGramConfig {
            lr: 0.05,
            subsample_t: 1e-4,
            ..SkipGramConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "dim, window, negatives and epochs must all be positive".into(),
            ));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::InvalidConfig("invalid n-gram range".into()));
        }
        Ok(())
    }

    pub fn metadata(&self, variant: Variant) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("variant".into(), variant.as_str().into());
        m.insert("dim".into(), self.dim.to_string());
        m.insert("window".into(), self.window.to_string());
        m.insert("negatives".into(), self.negatives.to_string());
        m.insert("epochs".into(), self.epochs.to_string());
        m.insert("lr".into(), self.lr.to_string());
        m.insert("min_count".into(), self.min_count.to_string());
        m.insert("subsample_t".into(), self.subsample_t.to_string());
        m.insert("negative_distribution".into(), "unigram^0.75".into());
        m.insert("seed".into(), self.seed.to_string());
        if variant == Variant::Subword {
            m.insert("ngram_range".into(), format!("{}-{}", self.n_min, self.n_max));
            m.insert(
                "ngram_buckets".into(),
                self.buckets.map_or("exact".into(), |b| b.to_string()),
            );
        }
        m
    }
}

/// A trained model: the exported table plus the training-only state.
#[derive(Clone, Debug, PartialEq)]
pub struct SkipGramModel {
    pub table: EmbeddingTable,
    /// One output matrix, or `2 · window` for the structured variant
    /// ordered by relative offset `-window..=-1, 1..=window`.
    pub outputs: Vec<Matrix>,
    /// Whole-word unit vectors of the subword variant.
    pub word_units: Option<Matrix>,
    pub epoch_losses: Vec<f64>,
}

impl SkipGramModel {
    pub fn window(&self) -> usize {
        self.outputs.len() / 2
    }

    /// Logit for `context` appearing at signed `offset` from `center`.
    pub fn position_score(&self, center: &str, context: &str, offset: isize) -> Option<f64> {
        let c = self.table.vocab.id(center)?;
        let o = self.table.vocab.id(context)?;
        let m = if self.outputs.len() == 1 {
            &self.outputs[0]
        } else {
            &self.outputs[offset_index(offset, self.window())?]
        };
        Some(dot(self.table.input.row(c), m.row(o)))
    }
}

fn offset_index(offset: isize, window: usize) -> Option<usize> {
    let w = window as isize;
    match offset {
        o if (-w..0).contains(&o) => Some((o + w) as usize),
        o if (1..=w).contains(&o) => Some((o + w - 1) as usize),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgnsGrad {
    pub loss: f64,
    pub d_input: Vec<f64>,
    pub d_positive: Vec<f64>,
    pub d_negatives: Vec<Vec<f64>>,
}

/// Negative-sampling logistic loss
/// `-ln σ(u·v⁺) - Σ ln σ(-u·v⁻)` and its gradients.
pub fn sgns_loss_grad(input: &[f64], positive: &[f64], negatives: &[&[f64]]) -> SgnsGrad {
    let dim = input.len();
    let mut d_input = vec![0.0; dim];
    let s = dot(input, positive);
    let p = sigmoid(s);
    let mut loss = -p.max(1e-300).ln();
    let g = p - 1.0;
    axpy(g, positive, &mut d_input);
    let d_positive = input.iter().map(|x| g * x).collect();
    let mut d_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let q = sigmoid(dot(input, neg));
        loss -= (1.0 - q).max(1e-300).ln();
        axpy(q, neg, &mut d_input);
        d_negatives.push(input.iter().map(|x| q * x).collect());
    }
    SgnsGrad {
        loss,
        d_input,
        d_positive,
        d_negatives,
    }
}

struct Trainer<'a> {
    config: &'a SkipGramConfig,
    variant: Variant,
    vocab: Vocab,
    word_units: Matrix,
    ngram_ids: Vec<Vec<usize>>,
    ngrams: Option<SubwordIndex>,
    outputs: Vec<Matrix>,
    rng: ChaCha8Rng,
}

impl Trainer<'_> {
    fn input_vector(&self, w: usize) -> Vec<f64> {
        let mut v = self.word_units.row(w).to_vec();
        if let Some(ng) = &self.ngrams {
            for &id in &self.ngram_ids[w] {
                axpy(1.0, ng.matrix.row(id), &mut v);
            }
        }
        v
    }

    fn apply_input_grad(&mut self, w: usize, scale: f64, d: &[f64]) {
        axpy(scale, d, self.word_units.row_mut(w));
        if let Some(ng) = &mut self.ngrams {
            for &id in &self.ngram_ids[w] {
                axpy(scale, d, ng.matrix.row_mut(id));
            }
        }
    }

    fn run(&mut self, sentences: &[Vec<usize>]) -> Vec<f64> {
        let cfg = self.config;
        let counts = self.vocab.counts();
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        let noise = WeightedIndex::new(&weights).expect("vocabulary is non-empty");
        let total_words = self.vocab.total_tokens() as f64;
        let keep_prob: Vec<f64> = counts
            .iter()
            .map(|&c| {
                if cfg.subsample_t <= 0.0 {
                    return 1.0;
                }
                let f = c as f64;
                let tn = cfg.subsample_t * total_words;
                ((f / tn).sqrt() + 1.0) * tn / f
            })
            .collect();
        let budget = (cfg.epochs as f64 * total_words).max(1.0);
        let mut processed = 0.0;
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);

        for _ in 0..cfg.epochs {
            let mut loss_sum = 0.0;
            let mut pairs = 0usize;
            for sent in sentences {
                processed += sent.len() as f64;
                let kept: Vec<usize> = sent
                    .iter()
                    .copied()
                    .filter(|&w| keep_prob[w] >= 1.0 || self.rng.gen::<f64>() < keep_prob[w])
                    .collect();
                let lr = cfg.lr * (1.0 - processed / budget).max(1e-4);
                for pos in 0..kept.len() {
                    let center = kept[pos];
                    let reach = self.rng.gen_range(1..=cfg.window) as isize;
                    for offset in -reach..=reach {
                        let ctx_pos = pos as isize + offset;
                        if offset == 0 || ctx_pos < 0 || ctx_pos >= kept.len() as isize {
                            continue;
                        }
                        let context = kept[ctx_pos as usize];
                        let out_idx = match self.variant {
                            Variant::Structured => offset_index(offset, cfg.window).expect("offset in window"),
                            _ => 0,
                        };
                        let negs: Vec<usize> = (0..cfg.negatives)
                            .map(|_| noise.sample(&mut self.rng))
                            .filter(|&n| n != context)
                            .collect();
                        let input = self.input_vector(center);
                        let out = &self.outputs[out_idx];
                        let neg_rows: Vec<&[f64]> = negs.iter().map(|&n| out.row(n)).collect();
                        let g = sgns_loss_grad(&input, out.row(context), &neg_rows);
                        loss_sum += g.loss;
                        pairs += 1;
                        let out = &mut self.outputs[out_idx];
                        axpy(-lr, &g.d_positive, out.row_mut(context));
                        for (n, d) in negs.iter().zip(&g.d_negatives) {
                            axpy(-lr, d, out.row_mut(*n));
                        }
                        self.apply_input_grad(center, -lr, &g.d_input);
                    }
                }
            }
            epoch_losses.push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
        }
        epoch_losses
    }
}

fn train(corpus: &[Vec<String>], config: &SkipGramConfig, variant: Variant) -> Result<SkipGramModel> {
    config.validate()?;
    let vocab = build_vocab(corpus.iter().flatten().map(String::as_str), config.min_count);
    if vocab.is_empty() {
        return Err(Error::EmptyVocab);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.dim;
    let bound = 0.5 / dim as f64;
    let word_units = Matrix::from_vec(
        vocab.len(),
        dim,
        (0..vocab.len() * dim).map(|_| rng.gen_range(-bound..bound)).collect(),
    );
    let (ngrams, ngram_ids) = if variant == Variant::Subword {
        let mut index = match config.buckets {
            Some(b) => SubwordIndex::hashed(b, config.n_min, config.n_max, dim),
            None => SubwordIndex::exact(vocab.words().iter().map(String::as_str), config.n_min, config.n_max, dim),
        };
        for v in index.matrix.as_mut_slice() {
            *v = rng.gen_range(-bound..bound);
        }
        let ids = vocab.words().iter().map(|w| index.ids_for(w).0).collect();
        (Some(index), ids)
    } else {
        (None, vec![Vec::new(); vocab.len()])
    };
    let n_outputs = if variant == Variant::Structured { 2 * config.window } else { 1 };
    let outputs = vec![Matrix::zeros(vocab.len(), dim); n_outputs];

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().filter_map(|w| vocab.id(w)).collect())
        .collect();

    let mut trainer = Trainer {
        config,
        variant,
        vocab,
        word_units,
        ngram_ids,
        ngrams,
        outputs,
        rng,
    };
    let epoch_losses = trainer.run(&sentences);

    let input = if variant == Variant::Subword {
        let rows: Vec<Vec<f64>> = (0..trainer.vocab.len()).map(|w| trainer.input_vector(w)).collect();
        Matrix::from_rows(&rows)
    } else {
        trainer.word_units.clone()
    };
    let word_units = (variant == Variant::Subword).then(|| trainer.word_units.clone());
    Ok(SkipGramModel {
        table: EmbeddingTable {
            vocab: trainer.vocab,
            input,
            variant,
            subword: trainer.ngrams,
            metadata: config.metadata(variant),
        },
        outputs: trainer.outputs,
        word_units,
        epoch_losses,
    })
}

/// Skip-gram with negative sampling and one shared output matrix.
pub fn train_skipgram(corpus: &[Vec<String>], config: &SkipGramConfig) -> Result<SkipGramModel> {
    train(corpus, config, Variant::Plain)
}

/// Structured skip-gram: a separate output matrix for every signed relative
/// position in the window.
pub fn train_structured_skipgram(corpus: &[Vec<String>], config: &SkipGramConfig) -> Result<SkipGramModel> {
    train(corpus, config, Variant::Structured)
}

/// Subword skip-gram: a word's input vector is the sum of its character
/// n-gram vectors and its own whole-word vector.
pub fn train_subword_skipgram(corpus: &[Vec<String>], config: &SkipGramConfig) -> Result<SkipGramModel> {
    train(corpus, config, Variant::Subword)
}
