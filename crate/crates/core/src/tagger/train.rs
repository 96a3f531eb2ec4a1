//! Mini-batch SGD with dev-driven learning-rate annealing.

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{TaggerConfig, TaggerParams};
use super::stack::{stack_embed, EmbeddingStack};
use crate::corpus::TaggedSentence;
use crate::error::{Error, Result};
use crate::eval::{evaluate, mentions_from_sentences};
use crate::linalg::{clip_global_norm, sgd_step, Matrix, Parameters};

/// BIO tag inventory: `O` first, then `B-X`, `I-X` per label in label order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    tags: Vec<String>,
}

impl TagSet {
    pub fn from_tags(tags: Vec<String>) -> Self {
        TagSet { tags }
    }

    /// Tags observed in `sentences` (plus `O`).
    pub fn from_sentences(sentences: &[TaggedSentence]) -> Self {
        let mut seen: std::collections::BTreeSet<(String, u8)> = Default::default();
        for s in sentences {
            for t in &s.tags {
                if let Some(l) = t.strip_prefix("B-") {
                    seen.insert((l.to_string(), 0));
                } else if let Some(l) = t.strip_prefix("I-") {
                    seen.insert((l.to_string(), 1));
                }
            }
        }
        let mut tags = vec!["O".to_string()];
        tags.extend(
            seen.into_iter()
                .map(|(l, k)| format!("{}-{l}", if k == 0 { "B" } else { "I" })),
        );
        TagSet { tags }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag(&self, index: usize) -> &str {
        &self.tags[index]
    }

    /// Unknown tags map to `O`.
    pub fn index(&self, tag: &str) -> usize {
        self.tags.iter().position(|t| t == tag).unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub anneal_factor: f64,
    pub patience: usize,
    pub max_epochs: usize,
    /// Training stops once the learning rate falls below this.
    pub min_lr: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Global L2 gradient-norm limit; `None` disables clipping.
    pub clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.1,
            batch: 32,
            anneal_factor: 0.5,
            patience: 3,
            max_epochs: 150,
            min_lr: 1e-4,
            seed: 1,
            shuffle: true,
            clip: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.anneal_factor > 0.0 && self.anneal_factor < 1.0) {
            return Err(Error::InvalidConfig("anneal factor must lie in (0, 1)".into()));
        }
        if self.batch == 0 || self.lr <= 0.0 {
            return Err(Error::InvalidConfig("batch size and learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Reduce-on-plateau schedule over a maximized dev score. The counter holds
/// consecutive non-improving epochs; the rate is annealed once it exceeds
/// `patience`, and both an improvement and an anneal reset it.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    best: f64,
    bad_epochs: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduleStep {
    pub improved: bool,
    pub annealed: bool,
}

impl AnnealScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize) -> Self {
        AnnealScheduler {
            lr,
            factor,
            patience,
            best: f64::NEG_INFINITY,
            bad_epochs: 0,
        }
    }

    pub fn bad_epochs(&self) -> usize {
        self.bad_epochs
    }

    pub fn step(&mut self, score: f64) -> ScheduleStep {
        if score > self.best {
            self.best = score;
            self.bad_epochs = 0;
            return ScheduleStep {
                improved: true,
                annealed: false,
            };
        }
        self.bad_epochs += 1;
        let annealed = self.bad_epochs > self.patience;
        if annealed {
            self.lr *= self.factor;
            self.bad_epochs = 0;
        }
        ScheduleStep {
            improved: false,
            annealed,
        }
    }
}

/// Learning rate after each epoch's scheduler step for a given dev-score
/// sequence, stopping early once it drops below `min_lr`.
pub fn simulate_schedule(scores: &[f64], lr: f64, factor: f64, patience: usize, min_lr: f64) -> Vec<f64> {
    let mut s = AnnealScheduler::new(lr, factor, patience);
    let mut trace = Vec::new();
    for &score in scores {
        s.step(score);
        trace.push(s.lr);
        if s.lr < min_lr {
            break;
        }
    }
    trace
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Rate used during this epoch.
    pub lr: f64,
    pub train_loss: f64,
    pub dev_f1: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_f1: f64,
}

pub struct TrainOutcome {
    /// Parameters of the best dev epoch.
    pub params: TaggerParams,
    pub tags: TagSet,
    pub history: TrainHistory,
}

fn embed_all(sentences: &[TaggedSentence], stack: &mut EmbeddingStack) -> Result<Vec<Matrix>> {
    sentences.iter().map(|s| stack_embed(&s.surfaces(), stack)).collect()
}

/// Entity-level micro F1 (percent) of `params` on `sentences`.
pub fn f1_on(params: &TaggerParams, tags: &TagSet, sentences: &[TaggedSentence], inputs: &[Matrix]) -> f64 {
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    for (i, (s, x)) in sentences.iter().zip(inputs).enumerate() {
        let doc = i.to_string();
        gold.extend(mentions_from_sentences(&doc, std::slice::from_ref(s)));
        let predicted = TaggedSentence::new(
            s.tokens.clone(),
            params.decode(x).into_iter().map(|k| tags.tag(k).to_string()).collect(),
        );
        pred.extend(mentions_from_sentences(&doc, &[predicted]));
    }
    evaluate(&gold, &pred).map(|r| r.f1()).unwrap_or(0.0)
}

/// Trains a tagger over the stacked embeddings. An empty `dev` split is
/// replaced by the training split for scheduling and model selection.
pub fn train(
    train: &[TaggedSentence],
    dev: &[TaggedSentence],
    stack: &mut EmbeddingStack,
    tagger: &TaggerConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let train: Vec<TaggedSentence> = train.iter().filter(|s| !s.is_empty()).cloned().collect();
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if stack.is_empty() {
        return Err(Error::InvalidConfig("embedding stack is empty".into()));
    }
    tagger.validate()?;
    config.validate()?;
    let dev: Vec<TaggedSentence> = if dev.is_empty() { train.clone() } else { dev.to_vec() };
    let tags = TagSet::from_sentences(&train);
    let gold: Vec<Vec<usize>> = train
        .iter()
        .map(|s| s.tags.iter().map(|t| tags.index(t)).collect())
        .collect();

    let mut params = TaggerParams::new(stack.total_dim(), tags.len(), tagger, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let cached = if stack.is_stateful() {
        None
    } else {
        Some((embed_all(&train, stack)?, embed_all(&dev, stack)?))
    };

    let mut scheduler = AnnealScheduler::new(config.lr, config.anneal_factor, config.patience);
    let mut history = TrainHistory {
        best_dev_f1: f64::NEG_INFINITY,
        ..Default::default()
    };
    let mut best = params.clone();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=config.max_epochs {
        let lr = scheduler.lr;
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        stack.reset_epoch();
        let mut total = 0.0;
        for batch in order.chunks(config.batch) {
            let mut grads = params.zeroed();
            for &i in batch {
                let owned;
                let x = match &cached {
                    Some((xs, _)) => &xs[i],
                    None => {
                        owned = stack_embed(&train[i].surfaces(), stack)?;
                        &owned
                    }
                };
                total += params.loss_and_grad(x, &gold[i], &mut grads, Some(&mut rng))?;
            }
            let scale = 1.0 / batch.len() as f64;
            for (_, g) in grads.tensors_mut() {
                g.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
            }
            if let Some(c) = config.clip {
                clip_global_norm(&mut grads, c);
            }
            sgd_step(&mut params, &grads, lr);
        }
        let dev_inputs_owned;
        let dev_inputs = match &cached {
            Some((_, d)) => d,
            None => {
                dev_inputs_owned = embed_all(&dev, stack)?;
                &dev_inputs_owned
            }
        };
        let dev_f1 = f1_on(&params, &tags, &dev, dev_inputs);
        let train_loss = total / train.len() as f64;
        info!("epoch {epoch} lr {lr} loss {train_loss:.4} dev F1 {dev_f1:.2}");
        history.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            dev_f1,
        });
        if dev_f1 > history.best_dev_f1 {
            history.best_dev_f1 = dev_f1;
            history.best_epoch = epoch;
            best = params.clone();
        }
        scheduler.step(dev_f1);
        if scheduler.lr < config.min_lr {
            info!("learning rate {} below {}, stopping", scheduler.lr, config.min_lr);
            break;
        }
    }
    Ok(TrainOutcome {
        params: best,
        tags,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_trace() {
        let trace = simulate_schedule(&[0.5; 9], 0.1, 0.5, 3, 0.0);
        assert_eq!(trace, vec![0.1, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05, 0.025]);
    }

    #[test]
    fn improvement_resets_counter() {
        let mut s = AnnealScheduler::new(0.1, 0.5, 3);
        s.step(0.5);
        s.step(0.5);
        assert_eq!(s.bad_epochs(), 1);
        s.step(0.6);
        assert_eq!(s.bad_epochs(), 0);
        for _ in 0..3 {
            s.step(0.6);
        }
        assert_eq!(s.lr, 0.1);
        s.step(0.6);
        assert_eq!(s.lr, 0.05);
    }

    #[test]
    fn halts_below_min_lr() {
        let trace = simulate_schedule(&[0.5; 100], 0.1, 0.5, 3, 1e-3);
        assert!(*trace.last().unwrap() < 1e-3);
        assert!(trace[..trace.len() - 1].iter().all(|&lr| lr >= 1e-3));
        // 0.1 → 0.05 → … → 0.00078125 takes 7 anneals, 4 epochs each after the first
        assert_eq!(trace.len(), 1 + 7 * 4);
    }

    #[test]
    fn tagset_order() {
        let s = TaggedSentence::new(
            crate::corpus::tokenize("a b c"),
            vec!["B-Y".into(), "I-Y".into(), "B-X".into()],
        );
        let t = TagSet::from_sentences(&[s]);
        assert_eq!(t.tags(), ["O", "B-X", "B-Y", "I-Y"]);
        assert_eq!(t.index("I-X"), 0);
    }

    #[test]
    fn empty_dataset() {
        let mut stack = EmbeddingStack::default();
        let r = train(&[], &[], &mut stack, &TaggerConfig::default(), &TrainConfig::default());
        assert!(matches!(r, Err(Error::EmptyDataset)));
    }
}
