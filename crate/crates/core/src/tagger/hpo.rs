//! Grid and random hyperparameter search over the tagger settings.

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::TaggerConfig;
use super::stack::EmbeddingStack;
use super::train::{train, TrainConfig};
use crate::corpus::TaggedSentence;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Grid,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub lr_choices: Vec<f64>,
    pub batch_choices: Vec<usize>,
    pub hidden_choices: Vec<usize>,
    /// Closed interval; grid mode evaluates it at `dropout_grid_points`
    /// evenly spaced points.
    pub dropout_range: (f64, f64),
    #[serde(default = "default_grid_points")]
    pub dropout_grid_points: usize,
    pub layer_choices: Vec<usize>,
    pub budget: usize,
    pub mode: SearchMode,
    /// Epoch cap for every trial.
    #[serde(default = "default_trial_epochs")]
    pub trial_max_epochs: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_grid_points() -> usize {
    1
}

fn default_trial_epochs() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub lr: f64,
    pub batch: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub layers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub config: TrialConfig,
    pub dev_f1: f64,
    pub best_epoch: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HpoResult {
    pub best: TrialConfig,
    pub best_dev_f1: f64,
    pub trials: Vec<TrialRecord>,
}

impl SearchSpace {
    /// Learning rate × batch size, everything else at the reference setting.
    pub fn learning_rate_batch() -> Self {
        SearchSpace {
            lr_choices: vec![0.01, 0.05, 0.1],
            batch_choices: vec![8, 16, 32],
            hidden_choices: vec![256],
            dropout_range: (0.0, 0.0),
            dropout_grid_points: 1,
            layer_choices: vec![1],
            budget: 9,
            mode: SearchMode::Grid,
            trial_max_epochs: default_trial_epochs(),
            seed: 0,
        }
    }

    /// The wider space including hidden size, dropout and depth.
    pub fn full() -> Self {
        SearchSpace {
            lr_choices: vec![0.05, 0.1, 0.15],
            batch_choices: vec![8, 16, 32],
            hidden_choices: vec![256, 512],
            dropout_range: (0.0, 0.5),
            dropout_grid_points: 3,
            layer_choices: vec![1, 2],
            budget: 20,
            mode: SearchMode::Random,
            trial_max_epochs: default_trial_epochs(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("search space: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("search space serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.lr_choices.is_empty()
            || self.batch_choices.is_empty()
            || self.hidden_choices.is_empty()
            || self.layer_choices.is_empty()
            || (self.mode == SearchMode::Grid && self.dropout_grid_points == 0)
        {
            return Err(Error::EmptySpace);
        }
        let (lo, hi) = self.dropout_range;
        if !(0.0 <= lo && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidConfig(format!("dropout range [{lo}, {hi}]")));
        }
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be at least 1".into()));
        }
        Ok(())
    }

    fn dropout_grid(&self) -> Vec<f64> {
        let (lo, hi) = self.dropout_range;
        let k = self.dropout_grid_points;
        if k == 1 || lo == hi {
            return vec![lo];
        }
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    }

    /// The trial configurations in evaluation order, at most `budget` of them.
    pub fn trials(&self) -> Result<Vec<TrialConfig>> {
        self.validate()?;
        match self.mode {
            SearchMode::Grid => {
                let mut out = Vec::new();
                for &lr in &self.lr_choices {
                    for &batch in &self.batch_choices {
                        for &hidden in &self.hidden_choices {
                            for dropout in self.dropout_grid() {
                                for &layers in &self.layer_choices {
                                    out.push(TrialConfig { lr, batch, hidden, dropout, layers });
                                }
                            }
                        }
                    }
                }
                out.truncate(self.budget);
                Ok(out)
            }
            SearchMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let (lo, hi) = self.dropout_range;
                Ok((0..self.budget)
                    .map(|_| TrialConfig {
                        lr: self.lr_choices[rng.gen_range(0..self.lr_choices.len())],
                        batch: self.batch_choices[rng.gen_range(0..self.batch_choices.len())],
                        hidden: self.hidden_choices[rng.gen_range(0..self.hidden_choices.len())],
                        dropout: if hi > lo { rng.gen_range(lo..=hi) } else { lo },
                        layers: self.layer_choices[rng.gen_range(0..self.layer_choices.len())],
                    })
                    .collect())
            }
        }
    }
}

/// Trains one tagger per trial and keeps the best by dev F1 (earliest wins
/// ties). `base` supplies the settings the space does not cover.
pub fn hpo(
    space: &SearchSpace,
    train_set: &[TaggedSentence],
    dev: &[TaggedSentence],
    stack: &mut EmbeddingStack,
    base: &TrainConfig,
    reproject: bool,
) -> Result<HpoResult> {
    let configs = space.trials()?;
    let mut trials = Vec::with_capacity(configs.len());
    for (i, cfg) in configs.into_iter().enumerate() {
        let tagger = TaggerConfig {
            hidden: cfg.hidden,
            layers: cfg.layers,
            dropout: cfg.dropout,
            reproject,
        };
        let tc = TrainConfig {
            lr: cfg.lr,
            batch: cfg.batch,
            max_epochs: space.trial_max_epochs,
            ..base.clone()
        };
        let outcome = train(train_set, dev, stack, &tagger, &tc)?;
        info!("trial {} {:?} dev F1 {:.2}", i + 1, cfg, outcome.history.best_dev_f1);
        trials.push(TrialRecord {
            trial: i + 1,
            config: cfg,
            dev_f1: outcome.history.best_dev_f1,
            best_epoch: outcome.history.best_epoch,
        });
    }
    let best = trials
        .iter()
        .fold(None::<&TrialRecord>, |acc, t| match acc {
            Some(b) if b.dev_f1 >= t.dev_f1 => Some(b),
            _ => Some(t),
        })
        .expect("at least one trial");
    Ok(HpoResult {
        best: best.config.clone(),
        best_dev_f1: best.dev_f1,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_cartesian_product() {
        let t = SearchSpace::learning_rate_batch().trials().unwrap();
        assert_eq!(t.len(), 9);
        assert_eq!((t[0].lr, t[0].batch), (0.01, 8));
        assert_eq!((t[8].lr, t[8].batch), (0.1, 32));
    }

    #[test]
    fn random_is_seeded_and_in_bounds() {
        let s = SearchSpace::full();
        let a = s.trials().unwrap();
        assert_eq!(a, s.trials().unwrap());
        assert_eq!(a.len(), 20);
        for t in &a {
            assert!(s.lr_choices.contains(&t.lr));
            assert!(s.batch_choices.contains(&t.batch));
            assert!(s.hidden_choices.contains(&t.hidden));
            assert!(s.layer_choices.contains(&t.layers));
            assert!((0.0..=0.5).contains(&t.dropout));
        }
        let other = SearchSpace { seed: 1, ..s }.trials().unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn empty_space_and_budget() {
        let s = SearchSpace { lr_choices: vec![], ..SearchSpace::learning_rate_batch() };
        assert!(matches!(s.trials(), Err(Error::EmptySpace)));
        let one = SearchSpace { budget: 1, ..SearchSpace::learning_rate_batch() };
        assert_eq!(one.trials().unwrap().len(), 1);
    }

    #[test]
    fn json_round_trip() {
        let s = SearchSpace::full();
        assert_eq!(SearchSpace::from_json(&s.to_json()).unwrap(), s);
        let minimal = r#"{"lr_choices":[0.1],"batch_choices":[8],"hidden_choices":[16],
            "dropout_range":[0.0,0.0],"layer_choices":[1],"budget":1,"mode":"grid"}"#;
        assert_eq!(SearchSpace::from_json(minimal).unwrap().trial_max_epochs, 20);
    }
}
