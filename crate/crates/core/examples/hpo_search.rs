//! A tiny grid search over learning rate and batch size.
//!
//! ```text
//! cargo run --release --example hpo_search
//! ```

use stackner::embeddings::{train_skipgram, SkipGramConfig};
use stackner::synthetic::ner_corpus;
use stackner::tagger::{hpo, EmbeddingStack, SearchSpace, StaticEmbedder, TrainConfig};

fn main() -> stackner::Result<()> {
    let train_set = ner_corpus(80, 1);
    let dev_set = ner_corpus(30, 2);
    let tokens: Vec<Vec<String>> =
        train_set.iter().map(|s| s.surfaces().iter().map(|w| w.to_string()).collect()).collect();
    let sg = SkipGramConfig { dim: 16, window: 3, epochs: 40, lr: 0.05, min_count: 1, ..SkipGramConfig::default() };
    let mut stack = EmbeddingStack::new(vec![Box::new(StaticEmbedder { table: train_skipgram(&tokens, &sg)?.table })]);

    let space = SearchSpace {
        lr_choices: vec![0.05, 0.1],
        batch_choices: vec![1, 8],
        hidden_choices: vec![32],
        trial_max_epochs: 30,
        budget: 4,
        ..SearchSpace::learning_rate_batch()
    };
    println!("{}", space.to_json());
    let result = hpo(&space, &train_set, &dev_set, &mut stack, &TrainConfig { patience: 10, ..TrainConfig::default() }, true)?;
    for t in &result.trials {
        println!("trial {} lr {} batch {} → dev F1 {:.2}", t.trial, t.config.lr, t.config.batch, t.dev_f1);
    }
    println!("best {:?} at {:.2}", result.best, result.best_dev_f1);
    Ok(())
}
