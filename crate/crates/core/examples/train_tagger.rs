//! Trains a small stacked-embedding tagger, saves it, reloads it and tags
//! raw text.
//!
//! ```text
//! cargo run --release --example train_tagger
//! ```

use stackner::charlm::{train_char_lm, CharLmConfig, Direction, PoolOp};
use stackner::embeddings::{train_skipgram, SkipGramConfig};
use stackner::eos::RuleSplitter;
use stackner::synthetic::{corpus_text, ner_corpus};
use stackner::tagger::{train, EmbeddingStack, PceEmbedder, StaticEmbedder, TaggerConfig, TaggerModel, TrainConfig};

fn main() -> stackner::Result<()> {
    let train_set = ner_corpus(120, 1);
    let dev_set = ner_corpus(40, 2);

    let text = corpus_text(&train_set);
    let lm = CharLmConfig { hidden: 32, embed_dim: 16, epochs: 3, ..CharLmConfig::default() };
    let (fwd, _) = train_char_lm(&text, &lm, Direction::Forward)?;
    let (bwd, _) = train_char_lm(&text, &lm, Direction::Backward)?;
    let tokens: Vec<Vec<String>> =
        train_set.iter().map(|s| s.surfaces().iter().map(|w| w.to_string()).collect()).collect();
    let sg = SkipGramConfig { dim: 20, window: 3, epochs: 5, min_count: 1, ..SkipGramConfig::default() };
    let table = train_skipgram(&tokens, &sg)?.table;

    let mut stack = EmbeddingStack::new(vec![
        Box::new(PceEmbedder::new(fwd, bwd, PoolOp::Mean)),
        Box::new(StaticEmbedder { table }),
    ]);
    println!("stack {:?} dims {:?}", stack.kinds(), stack.dims());

    let tagger = TaggerConfig { hidden: 32, ..TaggerConfig::default() };
    let config = TrainConfig { batch: 4, max_epochs: 15, ..TrainConfig::default() };
    let outcome = train(&train_set, &dev_set, &mut stack, &tagger, &config)?;
    for e in &outcome.history.epochs {
        println!("epoch {:>2} lr {:.4} loss {:>8.3} dev F1 {:.2}", e.epoch, e.lr, e.train_loss, e.dev_f1);
    }

    let path = std::env::temp_dir().join("stackner_example_tagger.bin");
    TaggerModel::new(stack, outcome).save(&path)?;
    let mut model = TaggerModel::load(&path)?;
    println!("reloaded {} parameters from {}", model.num_parameters(), path.display());

    let text = "Se inició tratamiento con amoxicilina oral. La troponina fue normal.";
    let (_, ann) = model.tag_text(text, &RuleSplitter::default())?;
    print!("{ann}");
    Ok(())
}
