//! The three skip-gram variants on a small synthetic corpus, plus an
//! out-of-vocabulary lookup through character n-grams.
//!
//! ```text
//! cargo run --release --example train_embeddings
//! ```

use stackner::embeddings::{
    save_word2vec, train_skipgram, train_structured_skipgram, train_subword_skipgram, SkipGramConfig,
};
use stackner::linalg::cosine;
use stackner::synthetic::ner_corpus;

fn main() -> stackner::Result<()> {
    let corpus: Vec<Vec<String>> = ner_corpus(400, 3)
        .iter()
        .map(|s| s.surfaces().iter().map(|w| w.to_lowercase()).collect())
        .collect();
    let config = SkipGramConfig { dim: 32, window: 3, epochs: 5, min_count: 2, ..SkipGramConfig::default() };

    let plain = train_skipgram(&corpus, &config)?;
    let structured = train_structured_skipgram(&corpus, &config)?;
    let subword = train_subword_skipgram(
        &corpus,
        &SkipGramConfig { buckets: Some(20_000), ..SkipGramConfig { ..config.clone() } },
    )?;

    let pair = ("amoxicilina", "ibuprofeno");
    for (name, m) in [("plain", &plain), ("structured", &structured), ("subword", &subword)] {
        let t = &m.table;
        println!(
            "{name:<10} vocab {:>4}  cos({}, {}) = {:+.3}",
            t.vocab.len(),
            pair.0,
            pair.1,
            cosine(&t.lookup(pair.0), &t.lookup(pair.1))
        );
    }
    let (v, kind) = subword.table.lookup_detailed("amoxicilinas");
    println!("unseen 'amoxicilinas' → {kind:?}, cos to 'amoxicilina' {:+.3}", cosine(&v, &subword.table.lookup("amoxicilina")));

    let text = save_word2vec(&plain.table);
    println!("word2vec header: {}", text.lines().next().unwrap_or(""));
    Ok(())
}
