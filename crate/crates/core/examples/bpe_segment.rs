//! Learning merges, segmenting words and pooling piece vectors.
//!
//! ```text
//! cargo run --example bpe_segment
//! ```

use std::collections::HashMap;

use stackner::bpe::{learn_bpe, segment, token_vector, train_piece_embeddings, MergeTable, Pooling};
use stackner::embeddings::SkipGramConfig;
use stackner::synthetic::ner_corpus;

fn main() -> stackner::Result<()> {
    let toy: HashMap<String, u64> =
        [("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)].iter().map(|(w, f)| (w.to_string(), *f)).collect();
    let table = learn_bpe(&toy, 1000)?;
    println!("toy merges:\n{}", table.to_text());

    let merges = MergeTable::from_text("_a m\n_am o\ni c\nic i\nl i\nli n\nlin a\n")?;
    println!("amoxicilina → {:?}", segment("amoxicilina", &merges));

    let corpus: Vec<Vec<String>> = ner_corpus(300, 5)
        .iter()
        .map(|s| s.surfaces().iter().map(|w| w.to_string()).collect())
        .collect();
    let freq = stackner::bpe::word_frequencies(corpus.iter().flatten().map(String::as_str));
    let learned = learn_bpe(&freq, 120)?;
    println!("{} merges learned from the corpus", learned.len());
    for w in ["clavulánico", "paracetamol", "troponinas"] {
        println!("  {w} → {:?}", segment(w, &learned));
    }

    let config = SkipGramConfig { dim: 16, window: 3, epochs: 3, min_count: 1, ..SkipGramConfig::default() };
    let pieces = train_piece_embeddings(&corpus, &learned, &config)?;
    let v = token_vector("troponinas", &learned, &pieces, Pooling::Mean);
    println!("{} piece vectors; mean-pooled 'troponinas'[..4] = {:?}", pieces.pieces().len(), &v[..4]);
    Ok(())
}
