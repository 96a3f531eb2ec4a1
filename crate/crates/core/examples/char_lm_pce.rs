//! Character language models, contextual string embeddings and the pooled
//! memory that grows across sentences.
//!
//! ```text
//! cargo run --release --example char_lm_pce
//! ```

use stackner::charlm::{extract_cse, pce_embed, train_char_lm, CharLmConfig, Direction, PceMemory, PoolOp};
use stackner::linalg::cosine;
use stackner::synthetic::{corpus_text, ner_corpus};

fn main() -> stackner::Result<()> {
    let text = corpus_text(&ner_corpus(200, 9));
    let config = CharLmConfig { hidden: 32, embed_dim: 16, epochs: 3, ..CharLmConfig::default() };
    let (fwd, report) = train_char_lm(&text, &config, Direction::Forward)?;
    let (bwd, _) = train_char_lm(&text, &config, Direction::Backward)?;
    println!("forward LM perplexity {:.3}", report.final_perplexity);

    let a = ["Se", "pautó", "amoxicilina", "oral", "."];
    let b = ["La", "amoxicilina", "fue", "suspendida", "."];
    let cse_a = extract_cse(&a, &fwd, &bwd);
    let cse_b = extract_cse(&b, &fwd, &bwd);
    println!("CSE dim {}; cos(amoxicilina in a, in b) = {:.3}", cse_a[2].len(), cosine(&cse_a[2], &cse_b[1]));

    for op in [PoolOp::Min, PoolOp::Max, PoolOp::Mean] {
        let mut memory = PceMemory::new();
        pce_embed(&a, &cse_a, &mut memory, op);
        let out = pce_embed(&b, &cse_b, &mut memory, op);
        let seen = memory.get("amoxicilina").map_or(0, |g| g.count);
        println!("{:<4} PCE dim {}, 'amoxicilina' seen {seen}×", op.as_str(), out[1].len());
    }
    Ok(())
}
