//! brat → CoNLL → brat on a generated document.
//!
//! ```text
//! cargo run --example convert_brat
//! ```

use stackner::corpus::{convert_document, export_document, write_conll, OverlapPolicy};
use stackner::eos::RuleSplitter;
use stackner::synthetic::brat_documents;

fn main() -> stackner::Result<()> {
    let (id, txt, ann, n) = brat_documents(1, 3, 1).remove(0);
    println!("--- {id}.txt\n{txt}\n--- {id}.ann ({n} entities)\n{ann}");

    let conv = convert_document(&id, &txt, &ann, &RuleSplitter::default(), OverlapPolicy::Reject)?;
    println!("--- {id}.conll\n{}", write_conll(&conv.document.sentences));

    let back = export_document(&conv.document.sentences, Some(&txt));
    assert_eq!(back.lines().count(), n);
    println!("--- exported\n{back}");
    Ok(())
}
