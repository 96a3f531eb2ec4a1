//! Rule-based and learned sentence splitting.
//!
//! ```text
//! cargo run --release --example sentence_split
//! ```

use stackner::eos::{train_eos, EosConfig, RuleSplitter, SentenceSplitter};
use stackner::synthetic::eos_sentences;

fn show(name: &str, text: &str, splitter: &dyn SentenceSplitter) {
    let chars: Vec<char> = text.chars().collect();
    println!("{name}:");
    for (s, e) in splitter.split(text) {
        println!("  [{s:>3}, {e:>3}) {}", chars[s..e].iter().collect::<String>());
    }
}

fn main() -> stackner::Result<()> {
    let text = "Se pautó 2.5 mg de amoxicilina. Control: sin cambios. ¿Dolor? No.";
    show("rules", text, &RuleSplitter::default());

    let (model, report) = train_eos(&eos_sentences(1500, 1), &EosConfig::default())?;
    println!("held-out candidate accuracy {:.4}", report.held_out_accuracy);
    println!("fresh sentences accuracy {:.4}", model.accuracy(&eos_sentences(500, 2)));
    show("model", text, &model);
    Ok(())
}
