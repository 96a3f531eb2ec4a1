//! Strict entity-level scoring and the results table.
//!
//! ```text
//! cargo run --example evaluate
//! ```

use stackner::eval::{evaluate, evaluate_with, mentions_from_ann, report_table, MatchMode};

fn main() -> stackner::Result<()> {
    let gold = "T1\tNORMALIZABLES 12 37\tamoxicilina - clavulánico\nT2\tPROTEINAS 50 59\ttroponina\n";
    let pred = "T1\tNORMALIZABLES 12 23\tamoxicilina\nT2\tPROTEINAS 50 59\ttroponina\n";
    let gold = mentions_from_ann("doc", gold)?;
    let pred = mentions_from_ann("doc", pred)?;

    let strict = evaluate(&gold, &pred)?;
    let relaxed = evaluate_with(&gold, &pred, MatchMode::Overlap)?;
    print!("{}", report_table(&[("strict".into(), strict.clone()), ("overlap".into(), relaxed)]));
    println!("F1 / P / R: {}", strict.triple());
    print!("{}", strict.summary());
    Ok(())
}
