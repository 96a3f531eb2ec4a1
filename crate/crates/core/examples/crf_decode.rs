//! The CRF layer by hand: partition function, Viterbi and the loss gradient.
//!
//! ```text
//! cargo run --example crf_decode
//! ```

use stackner::linalg::Matrix;
use stackner::tagger::crf::{apply_constraints, stop_index, start_index};
use stackner::tagger::{crf_nll_grad, log_partition, path_score, viterbi};

fn main() -> stackner::Result<()> {
    // tags: 0 = O, 1 = B-NORM, 2 = I-NORM
    let emissions = Matrix::from_rows(&[
        vec![2.0, 0.1, 0.0],
        vec![0.2, 1.5, 0.3],
        vec![0.1, 0.2, 1.2],
        vec![0.4, 0.1, 0.9],
        vec![1.8, 0.0, 0.2],
    ]);
    let mut trans = Matrix::zeros(5, 5);
    trans.set(0, 2, -3.0); // O → I is discouraged
    trans.set(start_index(3), 2, -3.0);
    trans.set(1, 2, 1.0);
    trans.set(2, stop_index(3), -0.5);
    apply_constraints(&mut trans);

    let (path, score) = viterbi(&emissions, &trans);
    let log_z = log_partition(&emissions, &trans);
    println!("best path {path:?} score {score:.4}");
    println!("log Z {log_z:.4}, P(best) = {:.4}", (score - log_z).exp());

    let gold = [0, 1, 2, 2, 0];
    println!("gold score {:.4}", path_score(&emissions, &trans, &gold)?);
    let g = crf_nll_grad(&emissions, &trans, &gold)?;
    println!("loss {:.4}", g.loss);
    for t in 0..g.d_emissions.rows() {
        println!("  dE[{t}] = {:+.3?}", g.d_emissions.row(t));
    }
    Ok(())
}
