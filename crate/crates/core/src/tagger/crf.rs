//! Linear-chain CRF over `L` tags plus the virtual START (`L`) and STOP
//! (`L + 1`) states. `transitions[(from, to)]` scores moving from `from` to
//! `to`; moves into START and out of STOP are pinned at [`IMPOSSIBLE`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{log_sum_exp, Matrix};

pub const IMPOSSIBLE: f64 = -1e4;

pub fn start_index(num_tags: usize) -> usize {
    num_tags
}

pub fn stop_index(num_tags: usize) -> usize {
    num_tags + 1
}

/// Fan-in uniform transitions with the START/STOP constraints applied.
pub fn init_transitions<R: Rng>(num_tags: usize, rng: &mut R) -> Matrix {
    let n = num_tags + 2;
    let mut t = Matrix::uniform_fan_in(n, n, n, rng);
    apply_constraints(&mut t);
    t
}

pub fn apply_constraints(trans: &mut Matrix) {
    let l = trans.rows() - 2;
    for k in 0..l + 2 {
        trans.set(k, start_index(l), IMPOSSIBLE);
        trans.set(stop_index(l), k, IMPOSSIBLE);
    }
}

/// Zeroes gradient entries of the pinned transitions.
pub fn mask_gradient(grad: &mut Matrix) {
    let l = grad.rows() - 2;
    for k in 0..l + 2 {
        grad.set(k, start_index(l), 0.0);
        grad.set(stop_index(l), k, 0.0);
    }
}

fn check_tags(tags: &[usize], num_tags: usize) -> Result<()> {
    match tags.iter().find(|&&t| t >= num_tags) {
        Some(&index) => Err(Error::InvalidTagIndex { index, num_tags }),
        None => Ok(()),
    }
}

/// score(y) = trans(START, y₁) + Σ emit(t, yₜ) + Σ trans(yₜ₋₁, yₜ) + trans(y_T, STOP)
pub fn path_score(emissions: &Matrix, trans: &Matrix, tags: &[usize]) -> Result<f64> {
    let l = emissions.cols();
    check_tags(tags, l)?;
    if tags.is_empty() {
        return Ok(0.0);
    }
    let mut s = trans.get(start_index(l), tags[0]);
    for (t, &y) in tags.iter().enumerate() {
        s += emissions.get(t, y);
        if t > 0 {
            s += trans.get(tags[t - 1], y);
        }
    }
    Ok(s + trans.get(*tags.last().unwrap(), stop_index(l)))
}

// alpha[t][j]: log-sum of all prefixes ending in tag j at step t
fn forward_table(emissions: &Matrix, trans: &Matrix) -> Vec<Vec<f64>> {
    let (n, l) = emissions.shape();
    let mut alpha = Vec::with_capacity(n);
    alpha.push((0..l).map(|j| trans.get(start_index(l), j) + emissions.get(0, j)).collect::<Vec<_>>());
    let mut buf = vec![0.0; l];
    for t in 1..n {
        let prev = &alpha[t - 1];
        let row: Vec<f64> = (0..l)
            .map(|j| {
                for i in 0..l {
                    buf[i] = prev[i] + trans.get(i, j);
                }
                log_sum_exp(&buf) + emissions.get(t, j)
            })
            .collect();
        alpha.push(row);
    }
    alpha
}

// beta[t][i]: log-sum of all suffixes after step t given tag i at t
fn backward_table(emissions: &Matrix, trans: &Matrix) -> Vec<Vec<f64>> {
    let (n, l) = emissions.shape();
    let mut beta = vec![Vec::new(); n];
    beta[n - 1] = (0..l).map(|i| trans.get(i, stop_index(l))).collect();
    let mut buf = vec![0.0; l];
    for t in (0..n - 1).rev() {
        let next = beta[t + 1].clone();
        beta[t] = (0..l)
            .map(|i| {
                for j in 0..l {
                    buf[j] = trans.get(i, j) + emissions.get(t + 1, j) + next[j];
                }
                log_sum_exp(&buf)
            })
            .collect();
    }
    beta
}

/// log Z by the forward algorithm (0 for an empty sequence).
pub fn log_partition(emissions: &Matrix, trans: &Matrix) -> f64 {
    let (n, l) = emissions.shape();
    if n == 0 {
        return 0.0;
    }
    let alpha = forward_table(emissions, trans);
    let last: Vec<f64> = (0..l).map(|j| alpha[n - 1][j] + trans.get(j, stop_index(l))).collect();
    log_sum_exp(&last)
}

/// Negative log-likelihood `log Z − score(gold)`.
pub fn crf_nll(emissions: &Matrix, trans: &Matrix, gold: &[usize]) -> Result<f64> {
    let gold_score = path_score(emissions, trans, gold)?;
    Ok((log_partition(emissions, trans) - gold_score).max(0.0))
}

pub struct CrfGrad {
    pub loss: f64,
    pub d_emissions: Matrix,
    /// Already masked at the pinned entries.
    pub d_transitions: Matrix,
}

/// Loss plus gradients: marginal expectations minus gold indicator counts.
pub fn crf_nll_grad(emissions: &Matrix, trans: &Matrix, gold: &[usize]) -> Result<CrfGrad> {
    let (n, l) = emissions.shape();
    if gold.len() != n {
        return Err(Error::InvalidConfig(format!("{} gold tags for {n} emission rows", gold.len())));
    }
    let gold_score = path_score(emissions, trans, gold)?;
    let mut d_emissions = Matrix::zeros(n, l);
    let mut d_transitions = Matrix::zeros(l + 2, l + 2);
    if n == 0 {
        return Ok(CrfGrad {
            loss: 0.0,
            d_emissions,
            d_transitions,
        });
    }
    let alpha = forward_table(emissions, trans);
    let beta = backward_table(emissions, trans);
    let log_z = log_sum_exp(&(0..l).map(|j| alpha[n - 1][j] + beta[n - 1][j]).collect::<Vec<_>>());
    let (start, stop) = (start_index(l), stop_index(l));

    for t in 0..n {
        for j in 0..l {
            let p = (alpha[t][j] + beta[t][j] - log_z).exp();
            d_emissions.add_at(t, j, p);
            if t == 0 {
                d_transitions.add_at(start, j, p);
            }
            if t == n - 1 {
                d_transitions.add_at(j, stop, p);
            }
        }
        if t > 0 {
            for i in 0..l {
                for j in 0..l {
                    let p = (alpha[t - 1][i] + trans.get(i, j) + emissions.get(t, j) + beta[t][j] - log_z).exp();
                    d_transitions.add_at(i, j, p);
                }
            }
        }
    }
    for (t, &y) in gold.iter().enumerate() {
        d_emissions.add_at(t, y, -1.0);
        if t > 0 {
            d_transitions.add_at(gold[t - 1], y, -1.0);
        }
    }
    d_transitions.add_at(start, gold[0], -1.0);
    d_transitions.add_at(gold[n - 1], stop, -1.0);
    mask_gradient(&mut d_transitions);

    Ok(CrfGrad {
        loss: (log_z - gold_score).max(0.0),
        d_emissions,
        d_transitions,
    })
}

/// Highest-scoring path and its score. At every decision the lowest tag
/// index wins ties.
pub fn viterbi(emissions: &Matrix, trans: &Matrix) -> (Vec<usize>, f64) {
    let (n, l) = emissions.shape();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta: Vec<f64> = (0..l).map(|j| trans.get(start_index(l), j) + emissions.get(0, j)).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(n);
    for t in 1..n {
        let mut next = vec![0.0; l];
        let mut ptr = vec![0; l];
        for j in 0..l {
            let (mut best_i, mut best) = (0, delta[0] + trans.get(0, j));
            for i in 1..l {
                let s = delta[i] + trans.get(i, j);
                if s > best {
                    best = s;
                    best_i = i;
                }
            }
            next[j] = best + emissions.get(t, j);
            ptr[j] = best_i;
        }
        delta = next;
        back.push(ptr);
    }
    let (mut best_j, mut best) = (0, delta[0] + trans.get(0, stop_index(l)));
    for j in 1..l {
        let s = delta[j] + trans.get(j, stop_index(l));
        if s > best {
            best = s;
            best_j = j;
        }
    }
    let mut path = vec![best_j; n];
    for t in (1..n).rev() {
        path[t - 1] = back[t - 1][path[t]];
    }
    (path, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_trans(l: usize) -> Matrix {
        let mut t = Matrix::zeros(l + 2, l + 2);
        apply_constraints(&mut t);
        t
    }

    #[test]
    fn single_step_closed_form() {
        let (a, b) = (0.7, -1.3);
        let e = Matrix::from_rows(&[vec![a, b]]);
        let loss = crf_nll(&e, &zero_trans(2), &[0]).unwrap();
        let expect = (a.exp() + b.exp()).ln() - a;
        assert!((loss - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_transitions_decouple_viterbi() {
        let e = Matrix::from_rows(&[vec![0.1, 0.9, 0.3], vec![2.0, -1.0, 0.0], vec![0.0, 0.0, 5.0]]);
        assert_eq!(viterbi(&e, &zero_trans(3)).0, vec![1, 0, 2]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let e = Matrix::zeros(4, 3);
        let (path, score) = viterbi(&e, &zero_trans(3));
        assert_eq!(path, vec![0, 0, 0, 0]);
        assert_eq!(score, 0.0);
    }

    #[test]
    fn invalid_tag_index() {
        let e = Matrix::zeros(2, 2);
        assert!(matches!(
            crf_nll(&e, &zero_trans(2), &[0, 2]),
            Err(Error::InvalidTagIndex { index: 2, num_tags: 2 })
        ));
    }

    #[test]
    fn loss_at_viterbi_path_is_gap_to_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = Matrix::uniform_fan_in(4, 3, 1, &mut rng);
        let t = init_transitions(3, &mut rng);
        let (path, best) = viterbi(&e, &t);
        let loss = crf_nll(&e, &t, &path).unwrap();
        assert!((loss - (log_partition(&e, &t) - best)).abs() < 1e-12);
        assert!(best <= log_partition(&e, &t));
    }

    #[test]
    fn extreme_emissions_drive_loss_to_zero() {
        let mut e = Matrix::zeros(3, 3);
        for (t, y) in [2, 0, 1].into_iter().enumerate() {
            e.set(t, y, 60.0);
        }
        let loss = crf_nll(&e, &zero_trans(3), &[2, 0, 1]).unwrap();
        assert!(loss < 1e-20);
        assert!(crf_nll(&e, &zero_trans(3), &[0, 0, 1]).unwrap() > 50.0);
    }

    #[test]
    fn gradient_is_masked_and_matches_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let e = Matrix::uniform_fan_in(3, 3, 1, &mut rng);
        let t = init_transitions(3, &mut rng);
        let g = crf_nll_grad(&e, &t, &[1, 2, 0]).unwrap();
        assert!((g.loss - crf_nll(&e, &t, &[1, 2, 0]).unwrap()).abs() < 1e-12);
        for k in 0..5 {
            assert_eq!(g.d_transitions.get(k, start_index(3)), 0.0);
            assert_eq!(g.d_transitions.get(stop_index(3), k), 0.0);
        }
        // each emission row's gradient sums to zero (marginals sum to one)
        for r in 0..3 {
            assert!(g.d_emissions.row(r).iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
