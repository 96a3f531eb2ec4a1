//! Single-layer LSTM with an explicit forward trace and reverse-mode gradients.
//!
//! Gate rows are laid out as `[input | forget | cell | output]`, each block
//! `hidden` rows tall.

use rand::Rng;

use crate::linalg::{sigmoid, Matrix, Parameters};

#[derive(Clone, Debug, PartialEq)]
pub struct Lstm {
    pub w_ih: Matrix,
    pub w_hh: Matrix,
    pub bias: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

#[derive(Clone, Debug)]
struct Step {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Everything the backward pass needs from one forward run.
#[derive(Clone, Debug, Default)]
pub struct LstmTrace {
    steps: Vec<Step>,
}

impl LstmTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl Lstm {
    /// Fan-in uniform weights, zero biases, forget-gate bias +1.
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut bias = Matrix::zeros(4 * hidden, 1);
        for r in hidden..2 * hidden {
            bias.set(r, 0, 1.0);
        }
        Lstm {
            w_ih: Matrix::uniform_fan_in(4 * hidden, input, input, rng),
            w_hh: Matrix::uniform_fan_in(4 * hidden, hidden, hidden, rng),
            bias,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.cols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.cols()
    }

    fn gates(&self, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        let hd = self.hidden();
        let mut z = self.bias.as_slice().to_vec();
        self.w_ih.matvec_acc(x, &mut z);
        self.w_hh.matvec_acc(h_prev, &mut z);
        for (k, v) in z.iter_mut().enumerate() {
            *v = if (2 * hd..3 * hd).contains(&k) {
                v.tanh()
            } else {
                sigmoid(*v)
            };
        }
        z
    }

    /// Advances `state` by one input without recording a trace.
    pub fn step(&self, x: &[f64], state: &mut LstmState) {
        let hd = self.hidden();
        let g = self.gates(x, &state.h);
        for k in 0..hd {
            let c = g[hd + k] * state.c[k] + g[k] * g[2 * hd + k];
            state.c[k] = c;
            state.h[k] = g[3 * hd + k] * c.tanh();
        }
    }

    /// Runs the sequence from `init`, returning per-step hidden outputs, the
    /// final state and the trace for [`Lstm::backward`].
    pub fn forward(&self, xs: &[Vec<f64>], init: &LstmState) -> (Vec<Vec<f64>>, LstmState, LstmTrace) {
        let hd = self.hidden();
        let mut h = init.h.clone();
        let mut c = init.c.clone();
        let mut outputs = Vec::with_capacity(xs.len());
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            let gates = self.gates(x, &h);
            let mut c_new = vec![0.0; hd];
            let mut h_new = vec![0.0; hd];
            let mut tanh_c = vec![0.0; hd];
            for k in 0..hd {
                c_new[k] = gates[hd + k] * c[k] + gates[k] * gates[2 * hd + k];
                tanh_c[k] = c_new[k].tanh();
                h_new[k] = gates[3 * hd + k] * tanh_c[k];
            }
            steps.push(Step {
                x: x.clone(),
                h_prev: std::mem::replace(&mut h, h_new),
                c_prev: std::mem::replace(&mut c, c_new),
                gates,
                tanh_c,
            });
            outputs.push(h.clone());
        }
        (outputs, LstmState { h, c }, LstmTrace { steps })
    }

    /// Back-propagates `d_outputs` (one gradient per step output) and an
    /// optional gradient on the final state. Parameter gradients are added
    /// into `grads`; returns input gradients and the gradient on the initial
    /// state.
    pub fn backward(
        &self,
        trace: &LstmTrace,
        d_outputs: &[Vec<f64>],
        d_final: Option<&LstmState>,
        grads: &mut Lstm,
    ) -> (Vec<Vec<f64>>, LstmState) {
        let hd = self.hidden();
        assert_eq!(d_outputs.len(), trace.steps.len());
        let mut dh_next = d_final.map_or_else(|| vec![0.0; hd], |s| s.h.clone());
        let mut dc_next = d_final.map_or_else(|| vec![0.0; hd], |s| s.c.clone());
        let mut dxs = vec![Vec::new(); trace.steps.len()];
        let mut dz = vec![0.0; 4 * hd];
        for (t, step) in trace.steps.iter().enumerate().rev() {
            let g = &step.gates;
            for k in 0..hd {
                let dh = d_outputs[t][k] + dh_next[k];
                let (i, f, gg, o) = (g[k], g[hd + k], g[2 * hd + k], g[3 * hd + k]);
                let tc = step.tanh_c[k];
                let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                dz[k] = dc * gg * i * (1.0 - i);
                dz[hd + k] = dc * step.c_prev[k] * f * (1.0 - f);
                dz[2 * hd + k] = dc * i * (1.0 - gg * gg);
                dz[3 * hd + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            grads.w_ih.add_outer(1.0, &dz, &step.x);
            grads.w_hh.add_outer(1.0, &dz, &step.h_prev);
            crate::linalg::axpy(1.0, &dz, grads.bias.as_mut_slice());
            let mut dx = vec![0.0; self.input()];
            self.w_ih.matvec_t_acc(&dz, &mut dx);
            dxs[t] = dx;
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            self.w_hh.matvec_t_acc(&dz, &mut dh_next);
        }
        (
            dxs,
            LstmState {
                h: dh_next,
                c: dc_next,
            },
        )
    }
}

impl Parameters for Lstm {
    fn tensors(&self) -> Vec<(String, &Matrix)> {
        vec![
            ("w_ih".into(), &self.w_ih),
            ("w_hh".into(), &self.w_hh),
            ("bias".into(), &self.bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        vec![
            ("w_ih".into(), &mut self.w_ih),
            ("w_hh".into(), &mut self.w_hh),
            ("bias".into(), &mut self.bias),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(lstm: &Lstm, xs: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
        let (hs, last, _) = lstm.forward(xs, &LstmState::zeros(lstm.hidden()));
        let mut l: f64 = hs
            .iter()
            .zip(w)
            .map(|(h, wt)| h.iter().zip(wt).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        l += last.c.iter().sum::<f64>() * 0.3;
        l
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lstm = Lstm::new(3, 4, &mut rng);
        let xs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let w: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();

        let (_, _, trace) = lstm.forward(&xs, &LstmState::zeros(4));
        let mut grads = lstm.zeroed();
        let d_final = LstmState {
            h: vec![0.0; 4],
            c: vec![0.3; 4],
        };
        let (dxs, _) = lstm.backward(&trace, &w, Some(&d_final), &mut grads);

        let eps = 1e-5;
        let mut probe = lstm.clone();
        let names: Vec<String> = lstm.tensors().into_iter().map(|(n, _)| n).collect();
        for (ti, name) in names.iter().enumerate() {
            let n = lstm.tensors()[ti].1.as_slice().len();
            for k in 0..n {
                let orig = probe.tensors_mut()[ti].1.as_slice()[k];
                probe.tensors_mut()[ti].1.as_mut_slice()[k] = orig + eps;
                let lp = loss(&probe, &xs, &w);
                probe.tensors_mut()[ti].1.as_mut_slice()[k] = orig - eps;
                let lm = loss(&probe, &xs, &w);
                probe.tensors_mut()[ti].1.as_mut_slice()[k] = orig;
                let numeric = (lp - lm) / (2.0 * eps);
                let analytic = grads.tensors()[ti].1.as_slice()[k];
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                assert!(rel < 1e-4, "{name}[{k}]: {analytic} vs {numeric}");
            }
        }

        // input gradients too
        let mut xs_p = xs.clone();
        for t in 0..xs.len() {
            for j in 0..3 {
                let orig = xs_p[t][j];
                xs_p[t][j] = orig + eps;
                let lp = loss(&lstm, &xs_p, &w);
                xs_p[t][j] = orig - eps;
                let lm = loss(&lstm, &xs_p, &w);
                xs_p[t][j] = orig;
                let numeric = (lp - lm) / (2.0 * eps);
                assert!((numeric - dxs[t][j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn step_matches_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lstm = Lstm::new(2, 3, &mut rng);
        let xs = vec![vec![0.5, -0.1], vec![0.2, 0.9]];
        let (hs, last, _) = lstm.forward(&xs, &LstmState::zeros(3));
        let mut state = LstmState::zeros(3);
        for x in &xs {
            lstm.step(x, &mut state);
        }
        assert_eq!(state, last);
        assert_eq!(hs[1], state.h);
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lstm = Lstm::new(2, 3, &mut rng);
        let b = lstm.bias.as_slice();
        assert_eq!(&b[0..3], &[0.0; 3]);
        assert_eq!(&b[3..6], &[1.0; 3]);
        assert_eq!(&b[6..12], &[0.0; 6]);
    }
}
