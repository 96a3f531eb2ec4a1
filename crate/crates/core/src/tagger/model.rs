//! Reprojection, BiLSTM encoder and emission layer of the tagger.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::crf::{self, crf_nll_grad};
use crate::error::{Error, Result};
use crate::linalg::{axpy, Matrix, Parameters};
use crate::lstm::{Lstm, LstmState, LstmTrace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
    /// Linear map of the stacked embeddings before the BiLSTM.
    pub reproject: bool,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            hidden: 256,
            layers: 1,
            dropout: 0.0,
            reproject: true,
        }
    }
}

impl TaggerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.layers == 0 {
            return Err(Error::InvalidConfig("hidden size and layer count must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiLayer {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggerParams {
    /// `D×D` and `D×1`; both `0×0` without reprojection.
    pub proj_w: Matrix,
    pub proj_b: Matrix,
    pub layers: Vec<BiLayer>,
    /// `L×2h`.
    pub emit_w: Matrix,
    pub emit_b: Matrix,
    /// `(L+2)×(L+2)`, indexed `[from][to]`.
    pub transitions: Matrix,
    pub dropout: f64,
}

impl Parameters for TaggerParams {
    fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut v = vec![("proj_w".to_string(), &self.proj_w), ("proj_b".into(), &self.proj_b)];
        for (k, layer) in self.layers.iter().enumerate() {
            for (dir, lstm) in [("fwd", &layer.fwd), ("bwd", &layer.bwd)] {
                v.extend(lstm.tensors().into_iter().map(|(n, t)| (format!("lstm{k}.{dir}.{n}"), t)));
            }
        }
        v.push(("emit_w".into(), &self.emit_w));
        v.push(("emit_b".into(), &self.emit_b));
        v.push(("transitions".into(), &self.transitions));
        v
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut v = vec![("proj_w".to_string(), &mut self.proj_w), ("proj_b".into(), &mut self.proj_b)];
        for (k, layer) in self.layers.iter_mut().enumerate() {
            let BiLayer { fwd, bwd } = layer;
            for (dir, lstm) in [("fwd", fwd), ("bwd", bwd)] {
                v.extend(lstm.tensors_mut().into_iter().map(|(n, t)| (format!("lstm{k}.{dir}.{n}"), t)));
            }
        }
        v.push(("emit_w".into(), &mut self.emit_w));
        v.push(("emit_b".into(), &mut self.emit_b));
        v.push(("transitions".into(), &mut self.transitions));
        v
    }
}

struct LayerTrace {
    fwd: LstmTrace,
    bwd: LstmTrace,
}

/// What [`TaggerParams::backward`] needs from a training-mode forward pass.
pub struct EncoderTrace {
    inputs: Vec<Vec<f64>>,
    masks: Option<Vec<Vec<f64>>>,
    layers: Vec<LayerTrace>,
    top: Vec<Vec<f64>>,
}

impl TaggerParams {
    pub fn new(input_dim: usize, num_tags: usize, config: &TaggerConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (proj_w, proj_b) = if config.reproject {
            (
                Matrix::uniform_fan_in(input_dim, input_dim, input_dim, &mut rng),
                Matrix::zeros(input_dim, 1),
            )
        } else {
            (Matrix::zeros(0, 0), Matrix::zeros(0, 0))
        };
        let h = config.hidden;
        let layers = (0..config.layers)
            .map(|k| {
                let d = if k == 0 { input_dim } else { 2 * h };
                BiLayer {
                    fwd: Lstm::new(d, h, &mut rng),
                    bwd: Lstm::new(d, h, &mut rng),
                }
            })
            .collect();
        TaggerParams {
            proj_w,
            proj_b,
            layers,
            emit_w: Matrix::uniform_fan_in(num_tags, 2 * h, 2 * h, &mut rng),
            emit_b: Matrix::zeros(num_tags, 1),
            transitions: crf::init_transitions(num_tags, &mut rng),
            dropout: config.dropout,
        }
    }

    pub fn num_tags(&self) -> usize {
        self.emit_w.rows()
    }

    pub fn hidden(&self) -> usize {
        self.emit_w.cols() / 2
    }

    pub fn reproject(&self) -> bool {
        self.proj_w.rows() > 0
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fwd.input()
    }

    /// Emissions in inference mode (no dropout).
    pub fn encode(&self, x: &Matrix) -> Matrix {
        self.forward(x, None).0
    }

    /// Forward pass; dropout is applied only when `rng` is given.
    pub fn forward(&self, x: &Matrix, rng: Option<&mut ChaCha8Rng>) -> (Matrix, EncoderTrace) {
        let n = x.rows();
        let inputs: Vec<Vec<f64>> = (0..n).map(|t| x.row(t).to_vec()).collect();
        let mut cur: Vec<Vec<f64>> = if self.reproject() {
            inputs
                .iter()
                .map(|v| {
                    let mut out = self.proj_b.as_slice().to_vec();
                    self.proj_w.matvec_acc(v, &mut out);
                    out
                })
                .collect()
        } else {
            inputs.clone()
        };
        let masks = match rng {
            Some(rng) if self.dropout > 0.0 => {
                let keep = 1.0 - self.dropout;
                let masks: Vec<Vec<f64>> = cur
                    .iter()
                    .map(|v| v.iter().map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect())
                    .collect();
                for (v, m) in cur.iter_mut().zip(&masks) {
                    v.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
                }
                Some(masks)
            }
            _ => None,
        };
        let mut traces = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let h = layer.fwd.hidden();
            let (f_out, _, f_trace) = layer.fwd.forward(&cur, &LstmState::zeros(h));
            let rev: Vec<Vec<f64>> = cur.iter().rev().cloned().collect();
            let (b_out, _, b_trace) = layer.bwd.forward(&rev, &LstmState::zeros(h));
            cur = (0..n)
                .map(|t| {
                    let mut v = f_out[t].clone();
                    v.extend_from_slice(&b_out[n - 1 - t]);
                    v
                })
                .collect();
            traces.push(LayerTrace {
                fwd: f_trace,
                bwd: b_trace,
            });
        }
        let l = self.num_tags();
        let mut emissions = Matrix::zeros(n, l);
        for (t, z) in cur.iter().enumerate() {
            let row = emissions.row_mut(t);
            row.copy_from_slice(self.emit_b.as_slice());
            self.emit_w.matvec_acc(z, row);
        }
        (
            emissions,
            EncoderTrace {
                inputs,
                masks,
                layers: traces,
                top: cur,
            },
        )
    }

    /// Adds parameter gradients for `d_emissions` into `grads`; returns the
    /// gradient with respect to the stacked input rows.
    pub fn backward(&self, trace: &EncoderTrace, d_emissions: &Matrix, grads: &mut TaggerParams) -> Vec<Vec<f64>> {
        let n = d_emissions.rows();
        let mut d_cur: Vec<Vec<f64>> = Vec::with_capacity(n);
        for t in 0..n {
            let de = d_emissions.row(t);
            grads.emit_w.add_outer(1.0, de, &trace.top[t]);
            axpy(1.0, de, grads.emit_b.as_mut_slice());
            let mut dz = vec![0.0; self.emit_w.cols()];
            self.emit_w.matvec_t_acc(de, &mut dz);
            d_cur.push(dz);
        }
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let h = layer.fwd.hidden();
            let d_f: Vec<Vec<f64>> = d_cur.iter().map(|v| v[..h].to_vec()).collect();
            let d_b: Vec<Vec<f64>> = d_cur.iter().rev().map(|v| v[h..].to_vec()).collect();
            let lt = &trace.layers[k];
            let g = &mut grads.layers[k];
            let (dx_f, _) = layer.fwd.backward(&lt.fwd, &d_f, None, &mut g.fwd);
            let (dx_b, _) = layer.bwd.backward(&lt.bwd, &d_b, None, &mut g.bwd);
            d_cur = (0..n)
                .map(|t| {
                    let mut v = dx_f[t].clone();
                    axpy(1.0, &dx_b[n - 1 - t], &mut v);
                    v
                })
                .collect();
        }
        if let Some(masks) = &trace.masks {
            for (v, m) in d_cur.iter_mut().zip(masks) {
                v.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
            }
        }
        if !self.reproject() {
            return d_cur;
        }
        let d = self.input_dim();
        d_cur
            .iter()
            .zip(&trace.inputs)
            .map(|(dp, x)| {
                grads.proj_w.add_outer(1.0, dp, x);
                axpy(1.0, dp, grads.proj_b.as_mut_slice());
                let mut dx = vec![0.0; d];
                self.proj_w.matvec_t_acc(dp, &mut dx);
                dx
            })
            .collect()
    }

    /// CRF negative log-likelihood of `gold` for one sentence, with all
    /// parameter gradients added into `grads`.
    pub fn loss_and_grad(
        &self,
        x: &Matrix,
        gold: &[usize],
        grads: &mut TaggerParams,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<f64> {
        if x.rows() == 0 {
            return Ok(0.0);
        }
        let (emissions, trace) = self.forward(x, rng);
        let g = crf_nll_grad(&emissions, &self.transitions, gold)?;
        grads.transitions.add_scaled(1.0, &g.d_transitions);
        self.backward(&trace, &g.d_emissions, grads);
        Ok(g.loss)
    }

    pub fn loss(&self, x: &Matrix, gold: &[usize]) -> Result<f64> {
        crf::crf_nll(&self.encode(x), &self.transitions, gold)
    }

    pub fn decode(&self, x: &Matrix) -> Vec<usize> {
        if x.rows() == 0 {
            return Vec::new();
        }
        crf::viterbi(&self.encode(x), &self.transitions).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(reproject: bool) -> TaggerParams {
        let cfg = TaggerConfig { hidden: 3, layers: 1, dropout: 0.0, reproject };
        TaggerParams::new(4, 3, &cfg, 5)
    }

    #[test]
    fn shapes() {
        let p = toy(true);
        let x = Matrix::filled(1, 4, 0.3);
        let e = p.encode(&x);
        assert_eq!(e.shape(), (1, 3));
        assert!(e.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(p.transitions.shape(), (5, 5));
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        assert!(names.contains(&"lstm0.bwd.w_hh".to_string()));
    }

    #[test]
    fn zero_weights_give_bias_rows() {
        let mut p = toy(true);
        for (name, t) in p.tensors_mut() {
            if name != "emit_b" {
                t.fill(0.0);
            }
        }
        p.emit_b = Matrix::from_vec(3, 1, vec![0.5, -1.0, 2.0]);
        let e = p.encode(&Matrix::zeros(3, 4));
        for t in 0..3 {
            assert_eq!(e.row(t), &[0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn both_directions_see_every_token() {
        let p = toy(false);
        let mut x = Matrix::zeros(3, 4);
        x.set(2, 0, 1.0);
        let base = p.encode(&Matrix::zeros(3, 4));
        let moved = p.encode(&x);
        // the first token's emissions depend on the last token via the backward LSTM
        assert_ne!(base.row(0), moved.row(0));
    }

    #[test]
    fn dropout_off_at_inference_and_deterministic_with_seed() {
        let cfg = TaggerConfig { hidden: 3, layers: 2, dropout: 0.5, reproject: true };
        let p = TaggerParams::new(4, 3, &cfg, 1);
        let x = Matrix::filled(2, 4, 0.2);
        assert_eq!(p.encode(&x), p.encode(&x));
        let a = p.forward(&x, Some(&mut ChaCha8Rng::seed_from_u64(4))).0;
        let b = p.forward(&x, Some(&mut ChaCha8Rng::seed_from_u64(4))).0;
        assert_eq!(a, b);
    }

    #[test]
    fn unused_parameters_get_zero_gradient() {
        let p = toy(true);
        let mut grads = p.zeroed();
        let x = Matrix::filled(2, 4, 0.1);
        p.loss_and_grad(&x, &[0, 1], &mut grads, None).unwrap();
        for k in 0..5 {
            assert_eq!(grads.transitions.get(k, crf::start_index(3)), 0.0);
        }
        let mut grads = p.zeroed();
        p.loss_and_grad(&Matrix::zeros(0, 4), &[], &mut grads, None).unwrap();
        assert_eq!(grads.global_norm(), 0.0);
    }
}
