//! Classical recurrent baselines (Elman RNN, GRU, LSTM) with hand-rolled
//! backpropagation through time, sharing the flat-parameter convention and
//! the [`SequenceModel`] interface of the quantum models.
//!
//! Per layer each gate owns an input matrix, a recurrent matrix, and one
//! combined bias. GRU follows the reset-before-candidate convention
//! (n = tanh(W x + r .* (U h) + b)), LSTM the usual i/f/g/o gating.

use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Peptide;
use crate::error::{Error, Result};
use crate::model::{sigmoid, SequenceModel};
use crate::rng::seeded_stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Rnn,
    Gru,
    Lstm,
}

impl CellKind {
    /// Gate count: matrices and biases come in this many stacked groups.
    fn gates(self) -> usize {
        match self {
            CellKind::Rnn => 1,
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecurrentSpec {
    pub cell: CellKind,
    pub layers: usize,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl RecurrentSpec {
    fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.layers) {
            return Err(Error::Config(format!("recurrent layers {} must be 1 or 2", self.layers)));
        }
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("input_dim and hidden_dim must be positive".into()));
        }
        Ok(())
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.hidden_dim
        }
    }

    /// Closed-form trainable count: 20*input_dim embeddings, per layer
    /// gates*(hidden*in + hidden^2 + hidden), and the hidden->1 head.
    pub fn param_count(&self) -> usize {
        let g = self.cell.gates();
        let h = self.hidden_dim;
        let per_layer: usize = (0..self.layers).map(|l| g * (h * self.layer_input(l) + h * h + h)).sum();
        20 * self.input_dim + per_layer + h + 1
    }
}

#[derive(Clone, Debug)]
struct LayerRanges {
    w_ih: Range<usize>,
    w_hh: Range<usize>,
    bias: Range<usize>,
}

pub struct RecurrentModel {
    spec: RecurrentSpec,
    embeddings: Range<usize>,
    layer_ranges: Vec<LayerRanges>,
    head: Range<usize>,
    params: Vec<f64>,
}

/// Everything one step needs again on the way back.
struct StepCache {
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gate values, stacked by gate group.
    gates: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
    /// GRU: U_n h_prev before the reset mask.
    un_h: Vec<f64>,
}

impl RecurrentModel {
    /// Weights and biases uniform in +-1/sqrt(hidden_dim); embeddings N(0, 1).
    pub fn init(spec: RecurrentSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let g = spec.cell.gates();
        let h = spec.hidden_dim;
        let mut at = 0;
        let mut take = |len: usize| {
            let r = at..at + len;
            at += len;
            r
        };
        let embeddings = take(20 * spec.input_dim);
        let layer_ranges: Vec<LayerRanges> = (0..spec.layers)
            .map(|l| LayerRanges {
                w_ih: take(g * h * spec.layer_input(l)),
                w_hh: take(g * h * h),
                bias: take(g * h),
            })
            .collect();
        let head = take(h + 1);
        let total = at;
        debug_assert_eq!(total, spec.param_count());

        let mut params = vec![0.0; total];
        let mut rng = seeded_stream(seed, 4);
        for i in embeddings.clone() {
            params[i] = StandardNormal.sample(&mut rng);
        }
        let bound = 1.0 / (h as f64).sqrt();
        for i in embeddings.end..total {
            params[i] = rng.gen_range(-bound..bound);
        }
        Ok(RecurrentModel { spec, embeddings, layer_ranges, head, params })
    }

    pub fn spec(&self) -> &RecurrentSpec {
        &self.spec
    }

    fn embedding_row(&self, token: u8) -> Vec<f64> {
        let dim = self.spec.input_dim;
        let start = self.embeddings.start + token as usize * dim;
        self.params[start..start + dim].to_vec()
    }

    /// out[r] += sum_c w[r, c] x[c] for the row block of gate `gate`.
    fn gate_matvec(&self, w: &Range<usize>, gate: usize, cols: usize, x: &[f64], out: &mut [f64]) {
        let h = self.spec.hidden_dim;
        let base = w.start + gate * h * cols;
        for (r, out_r) in out.iter_mut().enumerate() {
            let row = base + r * cols;
            let mut acc = 0.0;
            for c in 0..cols {
                acc += self.params[row + c] * x[c];
            }
            *out_r += acc;
        }
    }

    /// dx[c] += sum_r w[r, c] dy[r]; gw[r, c] += dy[r] x[c].
    fn gate_backprop(
        &self,
        w: &Range<usize>,
        gate: usize,
        cols: usize,
        x: &[f64],
        dy: &[f64],
        grads: Option<&mut [f64]>,
        dx: Option<&mut [f64]>,
    ) {
        let h = self.spec.hidden_dim;
        let base = w.start + gate * h * cols;
        if let Some(grads) = grads {
            for (r, &dy_r) in dy.iter().enumerate() {
                let row = base + r * cols;
                for c in 0..cols {
                    grads[row + c] += dy_r * x[c];
                }
            }
        }
        if let Some(dx) = dx {
            for (r, &dy_r) in dy.iter().enumerate() {
                let row = base + r * cols;
                for (c, dx_c) in dx.iter_mut().enumerate() {
                    *dx_c += self.params[row + c] * dy_r;
                }
            }
        }
    }

    fn bias_slice(&self, layer: usize, gate: usize) -> &[f64] {
        let h = self.spec.hidden_dim;
        let start = self.layer_ranges[layer].bias.start + gate * h;
        &self.params[start..start + h]
    }

    fn step(&self, layer: usize, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
        let h_dim = self.spec.hidden_dim;
        let cols = self.spec.layer_input(layer);
        let ranges = &self.layer_ranges[layer];
        let g = self.spec.cell.gates();

        // Pre-activations per gate: W x + (bias), recurrent terms added per cell.
        let mut pre: Vec<Vec<f64>> = (0..g).map(|gi| self.bias_slice(layer, gi).to_vec()).collect();
        for (gi, p) in pre.iter_mut().enumerate() {
            self.gate_matvec(&ranges.w_ih, gi, cols, x, p);
        }

        match self.spec.cell {
            CellKind::Rnn => {
                self.gate_matvec(&ranges.w_hh, 0, h_dim, h_prev, &mut pre[0]);
                let h: Vec<f64> = pre[0].iter().map(|&a| a.tanh()).collect();
                StepCache {
                    h_prev: h_prev.to_vec(),
                    c_prev: vec![],
                    gates: h.clone(),
                    h,
                    c: vec![],
                    un_h: vec![],
                }
            }
            CellKind::Gru => {
                self.gate_matvec(&ranges.w_hh, 0, h_dim, h_prev, &mut pre[0]);
                self.gate_matvec(&ranges.w_hh, 1, h_dim, h_prev, &mut pre[1]);
                let mut un_h = vec![0.0; h_dim];
                self.gate_matvec(&ranges.w_hh, 2, h_dim, h_prev, &mut un_h);
                let r: Vec<f64> = pre[0].iter().map(|&a| sigmoid(a)).collect();
                let z: Vec<f64> = pre[1].iter().map(|&a| sigmoid(a)).collect();
                let n: Vec<f64> = (0..h_dim).map(|j| (pre[2][j] + r[j] * un_h[j]).tanh()).collect();
                let h: Vec<f64> = (0..h_dim).map(|j| (1.0 - z[j]) * n[j] + z[j] * h_prev[j]).collect();
                let mut gates = r;
                gates.extend(z);
                gates.extend(n);
                StepCache { h_prev: h_prev.to_vec(), c_prev: vec![], gates, h, c: vec![], un_h }
            }
            CellKind::Lstm => {
                for gi in 0..4 {
                    self.gate_matvec(&ranges.w_hh, gi, h_dim, h_prev, &mut pre[gi]);
                }
                let i: Vec<f64> = pre[0].iter().map(|&a| sigmoid(a)).collect();
                let f: Vec<f64> = pre[1].iter().map(|&a| sigmoid(a)).collect();
                let gg: Vec<f64> = pre[2].iter().map(|&a| a.tanh()).collect();
                let o: Vec<f64> = pre[3].iter().map(|&a| sigmoid(a)).collect();
                let c: Vec<f64> = (0..h_dim).map(|j| f[j] * c_prev[j] + i[j] * gg[j]).collect();
                let h: Vec<f64> = (0..h_dim).map(|j| o[j] * c[j].tanh()).collect();
                let mut gates = i;
                gates.extend(f);
                gates.extend(gg);
                gates.extend(o);
                StepCache { h_prev: h_prev.to_vec(), c_prev: c_prev.to_vec(), gates, h, c, un_h: vec![] }
            }
        }
    }

    /// Runs all layers over the sequence; caches are per [layer][step].
    fn run(&self, inputs: &[Vec<f64>]) -> (f64, Vec<Vec<StepCache>>) {
        let h_dim = self.spec.hidden_dim;
        let mut caches: Vec<Vec<StepCache>> = Vec::with_capacity(self.spec.layers);
        let mut layer_input: Vec<Vec<f64>> = inputs.to_vec();
        for layer in 0..self.spec.layers {
            let mut h = vec![0.0; h_dim];
            let mut c = vec![0.0; h_dim];
            let mut steps = Vec::with_capacity(layer_input.len());
            for x in &layer_input {
                let cache = self.step(layer, x, &h, &c);
                h = cache.h.clone();
                c = cache.c.clone();
                steps.push(cache);
            }
            layer_input = steps.iter().map(|s| s.h.clone()).collect();
            caches.push(steps);
        }
        let final_h = &caches[self.spec.layers - 1].last().unwrap().h;
        let head = &self.params[self.head.clone()];
        let (w, b) = head.split_at(h_dim);
        let score = sigmoid(w.iter().zip(final_h).map(|(wi, hi)| wi * hi).sum::<f64>() + b[0]);
        (score, caches)
    }

    /// One backward step of layer `layer` at cached step `cache`. Consumes
    /// dh (and dc for LSTM), emits dh_prev/dc_prev and dx; parameter
    /// gradients accumulate into `grads` when given.
    #[allow(clippy::too_many_arguments)]
    fn step_backward(
        &self,
        layer: usize,
        x: &[f64],
        cache: &StepCache,
        dh: &[f64],
        dc: &mut Vec<f64>,
        mut grads: Option<&mut [f64]>,
        dx: &mut [f64],
    ) -> Vec<f64> {
        let h_dim = self.spec.hidden_dim;
        let cols = self.spec.layer_input(layer);
        let ranges = &self.layer_ranges[layer];
        let mut dh_prev = vec![0.0; h_dim];

        let emit = |gate: usize,
                        d_pre: &[f64],
                        grads: &mut Option<&mut [f64]>,
                        dh_prev: &mut [f64],
                        dx: &mut [f64]| {
            if let Some(g) = grads.as_deref_mut() {
                let bias = self.layer_ranges[layer].bias.start + gate * h_dim;
                for j in 0..h_dim {
                    g[bias + j] += d_pre[j];
                }
            }
            self.gate_backprop(&ranges.w_ih, gate, cols, x, d_pre, grads.as_deref_mut(), Some(dx));
            self.gate_backprop(&ranges.w_hh, gate, h_dim, &cache.h_prev, d_pre, grads.as_deref_mut(), Some(dh_prev));
        };

        match self.spec.cell {
            CellKind::Rnn => {
                let d_pre: Vec<f64> = (0..h_dim).map(|j| dh[j] * (1.0 - cache.h[j] * cache.h[j])).collect();
                emit(0, &d_pre, &mut grads, &mut dh_prev, dx);
            }
            CellKind::Gru => {
                let (r, rest) = cache.gates.split_at(h_dim);
                let (z, n) = rest.split_at(h_dim);
                let dn: Vec<f64> = (0..h_dim).map(|j| dh[j] * (1.0 - z[j])).collect();
                let dz: Vec<f64> = (0..h_dim).map(|j| dh[j] * (cache.h_prev[j] - n[j])).collect();
                for j in 0..h_dim {
                    dh_prev[j] += dh[j] * z[j];
                }
                let dn_pre: Vec<f64> = (0..h_dim).map(|j| dn[j] * (1.0 - n[j] * n[j])).collect();
                // Candidate: W_n x + r .* (U_n h_prev) + b_n.
                if let Some(g) = grads.as_deref_mut() {
                    let bias = ranges.bias.start + 2 * h_dim;
                    for j in 0..h_dim {
                        g[bias + j] += dn_pre[j];
                    }
                }
                self.gate_backprop(&ranges.w_ih, 2, cols, x, &dn_pre, grads.as_deref_mut(), Some(dx));
                let masked: Vec<f64> = (0..h_dim).map(|j| dn_pre[j] * r[j]).collect();
                self.gate_backprop(&ranges.w_hh, 2, h_dim, &cache.h_prev, &masked, grads.as_deref_mut(), Some(&mut dh_prev));
                let dr: Vec<f64> = (0..h_dim).map(|j| dn_pre[j] * cache.un_h[j]).collect();
                let dz_pre: Vec<f64> = (0..h_dim).map(|j| dz[j] * z[j] * (1.0 - z[j])).collect();
                emit(1, &dz_pre, &mut grads, &mut dh_prev, dx);
                let dr_pre: Vec<f64> = (0..h_dim).map(|j| dr[j] * r[j] * (1.0 - r[j])).collect();
                emit(0, &dr_pre, &mut grads, &mut dh_prev, dx);
            }
            CellKind::Lstm => {
                let (i, rest) = cache.gates.split_at(h_dim);
                let (f, rest) = rest.split_at(h_dim);
                let (gg, o) = rest.split_at(h_dim);
                if dc.is_empty() {
                    *dc = vec![0.0; h_dim];
                }
                for j in 0..h_dim {
                    let tc = cache.c[j].tanh();
                    dc[j] += dh[j] * o[j] * (1.0 - tc * tc);
                }
                let do_: Vec<f64> = (0..h_dim).map(|j| dh[j] * cache.c[j].tanh()).collect();
                let di: Vec<f64> = (0..h_dim).map(|j| dc[j] * gg[j]).collect();
                let df: Vec<f64> = (0..h_dim).map(|j| dc[j] * cache.c_prev[j]).collect();
                let dg: Vec<f64> = (0..h_dim).map(|j| dc[j] * i[j]).collect();
                let dc_prev: Vec<f64> = (0..h_dim).map(|j| dc[j] * f[j]).collect();
                let di_pre: Vec<f64> = (0..h_dim).map(|j| di[j] * i[j] * (1.0 - i[j])).collect();
                let df_pre: Vec<f64> = (0..h_dim).map(|j| df[j] * f[j] * (1.0 - f[j])).collect();
                let dg_pre: Vec<f64> = (0..h_dim).map(|j| dg[j] * (1.0 - gg[j] * gg[j])).collect();
                let do_pre: Vec<f64> = (0..h_dim).map(|j| do_[j] * o[j] * (1.0 - o[j])).collect();
                emit(0, &di_pre, &mut grads, &mut dh_prev, dx);
                emit(1, &df_pre, &mut grads, &mut dh_prev, dx);
                emit(2, &dg_pre, &mut grads, &mut dh_prev, dx);
                emit(3, &do_pre, &mut grads, &mut dh_prev, dx);
                *dc = dc_prev;
            }
        }
        dh_prev
    }

    /// Full reverse sweep. Returns (score, d score/d inputs); when `grads`
    /// is given, adds `upstream * dscore/dparam` into it (inputs gradient is
    /// then also scaled by `upstream`).
    fn backward_sweep(
        &self,
        inputs: &[Vec<f64>],
        upstream: f64,
        mut grads: Option<&mut [f64]>,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        if inputs.is_empty() {
            return Err(Error::EmptySequence);
        }
        for row in inputs {
            if row.len() != self.spec.input_dim {
                return Err(Error::LengthMismatch { expected: self.spec.input_dim, got: row.len() });
            }
        }
        let steps = inputs.len();
        let h_dim = self.spec.hidden_dim;
        let (score, caches) = self.run(inputs);

        let final_h = &caches[self.spec.layers - 1][steps - 1].h;
        let sp = upstream * score * (1.0 - score);
        let (w, _) = self.params[self.head.clone()].split_at(h_dim);
        if let Some(g) = grads.as_deref_mut() {
            for j in 0..h_dim {
                g[self.head.start + j] += sp * final_h[j];
            }
            g[self.head.start + h_dim] += sp;
        }

        // d score w.r.t. each layer's input sequence; starts as the head
        // pull-back on the top layer's final hidden state.
        let mut dh_seq = vec![vec![0.0; h_dim]; steps];
        for j in 0..h_dim {
            dh_seq[steps - 1][j] = sp * w[j];
        }
        let mut dx_seq: Vec<Vec<f64>> = Vec::new();
        for layer in (0..self.spec.layers).rev() {
            let cols = self.spec.layer_input(layer);
            let mut dx_layer = vec![vec![0.0; cols]; steps];
            let mut dh_next = vec![0.0; h_dim];
            let mut dc = Vec::new();
            for t in (0..steps).rev() {
                let x: &[f64] = if layer == 0 { &inputs[t] } else { &caches[layer - 1][t].h };
                let mut dh = dh_seq[t].clone();
                for j in 0..h_dim {
                    dh[j] += dh_next[j];
                }
                dh_next = self.step_backward(
                    layer,
                    x,
                    &caches[layer][t],
                    &dh,
                    &mut dc,
                    grads.as_deref_mut(),
                    &mut dx_layer[t],
                );
            }
            dh_seq = dx_layer.clone();
            dx_seq = dx_layer;
        }
        Ok((score, dx_seq))
    }
}

impl SequenceModel for RecurrentModel {
    fn describe(&self) -> String {
        format!(
            "recurrent {:?} layers={} input_dim={} hidden_dim={}",
            self.spec.cell, self.spec.layers, self.spec.input_dim, self.spec.hidden_dim
        )
    }

    fn num_params(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, peptide: &Peptide) -> Result<f64> {
        self.forward_inputs(&self.peptide_inputs(peptide)?)
    }

    fn backward(&self, peptide: &Peptide, upstream: f64, grads: &mut [f64]) -> Result<f64> {
        if grads.len() != self.params.len() {
            return Err(Error::LengthMismatch { expected: self.params.len(), got: grads.len() });
        }
        let inputs = self.peptide_inputs(peptide)?;
        let (score, dx) = self.backward_sweep(&inputs, upstream, Some(grads))?;
        let dim = self.spec.input_dim;
        for (pos, token) in peptide.tokens().iter().enumerate() {
            let row = self.embeddings.start + *token as usize * dim;
            for k in 0..dim {
                grads[row + k] += dx[pos][k];
            }
        }
        Ok(score)
    }

    fn input_width(&self) -> usize {
        self.spec.input_dim
    }

    fn peptide_inputs(&self, peptide: &Peptide) -> Result<Vec<Vec<f64>>> {
        if peptide.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(peptide.tokens().iter().map(|&t| self.embedding_row(t)).collect())
    }

    fn forward_inputs(&self, inputs: &[Vec<f64>]) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::EmptySequence);
        }
        for row in inputs {
            if row.len() != self.spec.input_dim {
                return Err(Error::LengthMismatch { expected: self.spec.input_dim, got: row.len() });
            }
        }
        Ok(self.run(inputs).0)
    }

    fn input_gradient(&self, inputs: &[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)> {
        self.backward_sweep(inputs, 1.0, None)
    }
}
