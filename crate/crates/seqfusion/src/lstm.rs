//! Generative single-layer LSTM trained to predict each sequence value from
//! its prefix, with MSE scoring, ratio features, and final-step activation
//! extraction.
//!
//! The network reads `x_1 .. x_{l-1}` and predicts the lagged sequence
//! `x_2 .. x_l`; a dense linear layer maps the `n_units` hidden activations
//! to the `n_d` predicted values per step. Per step, with `s` the logistic
//! function:
//!
//! ```text
//! i = s(Wi x + Ui h' + bi)      f = s(Wf x + Uf h' + bf)
//! g = tanh(Wg x + Ug h' + bg)   o = s(Wo x + Uo h' + bo)
//! c = f * c' + i * g            h = o * tanh(c)
//! pred = Wout h + bout
//! ```
//!
//! All parameters live in one flat `Vec<f64>` so the optimizer and the
//! finite-difference gradient check can treat the network as a plain
//! parameter vector.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ClassLabel;
use crate::error::{Error, Result};
use crate::rng;

/// MSE values are floored here before entering the log ratio.
pub const MSE_FLOOR: f64 = 1e-12;

/// Training hyperparameters (LSTM size, dropout, batch size, epochs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_units: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(n_units: usize, seed: u64) -> Self {
        TrainConfig {
            n_units,
            dropout: 0.0,
            batch_size: 1,
            epochs: 10,
            learning_rate: 1e-3,
            clip_norm: 5.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_units == 0 {
            return Err(Error::Config("LSTM needs at least one unit".to_string()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".to_string()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

// Gate order within the flat parameter vector.
const GATES: [&str; 4] = ["input", "forget", "cell", "output"];

/// Single-layer LSTM plus a linear output head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmNet {
    n_units: usize,
    n_channels: usize,
    dropout: f64,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    h: usize,
    d: usize,
}

impl Layout {
    fn gate_block(&self) -> usize {
        self.h * self.d + self.h * self.h + self.h
    }
    fn w(&self, gate: usize) -> usize {
        gate * self.gate_block()
    }
    fn u(&self, gate: usize) -> usize {
        self.w(gate) + self.h * self.d
    }
    fn b(&self, gate: usize) -> usize {
        self.u(gate) + self.h * self.h
    }
    fn w_out(&self) -> usize {
        4 * self.gate_block()
    }
    fn b_out(&self) -> usize {
        self.w_out() + self.d * self.h
    }
    fn total(&self) -> usize {
        self.b_out() + self.d
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct StepCache {
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    /// Inverted dropout mask (0 or 1/keep); `None` outside training.
    mask: Option<Vec<f64>>,
}

struct ForwardTrace {
    steps: Vec<StepCache>,
    preds: Array2<f64>,
}

impl LstmNet {
    /// Fresh network: weights uniform in (-0.08, 0.08), forget-gate bias 1,
    /// other biases 0.
    pub fn new(n_units: usize, n_channels: usize, dropout: f64, rng: &mut ChaCha8Rng) -> Self {
        let layout = Layout {
            h: n_units,
            d: n_channels,
        };
        let mut params = vec![0.0; layout.total()];
        for gate in 0..4 {
            for p in &mut params[layout.w(gate)..layout.u(gate) + n_units * n_units] {
                *p = rng.random::<f64>() * 0.16 - 0.08;
            }
            if GATES[gate] == "forget" {
                for p in &mut params[layout.b(gate)..layout.b(gate) + n_units] {
                    *p = 1.0;
                }
            }
        }
        for p in &mut params[layout.w_out()..layout.w_out() + n_channels * n_units] {
            *p = rng.random::<f64>() * 0.16 - 0.08;
        }
        LstmNet {
            n_units,
            n_channels,
            dropout,
            params,
        }
    }

    /// All-zero network (useful as a null model in tests).
    pub fn zeroed(n_units: usize, n_channels: usize) -> Self {
        let layout = Layout {
            h: n_units,
            d: n_channels,
        };
        LstmNet {
            n_units,
            n_channels,
            dropout: 0.0,
            params: vec![0.0; layout.total()],
        }
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    fn layout(&self) -> Layout {
        Layout {
            h: self.n_units,
            d: self.n_channels,
        }
    }

    /// Flat view of every parameter, in tensor-layout order.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(name, rows, cols, offset)` for each parameter tensor; bias tensors
    /// report one row.
    pub fn tensor_layout(&self) -> Vec<(String, usize, usize, usize)> {
        let l = self.layout();
        let mut out = Vec::new();
        for (gate, name) in GATES.iter().enumerate() {
            out.push((format!("w_{name}"), l.h, l.d, l.w(gate)));
            out.push((format!("u_{name}"), l.h, l.h, l.u(gate)));
            out.push((format!("b_{name}"), 1, l.h, l.b(gate)));
        }
        out.push(("w_out".to_string(), l.d, l.h, l.w_out()));
        out.push(("b_out".to_string(), 1, l.d, l.b_out()));
        out
    }

    fn check_sequence(&self, seq: &Array2<f64>) -> Result<()> {
        if seq.nrows() != self.n_channels {
            return Err(Error::Dimension(format!(
                "sequence has {} channels, network expects {}",
                seq.nrows(),
                self.n_channels
            )));
        }
        if seq.ncols() < 2 {
            return Err(Error::Dimension(format!(
                "sequence too short: {} steps, need at least 2",
                seq.ncols()
            )));
        }
        Ok(())
    }

    fn run_forward(
        &self,
        seq: &Array2<f64>,
        mut mask_rng: Option<&mut ChaCha8Rng>,
    ) -> ForwardTrace {
        let l = self.layout();
        let (h_n, d_n) = (l.h, l.d);
        let steps_n = seq.ncols() - 1;
        let p = &self.params;

        let mut steps: Vec<StepCache> = Vec::with_capacity(steps_n);
        let mut preds = Array2::zeros((d_n, steps_n));
        let mut x = vec![0.0; d_n];
        let mut pre = vec![0.0; h_n];
        let zeros = vec![0.0; h_n];

        for t in 0..steps_n {
            for (d, xv) in x.iter_mut().enumerate() {
                *xv = seq[(d, t)];
            }
            let (h_prev, c_prev): (&[f64], &[f64]) = if t == 0 {
                (&zeros, &zeros)
            } else {
                (&steps[t - 1].h, &steps[t - 1].c)
            };

            let mut gate_out = [const { Vec::new() }; 4];
            for (gate, out) in gate_out.iter_mut().enumerate() {
                let w = &p[l.w(gate)..l.w(gate) + h_n * d_n];
                let u = &p[l.u(gate)..l.u(gate) + h_n * h_n];
                let b = &p[l.b(gate)..l.b(gate) + h_n];
                for j in 0..h_n {
                    let mut acc = b[j];
                    let wr = &w[j * d_n..(j + 1) * d_n];
                    for (d, &xv) in x.iter().enumerate() {
                        acc += wr[d] * xv;
                    }
                    let ur = &u[j * h_n..(j + 1) * h_n];
                    for (k, &hv) in h_prev.iter().enumerate() {
                        acc += ur[k] * hv;
                    }
                    pre[j] = acc;
                }
                *out = pre
                    .iter()
                    .map(|&v| if gate == 2 { v.tanh() } else { sigmoid(v) })
                    .collect();
            }
            let [i_g, f_g, g_g, o_g] = gate_out;

            let mut c = vec![0.0; h_n];
            let mut tanh_c = vec![0.0; h_n];
            let mut h = vec![0.0; h_n];
            for j in 0..h_n {
                c[j] = f_g[j] * c_prev[j] + i_g[j] * g_g[j];
                tanh_c[j] = c[j].tanh();
                h[j] = o_g[j] * tanh_c[j];
            }

            let mask = mask_rng
                .as_deref_mut()
                .filter(|_| self.dropout > 0.0)
                .map(|r| {
                    let keep = 1.0 - self.dropout;
                    (0..h_n)
                        .map(|_| {
                            if r.random::<f64>() < self.dropout {
                                0.0
                            } else {
                                1.0 / keep
                            }
                        })
                        .collect::<Vec<f64>>()
                });

            let w_out = &p[l.w_out()..l.w_out() + d_n * h_n];
            let b_out = &p[l.b_out()..l.b_out() + d_n];
            for d in 0..d_n {
                let row = &w_out[d * h_n..(d + 1) * h_n];
                let mut acc = b_out[d];
                for j in 0..h_n {
                    let hv = match &mask {
                        Some(m) => h[j] * m[j],
                        None => h[j],
                    };
                    acc += row[j] * hv;
                }
                preds[(d, t)] = acc;
            }

            steps.push(StepCache {
                i: i_g,
                f: f_g,
                g: g_g,
                o: o_g,
                c,
                tanh_c,
                h,
                mask,
            });
        }
        ForwardTrace { steps, preds }
    }

    /// Deterministic forward pass: predictions for positions `2..=l_d` and
    /// the hidden activations after the last consumed step.
    pub fn forward(&self, seq: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>)> {
        self.check_sequence(seq)?;
        let trace = self.run_forward(seq, None);
        let final_h = trace.steps.last().expect("l_d >= 2").h.clone();
        Ok((trace.preds, final_h))
    }

    /// Mean squared error between the predictions and the lagged targets,
    /// averaged over all `n_d * (l_d - 1)` cells.
    pub fn mse(&self, seq: &Array2<f64>) -> Result<f64> {
        let (preds, _) = self.forward(seq)?;
        let steps_n = preds.ncols();
        let mut acc = 0.0;
        for t in 0..steps_n {
            for d in 0..self.n_channels {
                let e = preds[(d, t)] - seq[(d, t + 1)];
                acc += e * e;
            }
        }
        Ok(acc / (steps_n * self.n_channels) as f64)
    }

    /// LSTM unit outputs after consuming step `l_d - 1`; identical to the
    /// second output of [`forward`](Self::forward).
    pub fn activations(&self, seq: &Array2<f64>) -> Result<Vec<f64>> {
        Ok(self.forward(seq)?.1)
    }

    /// Training loss of one sequence without dropout.
    pub fn sequence_loss(&self, seq: &Array2<f64>) -> Result<f64> {
        self.mse(seq)
    }

    /// Loss and the full flat gradient for one sequence (no dropout). Used by
    /// the finite-difference gradient check and by training with dropout
    /// disabled.
    pub fn sequence_loss_and_grads(&self, seq: &Array2<f64>) -> Result<(f64, Vec<f64>)> {
        self.check_sequence(seq)?;
        Ok(self.loss_and_grads_inner(seq, None))
    }

    fn loss_and_grads_inner(
        &self,
        seq: &Array2<f64>,
        mask_rng: Option<&mut ChaCha8Rng>,
    ) -> (f64, Vec<f64>) {
        let l = self.layout();
        let (h_n, d_n) = (l.h, l.d);
        let trace = self.run_forward(seq, mask_rng);
        let steps_n = trace.steps.len();
        let cells = (steps_n * d_n) as f64;
        let p = &self.params;

        let mut loss = 0.0;
        let mut grads = vec![0.0; p.len()];
        let mut dh_carry = vec![0.0; h_n];
        let mut dc_carry = vec![0.0; h_n];
        let mut dpred = vec![0.0; d_n];
        let mut dh = vec![0.0; h_n];
        let mut dc = vec![0.0; h_n];
        let mut dgate = vec![0.0; h_n];
        let zeros = vec![0.0; h_n];
        let mut x = vec![0.0; d_n];

        let w_out = &p[l.w_out()..l.w_out() + d_n * h_n];
        for t in (0..steps_n).rev() {
            let step = &trace.steps[t];
            for (d, xv) in x.iter_mut().enumerate() {
                *xv = seq[(d, t)];
            }
            let (h_prev, c_prev): (&[f64], &[f64]) = if t == 0 {
                (&zeros, &zeros)
            } else {
                (&trace.steps[t - 1].h, &trace.steps[t - 1].c)
            };

            for d in 0..d_n {
                let err = trace.preds[(d, t)] - seq[(d, t + 1)];
                loss += err * err / cells;
                dpred[d] = 2.0 * err / cells;
            }

            // Output head; the mask scales both the head input and the
            // gradient flowing back into h.
            for j in 0..h_n {
                let m = step.mask.as_ref().map_or(1.0, |m| m[j]);
                let h_used = step.h[j] * m;
                let mut acc = 0.0;
                for d in 0..d_n {
                    grads[l.w_out() + d * h_n + j] += dpred[d] * h_used;
                    acc += w_out[d * h_n + j] * dpred[d];
                }
                dh[j] = acc * m + dh_carry[j];
            }
            for d in 0..d_n {
                grads[l.b_out() + d] += dpred[d];
            }

            for j in 0..h_n {
                dc[j] = dh[j] * step.o[j] * (1.0 - step.tanh_c[j] * step.tanh_c[j]) + dc_carry[j];
            }

            dh_carry.fill(0.0);
            for gate in 0..4 {
                for j in 0..h_n {
                    dgate[j] = match gate {
                        0 => dc[j] * step.g[j] * step.i[j] * (1.0 - step.i[j]),
                        1 => dc[j] * c_prev[j] * step.f[j] * (1.0 - step.f[j]),
                        2 => dc[j] * step.i[j] * (1.0 - step.g[j] * step.g[j]),
                        _ => dh[j] * step.tanh_c[j] * step.o[j] * (1.0 - step.o[j]),
                    };
                }
                let w_base = l.w(gate);
                let u_base = l.u(gate);
                let b_base = l.b(gate);
                for j in 0..h_n {
                    let dg = dgate[j];
                    if dg == 0.0 {
                        continue;
                    }
                    for (d, &xv) in x.iter().enumerate() {
                        grads[w_base + j * d_n + d] += dg * xv;
                    }
                    for (k, &hv) in h_prev.iter().enumerate() {
                        grads[u_base + j * h_n + k] += dg * hv;
                    }
                    grads[b_base + j] += dg;
                    let u = &p[u_base + j * h_n..u_base + (j + 1) * h_n];
                    for k in 0..h_n {
                        dh_carry[k] += u[k] * dg;
                    }
                }
            }
            for j in 0..h_n {
                dc_carry[j] = dc[j] * step.f[j];
            }
        }
        (loss, grads)
    }

    /// Versioned, shape-tagged JSON tensor dump for pipeline caching.
    pub fn to_json(&self) -> String {
        let tensors: Vec<TensorDump> = self
            .tensor_layout()
            .into_iter()
            .map(|(name, rows, cols, offset)| TensorDump {
                name,
                shape: vec![rows, cols],
                data: self.params[offset..offset + rows * cols].to_vec(),
            })
            .collect();
        let doc = LstmDocument {
            version: 1,
            n_units: self.n_units,
            n_channels: self.n_channels,
            dropout: self.dropout,
            tensors,
        };
        serde_json::to_string_pretty(&doc).expect("LSTM document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LstmDocument = serde_json::from_str(text)?;
        if doc.version != 1 {
            return Err(Error::Serialization(format!(
                "unsupported LSTM document version {}",
                doc.version
            )));
        }
        let mut net = LstmNet::zeroed(doc.n_units, doc.n_channels);
        net.dropout = doc.dropout;
        let layout = net.tensor_layout();
        if doc.tensors.len() != layout.len() {
            return Err(Error::Serialization(format!(
                "expected {} tensors, found {}",
                layout.len(),
                doc.tensors.len()
            )));
        }
        for (dump, (name, rows, cols, offset)) in doc.tensors.iter().zip(layout) {
            if dump.name != name || dump.shape != [rows, cols] || dump.data.len() != rows * cols {
                return Err(Error::Serialization(format!(
                    "tensor {} has unexpected name or shape",
                    dump.name
                )));
            }
            net.params[offset..offset + rows * cols].copy_from_slice(&dump.data);
        }
        Ok(net)
    }
}

#[derive(Serialize, Deserialize)]
struct TensorDump {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LstmDocument {
    version: u32,
    n_units: usize,
    n_channels: usize,
    dropout: f64,
    tensors: Vec<TensorDump>,
}

/// RMSProp optimizer state over one flat parameter vector.
#[derive(Debug, Clone)]
pub struct RmsPropState {
    /// Per-parameter running average of squared gradients.
    pub avg_sq: Vec<f64>,
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl RmsPropState {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        RmsPropState {
            avg_sq: vec![0.0; n_params],
            learning_rate,
            decay: 0.9,
            epsilon: 1e-8,
        }
    }
}

/// One RMSProp update:
/// `r <- decay * r + (1 - decay) * g^2; p <- p - lr * g / (sqrt(r) + eps)`.
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut RmsPropState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.avg_sq.len() {
        return Err(Error::Dimension(format!(
            "rmsprop shapes disagree: {} params, {} grads, {} state entries",
            params.len(),
            grads.len(),
            state.avg_sq.len()
        )));
    }
    if !grads.iter().all(|g| g.is_finite()) {
        return Err(Error::Training("non-finite gradient".to_string()));
    }
    for ((p, &g), r) in params.iter_mut().zip(grads).zip(&mut state.avg_sq) {
        *r = state.decay * *r + (1.0 - state.decay) * g * g;
        *p -= state.learning_rate * g / (r.sqrt() + state.epsilon);
    }
    Ok(())
}

fn clip_global_norm(grads: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
}

/// Train by backpropagation through time; returns the net and the mean
/// training loss recorded at each epoch.
pub fn fit_traced(seqs: &[Array2<f64>], cfg: &TrainConfig) -> Result<(LstmNet, Vec<f64>)> {
    cfg.validate()?;
    let Some(first) = seqs.first() else {
        return Err(Error::Training(
            "LSTM fit needs at least one sequence".to_string(),
        ));
    };
    let (n_d, l_d) = (first.nrows(), first.ncols());
    if l_d < 2 {
        return Err(Error::Dimension(
            "sequences must have at least two steps".to_string(),
        ));
    }
    for (i, s) in seqs.iter().enumerate() {
        if s.nrows() != n_d || s.ncols() != l_d {
            return Err(Error::Dimension(format!(
                "sequence {i} is {}x{}, expected {n_d}x{l_d}",
                s.nrows(),
                s.ncols()
            )));
        }
        if !s.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("sequence {i}")));
        }
    }

    let mut init_rng = rng::stream_rng(cfg.seed, "lstm-init", 0);
    let mut net = LstmNet::new(cfg.n_units, n_d, cfg.dropout, &mut init_rng);
    let mut state = RmsPropState::new(net.params.len(), cfg.learning_rate);
    let mut shuffle_rng = rng::stream_rng(cfg.seed, "lstm-shuffle", 0);
    let mut dropout_rng = rng::stream_rng(cfg.seed, "lstm-dropout", 0);

    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut batch_grads = vec![0.0; net.params.len()];

    for epoch in 0..cfg.epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            batch_grads.fill(0.0);
            let mut batch_loss = 0.0;
            for &s in batch {
                let mask_rng = (cfg.dropout > 0.0).then_some(&mut dropout_rng);
                let (loss, grads) = net.loss_and_grads_inner(&seqs[s], mask_rng);
                batch_loss += loss;
                for (acc, g) in batch_grads.iter_mut().zip(&grads) {
                    *acc += g;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for g in batch_grads.iter_mut() {
                *g *= scale;
            }
            epoch_loss += batch_loss;
            clip_global_norm(&mut batch_grads, cfg.clip_norm);
            rmsprop_step(&mut net.params, &batch_grads, &mut state)
                .map_err(|e| Error::Training(format!("epoch {}: {e}", epoch + 1)))?;
        }
        epoch_loss /= seqs.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Training(format!(
                "loss diverged at epoch {}",
                epoch + 1
            )));
        }
        epoch_losses.push(epoch_loss);
    }
    Ok((net, epoch_losses))
}

/// Train by backpropagation through time on the lagged-target objective.
pub fn fit(seqs: &[Array2<f64>], cfg: &TrainConfig) -> Result<LstmNet> {
    fit_traced(seqs, cfg).map(|(net, _)| net)
}

/// `ln(mse_neg / mse_pos)` with both values floored at [`MSE_FLOOR`].
pub fn mse_log_ratio(mse_pos: f64, mse_neg: f64) -> f64 {
    (mse_neg.max(MSE_FLOOR) / mse_pos.max(MSE_FLOOR)).ln()
}

/// One generative LSTM per class.
#[derive(Debug, Clone)]
pub struct PairedLstm {
    pub pos: LstmNet,
    pub neg: LstmNet,
}

impl PairedLstm {
    /// Fit one network per class on that class's sequences; both fits share
    /// the configuration (and seed), so symmetric data gives identical nets.
    pub fn fit(seqs: &[Array2<f64>], labels: &[ClassLabel], cfg: &TrainConfig) -> Result<Self> {
        if seqs.len() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} sequences but {} labels",
                seqs.len(),
                labels.len()
            )));
        }
        let pos_seqs: Vec<Array2<f64>> = seqs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == ClassLabel::Pos)
            .map(|(s, _)| s.clone())
            .collect();
        let neg_seqs: Vec<Array2<f64>> = seqs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == ClassLabel::Neg)
            .map(|(s, _)| s.clone())
            .collect();
        if pos_seqs.is_empty() || neg_seqs.is_empty() {
            return Err(Error::Training(
                "paired fit needs sequences from both classes".to_string(),
            ));
        }
        let (pos, neg) = rayon::join(|| fit(&pos_seqs, cfg), || fit(&neg_seqs, cfg));
        Ok(PairedLstm {
            pos: pos?,
            neg: neg?,
        })
    }

    /// `(MSE under the positive net, MSE under the negative net)`.
    pub fn mses(&self, seq: &Array2<f64>) -> Result<(f64, f64)> {
        Ok((self.pos.mse(seq)?, self.neg.mse(seq)?))
    }

    /// `ln(MSE_neg / MSE_pos)`; positive when the positive net reconstructs
    /// the sequence better.
    pub fn ratio(&self, seq: &Array2<f64>) -> Result<f64> {
        let (mp, mn) = self.mses(seq)?;
        Ok(mse_log_ratio(mp, mn))
    }

    /// `Pos` iff the ratio is >= 0 (ties, including both MSEs below the
    /// floor, go to `Pos`).
    pub fn classify(&self, seq: &Array2<f64>) -> Result<ClassLabel> {
        Ok(if self.ratio(seq)? >= 0.0 {
            ClassLabel::Pos
        } else {
            ClassLabel::Neg
        })
    }
}
