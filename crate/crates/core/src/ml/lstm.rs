//! LSTM regression networks: one or two layers, optionally bidirectional,
//! with a dense head on the final representation, trained by Adam on MSE.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tune::{SliceSpec, TrialRecord, TuneResult};
use crate::error::{Error, Result};
use crate::features::Design;
use crate::metrics::mape;
use crate::preprocess::MinMaxScaler;
use crate::seed;

pub const BATCH_SIZE: usize = 7;
pub const MAX_EPOCHS: usize = 100;
pub const UNITS_RANGE: (usize, usize) = (50, 200);
pub const LEARNING_RATE_RANGE: (f64, f64) = (1e-4, 1e-2);
pub const DROPOUT_RANGE: (f64, f64) = (0.0, 0.4);
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
/// Central-difference step for the gradient check.
pub const GRAD_CHECK_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    /// 1 for a single layer, 2 for a stacked network.
    pub depth: usize,
    pub bidirectional: bool,
    pub units: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    /// Lookback length in days.
    pub window: usize,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            depth: 1,
            bidirectional: false,
            units: 50,
            learning_rate: 1e-3,
            dropout: 0.0,
            window: 7,
            epochs: MAX_EPOCHS,
            batch: BATCH_SIZE,
            seed: 0,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        self.validate_with(MAX_EPOCHS)
    }

    /// As [`validate`](Self::validate) with a caller-chosen epoch cap.
    pub fn validate_with(&self, max_epochs: usize) -> Result<()> {
        let bad = |m: String| Err(Error::invalid(m));
        if !(1..=2).contains(&self.depth) {
            return bad(format!("lstm depth must be 1 or 2, got {}", self.depth));
        }
        if !(UNITS_RANGE.0..=UNITS_RANGE.1).contains(&self.units) {
            return bad(format!("lstm units must lie in 50..=200, got {}", self.units));
        }
        if !(LEARNING_RATE_RANGE.0..=LEARNING_RATE_RANGE.1).contains(&self.learning_rate) {
            return bad(format!("lstm learning rate {} outside [1e-4, 1e-2]", self.learning_rate));
        }
        if !(DROPOUT_RANGE.0..=DROPOUT_RANGE.1).contains(&self.dropout) {
            return bad(format!("lstm dropout {} outside [0, 0.4]", self.dropout));
        }
        if self.window == 0 {
            return bad("lstm window must be positive".into());
        }
        if self.epochs == 0 || self.epochs > max_epochs {
            return bad(format!("lstm epochs must lie in 1..={max_epochs}, got {}", self.epochs));
        }
        if self.batch != BATCH_SIZE {
            return bad(format!("lstm batch size must be {BATCH_SIZE}, got {}", self.batch));
        }
        Ok(())
    }

    pub fn arch(&self, input: usize) -> Arch {
        Arch {
            input,
            units: self.units,
            depth: self.depth,
            bidirectional: self.bidirectional,
        }
    }

    pub const CSV_HEADER: &'static str = "depth,bidirectional,units,learning_rate,dropout,window,epochs,batch,seed";

    pub fn csv_fields(&self) -> String {
        use crate::io::fmt_f64;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.depth,
            self.bidirectional,
            self.units,
            fmt_f64(self.learning_rate),
            fmt_f64(self.dropout),
            self.window,
            self.epochs,
            self.batch,
            self.seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub input: usize,
    pub units: usize,
    pub depth: usize,
    pub bidirectional: bool,
}

impl Arch {
    pub fn dirs(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }

    pub fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input
        } else {
            self.units * self.dirs()
        }
    }

    pub fn n_cells(&self) -> usize {
        self.depth * self.dirs()
    }

    pub fn out_dim(&self) -> usize {
        self.units * self.dirs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: String, shape: Vec<usize>) -> Tensor {
        let len = shape.iter().product();
        Tensor {
            name,
            shape,
            data: vec![0.0; len],
        }
    }
}

/// Weights stored as named tensors. Cell `k` (layer `k / dirs`, direction
/// `k % dirs`) owns tensors `3k` (input kernel, 4H x I), `3k + 1` (recurrent
/// kernel, 4H x H) and `3k + 2` (bias, 4H); gate blocks are ordered input,
/// forget, candidate, output. The head weight and bias follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub arch: Arch,
    pub tensors: Vec<Tensor>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct DirTrace {
    /// Post-activation gates per processing step.
    gates: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

struct LayerTrace {
    input: Vec<Vec<f64>>,
    dirs: Vec<DirTrace>,
    mask: Option<Vec<Vec<f64>>>,
}

pub struct Trace {
    layers: Vec<LayerTrace>,
    rep: Vec<f64>,
    pub output: f64,
}

/// Inverted-dropout masks, one per layer output.
pub type Masks = Vec<Vec<Vec<f64>>>;

impl Network {
    pub fn zeros(arch: Arch) -> Network {
        let mut tensors = Vec::new();
        let h = arch.units;
        for l in 0..arch.depth {
            for d in 0..arch.dirs() {
                let tag = format!("layer{l}_{}", if d == 0 { "fwd" } else { "bwd" });
                tensors.push(Tensor::zeros(format!("{tag}_input_kernel"), vec![4 * h, arch.layer_input(l)]));
                tensors.push(Tensor::zeros(format!("{tag}_recurrent_kernel"), vec![4 * h, h]));
                tensors.push(Tensor::zeros(format!("{tag}_bias"), vec![4 * h]));
            }
        }
        tensors.push(Tensor::zeros("head_kernel".into(), vec![arch.out_dim()]));
        tensors.push(Tensor::zeros("head_bias".into(), vec![1]));
        Network { arch, tensors }
    }

    /// Glorot-uniform input kernels, orthogonal recurrent kernels, forget
    /// bias 1, Glorot-uniform head.
    pub fn init(arch: Arch, seed: u64) -> Network {
        let mut net = Network::zeros(arch);
        let mut rng = seed::rng(seed);
        let h = arch.units;
        for k in 0..arch.n_cells() {
            let inp = arch.layer_input(k / arch.dirs());
            let limit = (6.0 / (inp + 4 * h) as f64).sqrt();
            for v in net.tensors[3 * k].data.iter_mut() {
                *v = rng.random_range(-limit..limit);
            }
            let g = DMatrix::<f64>::from_fn(4 * h, h, |_, _| rng.sample(StandardNormal));
            let qr = g.qr();
            let (q, r) = (qr.q(), qr.r());
            for j in 0..h {
                let sign = if r[(j, j)] < 0.0 { -1.0 } else { 1.0 };
                for i in 0..4 * h {
                    net.tensors[3 * k + 1].data[i * h + j] = sign * q[(i, j)];
                }
            }
            for v in &mut net.tensors[3 * k + 2].data[h..2 * h] {
                *v = 1.0;
            }
        }
        let head = 3 * arch.n_cells();
        let limit = (6.0 / (arch.out_dim() + 1) as f64).sqrt();
        for v in net.tensors[head].data.iter_mut() {
            *v = rng.random_range(-limit..limit);
        }
        net
    }

    pub fn n_params(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    fn run_cell(&self, k: usize, input: &[Vec<f64>], reverse: bool) -> DirTrace {
        let h = self.arch.units;
        let ni = input.first().map_or(0, |x| x.len());
        let wx = &self.tensors[3 * k].data;
        let wh = &self.tensors[3 * k + 1].data;
        let b = &self.tensors[3 * k + 2].data;
        let n = input.len();
        let mut tr = DirTrace {
            gates: Vec::with_capacity(n),
            c: Vec::with_capacity(n),
            h: Vec::with_capacity(n),
        };
        let mut c_prev = vec![0.0; h];
        let mut h_prev = vec![0.0; h];
        for s in 0..n {
            let t = if reverse { n - 1 - s } else { s };
            let x = &input[t];
            let mut a = b.clone();
            for (r, ar) in a.iter_mut().enumerate() {
                let rx = &wx[r * ni..(r + 1) * ni];
                let rh = &wh[r * h..(r + 1) * h];
                *ar += rx.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
                    + rh.iter().zip(&h_prev).map(|(w, v)| w * v).sum::<f64>();
            }
            for j in 0..h {
                a[j] = sigmoid(a[j]);
                a[h + j] = sigmoid(a[h + j]);
                a[2 * h + j] = a[2 * h + j].tanh();
                a[3 * h + j] = sigmoid(a[3 * h + j]);
            }
            let c: Vec<f64> = (0..h).map(|j| a[h + j] * c_prev[j] + a[j] * a[2 * h + j]).collect();
            let hv: Vec<f64> = (0..h).map(|j| a[3 * h + j] * c[j].tanh()).collect();
            tr.gates.push(a);
            c_prev.clone_from(&c);
            h_prev.clone_from(&hv);
            tr.c.push(c);
            tr.h.push(hv);
        }
        tr
    }

    /// Time-ordered outputs of one layer, directions concatenated.
    fn layer_output(&self, dirs: &[DirTrace], n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|t| {
                let mut out = dirs[0].h[t].clone();
                if dirs.len() == 2 {
                    out.extend_from_slice(&dirs[1].h[n - 1 - t]);
                }
                out
            })
            .collect()
    }

    pub fn forward(&self, x: &[Vec<f64>], masks: Option<&Masks>) -> Trace {
        let n = x.len();
        let dirs = self.arch.dirs();
        let h = self.arch.units;
        let mut layers = Vec::with_capacity(self.arch.depth);
        let mut input = x.to_vec();
        for l in 0..self.arch.depth {
            let traces: Vec<DirTrace> = (0..dirs).map(|d| self.run_cell(l * dirs + d, &input, d == 1)).collect();
            let mut out = self.layer_output(&traces, n);
            let mask = masks.map(|m| m[l].clone());
            if let Some(m) = &mask {
                for (o, mr) in out.iter_mut().zip(m) {
                    for (v, s) in o.iter_mut().zip(mr) {
                        *v *= s;
                    }
                }
            }
            layers.push(LayerTrace {
                input: std::mem::replace(&mut input, out),
                dirs: traces,
                mask,
            });
        }
        // Forward direction ends at the last step, backward at the first.
        let mut rep = input[n - 1][..h].to_vec();
        if dirs == 2 {
            rep.extend_from_slice(&input[0][h..]);
        }
        let head = 3 * self.arch.n_cells();
        let output = self.tensors[head + 1].data[0]
            + self.tensors[head].data.iter().zip(&rep).map(|(w, v)| w * v).sum::<f64>();
        Trace { layers, rep, output }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> f64 {
        self.forward(x, None).output
    }

    /// First-layer hidden states in time order, directions concatenated.
    pub fn hidden_sequence(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let dirs = self.arch.dirs();
        let traces: Vec<DirTrace> = (0..dirs).map(|d| self.run_cell(d, x, d == 1)).collect();
        self.layer_output(&traces, x.len())
    }

    /// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(output).
    pub fn backward(&self, trace: &Trace, dy: f64, grads: &mut [Vec<f64>]) {
        let h = self.arch.units;
        let dirs = self.arch.dirs();
        let head = 3 * self.arch.n_cells();
        for (g, r) in grads[head].iter_mut().zip(&trace.rep) {
            *g += dy * r;
        }
        grads[head + 1][0] += dy;
        let n = trace.layers[0].input.len();
        let width = self.arch.out_dim();
        let mut dout = vec![vec![0.0; width]; n];
        for j in 0..h {
            dout[n - 1][j] = dy * self.tensors[head].data[j];
        }
        if dirs == 2 {
            for j in 0..h {
                dout[0][h + j] = dy * self.tensors[head].data[h + j];
            }
        }
        for l in (0..self.arch.depth).rev() {
            let lt = &trace.layers[l];
            if let Some(m) = &lt.mask {
                for (d, mr) in dout.iter_mut().zip(m) {
                    for (v, s) in d.iter_mut().zip(mr) {
                        *v *= s;
                    }
                }
            }
            let ni = self.arch.layer_input(l);
            let mut dx = vec![vec![0.0; ni]; n];
            for d in 0..dirs {
                let k = l * dirs + d;
                let dh_ext: Vec<&[f64]> = (0..n).map(|t| &dout[t][d * h..(d + 1) * h]).collect();
                self.cell_backward(k, &lt.input, &lt.dirs[d], d == 1, &dh_ext, &mut dx, grads);
            }
            dout = dx;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn cell_backward(
        &self,
        k: usize,
        input: &[Vec<f64>],
        tr: &DirTrace,
        reverse: bool,
        dh_ext: &[&[f64]],
        dx: &mut [Vec<f64>],
        grads: &mut [Vec<f64>],
    ) {
        let h = self.arch.units;
        let ni = input[0].len();
        let n = input.len();
        let wx = &self.tensors[3 * k].data;
        let wh = &self.tensors[3 * k + 1].data;
        let zeros = vec![0.0; h];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut da = vec![0.0; 4 * h];
        for s in (0..n).rev() {
            let t = if reverse { n - 1 - s } else { s };
            let a = &tr.gates[s];
            let c = &tr.c[s];
            let c_prev = if s > 0 { &tr.c[s - 1] } else { &zeros };
            let h_prev = if s > 0 { &tr.h[s - 1] } else { &zeros };
            for j in 0..h {
                let (ig, fg, gg, og) = (a[j], a[h + j], a[2 * h + j], a[3 * h + j]);
                let dh = dh_ext[t][j] + dh_next[j];
                let tc = c[j].tanh();
                let dc = dh * og * (1.0 - tc * tc) + dc_next[j];
                da[j] = dc * gg * ig * (1.0 - ig);
                da[h + j] = dc * c_prev[j] * fg * (1.0 - fg);
                da[2 * h + j] = dc * ig * (1.0 - gg * gg);
                da[3 * h + j] = dh * tc * og * (1.0 - og);
                dc_next[j] = dc * fg;
            }
            let x = &input[t];
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            for (r, &dar) in da.iter().enumerate() {
                if dar == 0.0 {
                    continue;
                }
                grads[3 * k + 2][r] += dar;
                let gx = &mut grads[3 * k][r * ni..(r + 1) * ni];
                for (g, v) in gx.iter_mut().zip(x) {
                    *g += dar * v;
                }
                let gh = &mut grads[3 * k + 1][r * h..(r + 1) * h];
                for (g, v) in gh.iter_mut().zip(h_prev) {
                    *g += dar * v;
                }
                for (d, w) in dx[t].iter_mut().zip(&wx[r * ni..(r + 1) * ni]) {
                    *d += dar * w;
                }
                for (d, w) in dh_next.iter_mut().zip(&wh[r * h..(r + 1) * h]) {
                    *d += dar * w;
                }
            }
        }
    }

    pub fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect()
    }

    /// Mean squared error over a batch and its gradient.
    pub fn batch_loss_grad(&self, batch: &[(Vec<Vec<f64>>, f64)], masks: Option<&[Masks]>) -> (f64, Vec<Vec<f64>>) {
        let mut grads = self.zero_grads();
        let mut loss = 0.0;
        let m = batch.len() as f64;
        for (i, (x, y)) in batch.iter().enumerate() {
            let tr = self.forward(x, masks.map(|ms| &ms[i]));
            let e = tr.output - y;
            loss += e * e / m;
            self.backward(&tr, 2.0 * e / m, &mut grads);
        }
        (loss, grads)
    }

    pub fn batch_loss(&self, batch: &[(Vec<Vec<f64>>, f64)]) -> f64 {
        let m = batch.len() as f64;
        batch.iter().map(|(x, y)| (self.predict(x) - y).powi(2) / m).sum()
    }

    fn dropout_masks(&self, n: usize, rate: f64, rng: &mut impl Rng) -> Masks {
        let keep = 1.0 - rate;
        (0..self.arch.depth)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        (0..self.arch.out_dim())
                            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Largest relative error per tensor between analytic and central-difference
/// gradients of the batch MSE, over up to `per_tensor` sampled entries each.
/// The relative error is |a - n| / max(|a|, |n|, 1e-6); the floor keeps
/// entries whose gradient is numerically zero from dominating.
pub fn grad_check(
    net: &Network,
    batch: &[(Vec<Vec<f64>>, f64)],
    per_tensor: usize,
    seed: u64,
) -> Vec<(String, f64)> {
    let (_, analytic) = net.batch_loss_grad(batch, None);
    let mut rng = seed::rng(seed);
    let mut probe = net.clone();
    let mut out = Vec::new();
    for (ti, t) in net.tensors.iter().enumerate() {
        let len = t.data.len();
        let idx: Vec<usize> = if len <= per_tensor {
            (0..len).collect()
        } else {
            rand::seq::index::sample(&mut rng, len, per_tensor).into_vec()
        };
        let mut worst: f64 = 0.0;
        for i in idx {
            let orig = t.data[i];
            probe.tensors[ti].data[i] = orig + GRAD_CHECK_STEP;
            let up = probe.batch_loss(batch);
            probe.tensors[ti].data[i] = orig - GRAD_CHECK_STEP;
            let down = probe.batch_loss(batch);
            probe.tensors[ti].data[i] = orig;
            let numeric = (up - down) / (2.0 * GRAD_CHECK_STEP);
            let a = analytic[ti][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        out.push((t.name.clone(), worst));
    }
    out
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(net: &Network, lr: f64) -> Adam {
        Adam {
            m: net.zero_grads(),
            v: net.zero_grads(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, net: &mut Network, grads: &[Vec<f64>]) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (k, t) in net.tensors.iter_mut().enumerate() {
            for (i, p) in t.data.iter_mut().enumerate() {
                let g = grads[k][i];
                let m = &mut self.m[k][i];
                let v = &mut self.v[k][i];
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Windows of `window` consecutive rows ending at each row from `window - 1` on.
pub fn windows(rows: &[Vec<f64>], window: usize) -> Vec<Vec<Vec<f64>>> {
    if rows.len() < window {
        return Vec::new();
    }
    (window - 1..rows.len()).map(|t| rows[t + 1 - window..=t].to_vec()).collect()
}

/// Trains a network from `config`'s seed. Returns the network and the mean
/// training loss of each epoch.
pub fn train_network(
    samples: &[(Vec<Vec<f64>>, f64)],
    input: usize,
    config: &LstmConfig,
    max_epochs: usize,
) -> Result<(Network, Vec<f64>)> {
    config.validate_with(max_epochs)?;
    if samples.is_empty() {
        return Err(Error::invalid("lstm training needs at least one window"));
    }
    let mut net = Network::init(config.arch(input), seed::derive(config.seed, "init"));
    let mut adam = Adam::new(&net, config.learning_rate);
    let epoch_seed = seed::derive(config.seed, "epoch");
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut rng = seed::rng(seed::derive_index(epoch_seed, epoch as u64));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch) {
            let batch: Vec<(Vec<Vec<f64>>, f64)> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let masks: Option<Vec<Masks>> = (config.dropout > 0.0).then(|| {
                batch
                    .iter()
                    .map(|(x, _)| net.dropout_masks(x.len(), config.dropout, &mut rng))
                    .collect()
            });
            let (loss, grads) = net.batch_loss_grad(&batch, masks.as_deref());
            total += loss * batch.len() as f64;
            adam.step(&mut net, &grads);
        }
        curve.push(total / samples.len() as f64);
    }
    Ok((net, curve))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub config: LstmConfig,
    pub columns: Vec<String>,
    pub network: Network,
    pub target_scaler: MinMaxScaler,
    /// Last `window - 1` encoded training rows, the lookback for the first forecast.
    pub history: Vec<Vec<f64>>,
    pub loss_curve: Vec<f64>,
}

pub fn fit_lstm(design: &Design, y: &[f64], config: &LstmConfig) -> Result<LstmModel> {
    fit_lstm_with(design, y, config, MAX_EPOCHS)
}

/// As [`fit_lstm`] with a caller-chosen epoch cap.
pub fn fit_lstm_with(design: &Design, y: &[f64], config: &LstmConfig, max_epochs: usize) -> Result<LstmModel> {
    config.validate_with(max_epochs)?;
    let n = design.n_rows();
    if y.len() != n {
        return Err(Error::invalid(format!("design has {n} rows but target has {}", y.len())));
    }
    if n <= config.window {
        return Err(Error::invalid(format!(
            "lstm needs more than {} rows, got {n}",
            config.window
        )));
    }
    if y.iter().chain(design.rows.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("lstm inputs contain non-finite values"));
    }
    let target_scaler = MinMaxScaler::fit_or_unit(y);
    let samples: Vec<(Vec<Vec<f64>>, f64)> = windows(&design.rows, config.window)
        .into_iter()
        .zip(&y[config.window - 1..])
        .map(|(w, t)| (w, target_scaler.apply(*t)))
        .collect();
    let (network, loss_curve) = train_network(&samples, design.n_cols(), config, max_epochs)?;
    Ok(LstmModel {
        config: config.clone(),
        columns: design.columns.clone(),
        network,
        target_scaler,
        history: design.rows[n + 1 - config.window..].to_vec(),
        loss_curve,
    })
}

impl LstmModel {
    /// Forecasts rows that directly follow the training span.
    pub fn predict(&self, design: &Design) -> Result<Vec<f64>> {
        design.check_columns(&self.columns)?;
        let mut rows = self.history.clone();
        rows.extend(design.rows.iter().cloned());
        Ok(windows(&rows, self.config.window)
            .iter()
            .map(|w| self.target_scaler.invert(self.network.predict(w)))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmSpace {
    pub depth: Vec<usize>,
    pub bidirectional: Vec<bool>,
    pub units: (usize, usize),
    /// Sampled log-uniformly.
    pub learning_rate: (f64, f64),
    pub dropout: (f64, f64),
    pub window: usize,
    pub epochs: usize,
}

impl Default for LstmSpace {
    fn default() -> Self {
        LstmSpace {
            depth: vec![1, 2],
            bidirectional: vec![false, true],
            units: UNITS_RANGE,
            learning_rate: LEARNING_RATE_RANGE,
            dropout: DROPOUT_RANGE,
            window: 7,
            epochs: MAX_EPOCHS,
        }
    }
}

impl LstmSpace {
    pub fn single(c: &LstmConfig) -> LstmSpace {
        LstmSpace {
            depth: vec![c.depth],
            bidirectional: vec![c.bidirectional],
            units: (c.units, c.units),
            learning_rate: (c.learning_rate, c.learning_rate),
            dropout: (c.dropout, c.dropout),
            window: c.window,
            epochs: c.epochs,
        }
    }

    pub fn is_point(&self) -> bool {
        self.depth.len() == 1
            && self.bidirectional.len() == 1
            && self.units.0 == self.units.1
            && self.learning_rate.0 == self.learning_rate.1
            && self.dropout.0 == self.dropout.1
    }

    pub fn sample(&self, seed: u64) -> LstmConfig {
        let mut rng = seed::rng(seed);
        let depth = self.depth[rng.random_range(0..self.depth.len())];
        let bidirectional = self.bidirectional[rng.random_range(0..self.bidirectional.len())];
        let units = rng.random_range(self.units.0..=self.units.1);
        let (lo, hi) = (self.learning_rate.0.ln(), self.learning_rate.1.ln());
        let learning_rate = if hi > lo { rng.random_range(lo..hi).exp() } else { self.learning_rate.0 };
        let dropout = if self.dropout.1 > self.dropout.0 {
            rng.random_range(self.dropout.0..self.dropout.1)
        } else {
            self.dropout.0
        };
        LstmConfig {
            depth,
            bidirectional,
            units,
            learning_rate,
            dropout,
            window: self.window,
            epochs: self.epochs,
            batch: BATCH_SIZE,
            seed,
        }
    }
}

pub const DEFAULT_LSTM_BUDGET: usize = 10;

/// Seeded random search scored by mean time-slice validation MAPE. A
/// single-point space or a budget of one returns its config untrained.
pub fn tune_lstm(
    design: &Design,
    y: &[f64],
    space: &LstmSpace,
    budget: usize,
    slices: &SliceSpec,
    seed: u64,
) -> Result<TuneResult<LstmConfig>> {
    if space.depth.is_empty() || space.bidirectional.is_empty() {
        return Err(Error::invalid("lstm search space is empty"));
    }
    let n_trials = if space.is_point() { 1 } else { budget.max(1) };
    let configs: Vec<LstmConfig> = (0..n_trials)
        .map(|k| space.sample(seed::derive_index(seed, k as u64)))
        .collect();
    for c in &configs {
        c.validate()?;
    }
    if configs.len() == 1 {
        return Ok(TuneResult::unscored(configs));
    }
    let splits = slices.splits(design.n_rows())?;
    let scores: Vec<Result<f64>> = configs
        .par_iter()
        .map(|cfg| {
            let mut total = 0.0;
            for (tr, va) in &splits {
                let m = fit_lstm(&design.slice(tr.clone()), &y[tr.clone()], cfg)?;
                let f = m.predict(&design.slice(va.clone()))?;
                total += mape(&y[va.clone()], &f)?;
            }
            Ok(total / splits.len() as f64)
        })
        .collect();
    let trace = configs
        .into_iter()
        .zip(scores)
        .enumerate()
        .map(|(index, (config, score))| {
            Ok(TrialRecord {
                index,
                config,
                score: Some(score?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TuneResult::from_trace(trace))
}
