//! Mean-squared-error training by full backpropagation through time, with
//! global-norm gradient clipping, an adaptive-moment optimizer and a
//! central-difference gradient checker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lstm::{sequence_forward, LstmError, LstmParams};
use crate::matrix::Matrix;
use crate::window::{make_batches, Batch, SupervisedDataset, WindowError};

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("length mismatch: {left} predictions vs {right} targets")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error(transparent)]
    Window(#[from] WindowError),
}

/// Training hyperparameters. Epochs and batch size default to the 60/24
/// protocol; the rest are artifact defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub window_len: usize,
    pub hidden_size: usize,
    pub seed: u64,
    pub gradient_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 24,
            learning_rate: 1e-3,
            window_len: 30,
            hidden_size: 32,
            seed: 42,
            gradient_clip: 5.0,
        }
    }
}

/// One tensor per parameter tensor, same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Vec<f64>,
    pub b_i: Vec<f64>,
    pub b_c: Vec<f64>,
    pub b_o: Vec<f64>,
    pub w_y: Vec<f64>,
    pub b_y: f64,
}

impl Gradients {
    pub fn zeros_like(params: &LstmParams) -> Self {
        let h = params.hidden_size;
        let concat = h + params.input_size;
        Self {
            w_f: Matrix::zeros(h, concat),
            w_i: Matrix::zeros(h, concat),
            w_c: Matrix::zeros(h, concat),
            w_o: Matrix::zeros(h, concat),
            b_f: vec![0.0; h],
            b_i: vec![0.0; h],
            b_c: vec![0.0; h],
            b_o: vec![0.0; h],
            w_y: vec![0.0; h],
            b_y: 0.0,
        }
    }
}

/// Number of parameter tensors, counting the scalar head bias as one.
pub(crate) const TENSOR_COUNT: usize = 10;

impl LstmParams {
    pub(crate) fn tensor(&self, idx: usize) -> &[f64] {
        match idx {
            0 => self.w_f.as_slice(),
            1 => self.w_i.as_slice(),
            2 => self.w_c.as_slice(),
            3 => self.w_o.as_slice(),
            4 => &self.b_f,
            5 => &self.b_i,
            6 => &self.b_c,
            7 => &self.b_o,
            8 => &self.w_y,
            9 => std::slice::from_ref(&self.b_y),
            _ => panic!("tensor index out of range"),
        }
    }

    pub(crate) fn tensor_mut(&mut self, idx: usize) -> &mut [f64] {
        match idx {
            0 => self.w_f.as_mut_slice(),
            1 => self.w_i.as_mut_slice(),
            2 => self.w_c.as_mut_slice(),
            3 => self.w_o.as_mut_slice(),
            4 => &mut self.b_f,
            5 => &mut self.b_i,
            6 => &mut self.b_c,
            7 => &mut self.b_o,
            8 => &mut self.w_y,
            9 => std::slice::from_mut(&mut self.b_y),
            _ => panic!("tensor index out of range"),
        }
    }
}

impl Gradients {
    pub(crate) fn tensor(&self, idx: usize) -> &[f64] {
        match idx {
            0 => self.w_f.as_slice(),
            1 => self.w_i.as_slice(),
            2 => self.w_c.as_slice(),
            3 => self.w_o.as_slice(),
            4 => &self.b_f,
            5 => &self.b_i,
            6 => &self.b_c,
            7 => &self.b_o,
            8 => &self.w_y,
            9 => std::slice::from_ref(&self.b_y),
            _ => panic!("tensor index out of range"),
        }
    }

    pub(crate) fn tensor_mut(&mut self, idx: usize) -> &mut [f64] {
        match idx {
            0 => self.w_f.as_mut_slice(),
            1 => self.w_i.as_mut_slice(),
            2 => self.w_c.as_mut_slice(),
            3 => self.w_o.as_mut_slice(),
            4 => &mut self.b_f,
            5 => &mut self.b_i,
            6 => &mut self.b_c,
            7 => &mut self.b_o,
            8 => &mut self.w_y,
            9 => std::slice::from_mut(&mut self.b_y),
            _ => panic!("tensor index out of range"),
        }
    }
}

/// Adaptive-moment accumulators with the canonical constants.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OptimizerState {
    first_moment: Gradients,
    second_moment: Gradients,
    step: u64,
}

impl OptimizerState {
    pub fn new(params: &LstmParams) -> Self {
        Self {
            first_moment: Gradients::zeros_like(params),
            second_moment: Gradients::zeros_like(params),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Per-epoch mean training loss, in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Mean of squared differences.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64, TrainError> {
    if predictions.len() != targets.len() {
        return Err(TrainError::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(TrainError::EmptyInput);
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Batch MSE from forward passes only; shared by [`backward`] and the
/// finite-difference path.
fn batch_loss(params: &LstmParams, batch: &Batch) -> Result<f64, TrainError> {
    if batch.inputs.is_empty() {
        return Err(TrainError::EmptyInput);
    }
    if batch.inputs.len() != batch.targets.len() {
        return Err(TrainError::LengthMismatch {
            left: batch.inputs.len(),
            right: batch.targets.len(),
        });
    }
    let mut predictions = Vec::with_capacity(batch.inputs.len());
    for window in &batch.inputs {
        let (pred, _) = sequence_forward(params, window)?;
        predictions.push(pred);
    }
    mse_loss(&predictions, &batch.targets)
}

/// Exact analytic gradient of the batch MSE with respect to every
/// parameter tensor, via reverse-mode backpropagation through the
/// unrolled windows. Returns the batch loss alongside.
pub fn backward(params: &LstmParams, batch: &Batch) -> Result<(f64, Gradients), TrainError> {
    if batch.inputs.is_empty() {
        return Err(TrainError::EmptyInput);
    }
    if batch.inputs.len() != batch.targets.len() {
        return Err(TrainError::LengthMismatch {
            left: batch.inputs.len(),
            right: batch.targets.len(),
        });
    }

    let batch_len = batch.inputs.len() as f64;
    let mut grads = Gradients::zeros_like(params);
    let mut squared_error = 0.0;

    for (window, &target) in batch.inputs.iter().zip(&batch.targets) {
        let (prediction, caches) = sequence_forward(params, window)?;
        let err = prediction - target;
        squared_error += err * err;
        // d(batch MSE)/d(prediction) for this sample.
        let dpred = 2.0 * err / batch_len;
        accumulate_sample(params, &caches, dpred, &mut grads);
    }

    Ok((squared_error / batch_len, grads))
}

/// BPTT over one cached window, accumulating into `grads`.
fn accumulate_sample(
    params: &LstmParams,
    caches: &[crate::lstm::GateCache],
    dpred: f64,
    grads: &mut Gradients,
) {
    let hidden = params.hidden_size;
    let concat = hidden + params.input_size;

    // Head: prediction = W_y·h_last + b_y.
    let last = caches.last().expect("non-empty window");
    for (g, &h) in grads.w_y.iter_mut().zip(&last.h) {
        *g += dpred * h;
    }
    grads.b_y += dpred;

    let mut dh: Vec<f64> = params.w_y.iter().map(|w| w * dpred).collect();
    let mut dc = vec![0.0; hidden];
    let mut da_f = vec![0.0; hidden];
    let mut da_i = vec![0.0; hidden];
    let mut da_c = vec![0.0; hidden];
    let mut da_o = vec![0.0; hidden];
    let mut dxh = vec![0.0; concat];

    for cache in caches.iter().rev() {
        for j in 0..hidden {
            let tanh_c = cache.tanh_c[j];
            // h = z_o ⊙ tanh(c): split dh into the output gate and the
            // cell path, then distribute dc across the cell update
            // c = z_f ⊙ c_prev + z_i ⊙ z.
            let dz_o = dh[j] * tanh_c;
            let dc_j = dc[j] + dh[j] * cache.z_o[j] * (1.0 - tanh_c * tanh_c);
            let dz_f = dc_j * cache.c_prev[j];
            let dz_i = dc_j * cache.z[j];
            let dz = dc_j * cache.z_i[j];
            dc[j] = dc_j * cache.z_f[j];

            da_f[j] = dz_f * cache.z_f[j] * (1.0 - cache.z_f[j]);
            da_i[j] = dz_i * cache.z_i[j] * (1.0 - cache.z_i[j]);
            da_c[j] = dz * (1.0 - cache.z[j] * cache.z[j]);
            da_o[j] = dz_o * cache.z_o[j] * (1.0 - cache.z_o[j]);
        }

        grads.w_f.add_outer(&da_f, &cache.xh);
        grads.w_i.add_outer(&da_i, &cache.xh);
        grads.w_c.add_outer(&da_c, &cache.xh);
        grads.w_o.add_outer(&da_o, &cache.xh);
        for j in 0..hidden {
            grads.b_f[j] += da_f[j];
            grads.b_i[j] += da_i[j];
            grads.b_c[j] += da_c[j];
            grads.b_o[j] += da_o[j];
        }

        dxh.iter_mut().for_each(|v| *v = 0.0);
        params.w_f.transpose_matvec_acc(&da_f, &mut dxh);
        params.w_i.transpose_matvec_acc(&da_i, &mut dxh);
        params.w_c.transpose_matvec_acc(&da_c, &mut dxh);
        params.w_o.transpose_matvec_acc(&da_o, &mut dxh);
        dh.copy_from_slice(&dxh[..hidden]);
    }
}

/// Central-difference gradient of the batch loss, perturbing every
/// parameter entry by ±epsilon. Intended for small instances.
pub fn numeric_gradients(
    params: &LstmParams,
    batch: &Batch,
    epsilon: f64,
) -> Result<Gradients, TrainError> {
    let mut probe = params.clone();
    let mut numeric = Gradients::zeros_like(params);
    for idx in 0..TENSOR_COUNT {
        for entry in 0..params.tensor(idx).len() {
            let original = probe.tensor(idx)[entry];
            probe.tensor_mut(idx)[entry] = original + epsilon;
            let loss_plus = batch_loss(&probe, batch)?;
            probe.tensor_mut(idx)[entry] = original - epsilon;
            let loss_minus = batch_loss(&probe, batch)?;
            probe.tensor_mut(idx)[entry] = original;
            numeric.tensor_mut(idx)[entry] = (loss_plus - loss_minus) / (2.0 * epsilon);
        }
    }
    Ok(numeric)
}

/// Max over entries of `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn max_relative_error(a: &Gradients, b: &Gradients) -> f64 {
    let mut worst = 0.0f64;
    for idx in 0..TENSOR_COUNT {
        for (&x, &y) in a.tensor(idx).iter().zip(b.tensor(idx)) {
            let rel = (x - y).abs() / x.abs().max(y.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Compares the analytic gradient against central differences and returns
/// the max relative error over all parameter entries.
pub fn gradient_check(
    params: &LstmParams,
    batch: &Batch,
    epsilon: f64,
) -> Result<f64, TrainError> {
    let (_, analytic) = backward(params, batch)?;
    let numeric = numeric_gradients(params, batch, epsilon)?;
    Ok(max_relative_error(&analytic, &numeric))
}

/// Scales all gradients so their global L2 norm is at most `max_norm`
/// (direction preserved). Returns the pre-clip norm.
pub fn clip_gradients(grads: &mut Gradients, max_norm: f64) -> f64 {
    let mut squared = 0.0;
    for idx in 0..TENSOR_COUNT {
        squared += grads.tensor(idx).iter().map(|g| g * g).sum::<f64>();
    }
    let norm = squared.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for idx in 0..TENSOR_COUNT {
            for g in grads.tensor_mut(idx) {
                *g *= scale;
            }
        }
    }
    norm
}

/// One adaptive-moment update with bias correction; increments the step
/// counter.
pub fn optimizer_step(
    state: &mut OptimizerState,
    params: &mut LstmParams,
    grads: &Gradients,
    lr: f64,
) {
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - ADAM_BETA1.powi(t);
    let bias2 = 1.0 - ADAM_BETA2.powi(t);
    for idx in 0..TENSOR_COUNT {
        let m = state.first_moment.tensor_mut(idx);
        let v = state.second_moment.tensor_mut(idx);
        let g = grads.tensor(idx);
        let p = params.tensor_mut(idx);
        for j in 0..p.len() {
            m[j] = ADAM_BETA1 * m[j] + (1.0 - ADAM_BETA1) * g[j];
            v[j] = ADAM_BETA2 * v[j] + (1.0 - ADAM_BETA2) * g[j] * g[j];
            let m_hat = m[j] / bias1;
            let v_hat = v[j] / bias2;
            p[j] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
}

/// Runs `epochs × batches` of backward + clip + step with seeded per-epoch
/// shuffling. The whole trajectory is a pure function of
/// `(config, dataset)`; `epochs = 0` returns the untouched initialization.
pub fn train(
    config: &TrainConfig,
    dataset: &SupervisedDataset,
) -> Result<(LstmParams, TrainReport), TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut params = LstmParams::init(config.hidden_size, 1, config.seed);
    let mut optimizer = OptimizerState::new(&params);
    // Distinct stream so epoch shuffles do not replay the init draws.
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let batches = make_batches(dataset, config.batch_size, true, shuffle_rng.random())?;
        let mut weighted_loss = 0.0;
        for batch in &batches {
            let (loss, mut grads) = backward(&params, batch)?;
            clip_gradients(&mut grads, config.gradient_clip);
            optimizer_step(&mut optimizer, &mut params, &grads, config.learning_rate);
            weighted_loss += loss * batch.targets.len() as f64;
        }
        epoch_losses.push(weighted_loss / dataset.len() as f64);
    }

    Ok((params, TrainReport { epoch_losses }))
}
