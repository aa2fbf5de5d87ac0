//! A single LSTM cell with forget/input/output gates and a linear
//! regression head, unrolled over a window for one-step-ahead prediction.
//!
//! Per step, with `[h, x]` the concatenation of the previous hidden state
//! and the current input and `⊙` the elementwise product:
//!
//! ```text
//! z_f = σ(W_f·[h, x] + b_f)        forget gate
//! z_i = σ(W_i·[h, x] + b_i)        input gate
//! z   = tanh(W_c·[h, x] + b_c)     candidate cell
//! c'  = z_f ⊙ c + z_i ⊙ z          cell update
//! z_o = σ(W_o·[h, x] + b_o)        output gate
//! h'  = z_o ⊙ tanh(c')
//! ```
//!
//! The head maps the final hidden state to one scalar: `W_y·h + b_y`.
//! Every forward step caches the gate activations needed to run
//! backpropagation through time over the unrolled window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error, PartialEq)]
pub enum LstmError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("input window is empty")]
    EmptyWindow,
}

/// Gate weights, gate biases and the regression head.
///
/// Each gate matrix has shape `hidden_size × (hidden_size + input_size)`
/// and acts on the concatenated `[h, x]` vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
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
    pub hidden_size: usize,
    pub input_size: usize,
}

/// Hidden and cell state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl CellState {
    /// Fresh all-zero state; every window starts here.
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            h: vec![0.0; hidden_size],
            c: vec![0.0; hidden_size],
        }
    }
}

/// Everything one backward step needs: the concatenated `[h_prev, x]`
/// input, the incoming cell state, the four gate activations, and the
/// updated cell/hidden state (with `tanh(c)` kept to avoid recomputing).
#[derive(Debug, Clone, PartialEq)]
pub struct GateCache {
    pub xh: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub z_f: Vec<f64>,
    pub z_i: Vec<f64>,
    pub z: Vec<f64>,
    pub z_o: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Logistic function, computed on the non-overflowing branch for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Hyperbolic tangent (named to pair with [`sigmoid`]).
pub fn tanh_act(x: f64) -> f64 {
    x.tanh()
}

impl LstmParams {
    /// Seeded initialization: weights uniform in `[-k, k]` with
    /// `k = 1/sqrt(hidden_size)`, biases zero except the forget-gate bias,
    /// which starts at 1 so the cell path does not vanish early in
    /// training. Identical seeds produce bit-identical parameters.
    pub fn init(hidden_size: usize, input_size: usize, seed: u64) -> Self {
        assert!(hidden_size >= 1 && input_size >= 1);
        let concat = hidden_size + input_size;
        let k = 1.0 / (hidden_size as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = move || rng.random_range(-k..=k);
        Self {
            w_f: Matrix::from_fn(hidden_size, concat, |_, _| uniform()),
            w_i: Matrix::from_fn(hidden_size, concat, |_, _| uniform()),
            w_c: Matrix::from_fn(hidden_size, concat, |_, _| uniform()),
            w_o: Matrix::from_fn(hidden_size, concat, |_, _| uniform()),
            b_f: vec![1.0; hidden_size],
            b_i: vec![0.0; hidden_size],
            b_c: vec![0.0; hidden_size],
            b_o: vec![0.0; hidden_size],
            w_y: (0..hidden_size).map(|_| uniform()).collect(),
            b_y: 0.0,
            hidden_size,
            input_size,
        }
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(hidden_size: usize, input_size: usize) -> Self {
        let concat = hidden_size + input_size;
        Self {
            w_f: Matrix::zeros(hidden_size, concat),
            w_i: Matrix::zeros(hidden_size, concat),
            w_c: Matrix::zeros(hidden_size, concat),
            w_o: Matrix::zeros(hidden_size, concat),
            b_f: vec![0.0; hidden_size],
            b_i: vec![0.0; hidden_size],
            b_c: vec![0.0; hidden_size],
            b_o: vec![0.0; hidden_size],
            w_y: vec![0.0; hidden_size],
            b_y: 0.0,
            hidden_size,
            input_size,
        }
    }

    /// Checks the stated shape invariants (used on deserialized params).
    pub fn validate(&self) -> Result<(), LstmError> {
        let h = self.hidden_size;
        let concat = h + self.input_size;
        let mats = [
            ("w_f", &self.w_f),
            ("w_i", &self.w_i),
            ("w_c", &self.w_c),
            ("w_o", &self.w_o),
        ];
        for (name, m) in mats {
            if m.rows() != h || m.cols() != concat || !m.is_consistent() {
                return Err(LstmError::DimensionMismatch(format!(
                    "{name} must be finite {h}x{concat}, found {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let vecs = [
            ("b_f", &self.b_f),
            ("b_i", &self.b_i),
            ("b_c", &self.b_c),
            ("b_o", &self.b_o),
            ("w_y", &self.w_y),
        ];
        for (name, v) in vecs {
            if v.len() != h || !v.iter().all(|x| x.is_finite()) {
                return Err(LstmError::DimensionMismatch(format!(
                    "{name} must be finite with length {h}, found length {}",
                    v.len()
                )));
            }
        }
        if !self.b_y.is_finite() {
            return Err(LstmError::DimensionMismatch("b_y is not finite".into()));
        }
        Ok(())
    }
}

/// One gate pre-activation: `W·[h_prev, x] + b`, then the activation.
fn gate(w: &Matrix, b: &[f64], xh: &[f64], act: fn(f64) -> f64) -> Vec<f64> {
    let mut out = w.matvec(xh);
    for (o, &bias) in out.iter_mut().zip(b) {
        *o = act(*o + bias);
    }
    out
}

/// Advances the cell by one step and returns the new state plus the cache
/// for the backward pass.
pub fn cell_forward(
    params: &LstmParams,
    x: &[f64],
    prev: &CellState,
) -> Result<(CellState, GateCache), LstmError> {
    if x.len() != params.input_size {
        return Err(LstmError::DimensionMismatch(format!(
            "input has length {}, expected {}",
            x.len(),
            params.input_size
        )));
    }
    if prev.h.len() != params.hidden_size || prev.c.len() != params.hidden_size {
        return Err(LstmError::DimensionMismatch(format!(
            "state has lengths h={} c={}, expected {}",
            prev.h.len(),
            prev.c.len(),
            params.hidden_size
        )));
    }

    let mut xh = Vec::with_capacity(prev.h.len() + x.len());
    xh.extend_from_slice(&prev.h);
    xh.extend_from_slice(x);

    let z_f = gate(&params.w_f, &params.b_f, &xh, sigmoid);
    let z_i = gate(&params.w_i, &params.b_i, &xh, sigmoid);
    let z = gate(&params.w_c, &params.b_c, &xh, tanh_act);
    let z_o = gate(&params.w_o, &params.b_o, &xh, sigmoid);

    let c: Vec<f64> = (0..params.hidden_size)
        .map(|j| z_f[j] * prev.c[j] + z_i[j] * z[j])
        .collect();
    let tanh_c: Vec<f64> = c.iter().map(|&v| tanh_act(v)).collect();
    let h: Vec<f64> = (0..params.hidden_size)
        .map(|j| z_o[j] * tanh_c[j])
        .collect();

    let next = CellState {
        h: h.clone(),
        c: c.clone(),
    };
    let cache = GateCache {
        xh,
        c_prev: prev.c.clone(),
        z_f,
        z_i,
        z,
        z_o,
        c,
        tanh_c,
        h,
    };
    Ok((next, cache))
}

/// Unrolls the cell over a window (state starts at zero) and applies the
/// regression head to the final hidden state.
///
/// `window` holds the per-step inputs back to back; its length must be a
/// non-zero multiple of `input_size` (for the univariate pipeline it is
/// simply the window of scalars).
pub fn sequence_forward(
    params: &LstmParams,
    window: &[f64],
) -> Result<(f64, Vec<GateCache>), LstmError> {
    if window.is_empty() {
        return Err(LstmError::EmptyWindow);
    }
    if window.len() % params.input_size != 0 {
        return Err(LstmError::DimensionMismatch(format!(
            "window length {} is not a multiple of input size {}",
            window.len(),
            params.input_size
        )));
    }
    let mut state = CellState::zeros(params.hidden_size);
    let mut caches = Vec::with_capacity(window.len() / params.input_size);
    for x in window.chunks_exact(params.input_size) {
        let (next, cache) = cell_forward(params, x, &state)?;
        state = next;
        caches.push(cache);
    }
    let prediction = params
        .w_y
        .iter()
        .zip(&state.h)
        .map(|(w, h)| w * h)
        .sum::<f64>()
        + params.b_y;
    Ok((prediction, caches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_symmetry() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(tanh_act(0.0), 0.0);
        for x in [-7.5, -1.0, 0.3, 4.2, 20.0] {
            let s = sigmoid(-x) + sigmoid(x);
            assert!((s - 1.0).abs() < 1e-15, "sigmoid(-x)+sigmoid(x) = {s}");
        }
    }

    #[test]
    fn sigmoid_saturates_without_overflow() {
        // In extended precision σ(500) = 1 - e^-500 ≈ 1 - 7.1e-218, which
        // rounds to exactly 1.0 in f64.
        assert_eq!(sigmoid(500.0), 1.0);
        assert_eq!(sigmoid(-500.0), 0.0);
        assert!(sigmoid(709.0).is_finite());
        assert!(sigmoid(-709.0).is_finite());
    }

    #[test]
    fn zero_params_halve_the_gates() {
        let params = LstmParams::zeros(3, 1);
        let (next, cache) = cell_forward(&params, &[0.7], &CellState::zeros(3)).unwrap();
        assert!(cache.z_f.iter().all(|&v| v == 0.5));
        assert!(cache.z_i.iter().all(|&v| v == 0.5));
        assert!(cache.z_o.iter().all(|&v| v == 0.5));
        assert!(cache.z.iter().all(|&v| v == 0.0));
        assert!(next.c.iter().all(|&v| v == 0.0));
        assert!(next.h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_params_with_unit_cell_state() {
        // Hand evaluation: c = 0.5·1 + 0.5·0 = 0.5, h = 0.5·tanh(0.5).
        let params = LstmParams::zeros(1, 1);
        let prev = CellState {
            h: vec![0.0],
            c: vec![1.0],
        };
        let (next, _) = cell_forward(&params, &[0.3], &prev).unwrap();
        assert!((next.c[0] - 0.5).abs() < 1e-15);
        assert!((next.h[0] - 0.2310585786300049).abs() < 1e-12);
    }

    #[test]
    fn saturated_forget_gate_preserves_cell() {
        // z_i forced to 0 and z_f to 1 via saturating biases: the cell
        // state must carry over within sigmoid saturation tolerance.
        let mut params = LstmParams::zeros(2, 1);
        params.b_f = vec![40.0; 2];
        params.b_i = vec![-40.0; 2];
        let prev = CellState {
            h: vec![0.0; 2],
            c: vec![0.8, -0.3],
        };
        let (next, _) = cell_forward(&params, &[0.5], &prev).unwrap();
        for (a, b) in next.c.iter().zip(&prev.c) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let params = LstmParams::zeros(2, 1);
        let err = cell_forward(&params, &[0.1, 0.2], &CellState::zeros(2)).unwrap_err();
        assert!(matches!(err, LstmError::DimensionMismatch(_)));
    }

    #[test]
    fn zero_params_predict_the_bias() {
        let params = LstmParams::zeros(4, 1);
        let (pred, caches) = sequence_forward(&params, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(pred, 0.0);
        assert_eq!(caches.len(), 3);
    }

    #[test]
    fn single_step_window_equals_cell_plus_head() {
        let params = LstmParams::init(3, 1, 9);
        let (pred, _) = sequence_forward(&params, &[0.4]).unwrap();
        let (state, _) = cell_forward(&params, &[0.4], &CellState::zeros(3)).unwrap();
        let head: f64 = params.w_y.iter().zip(&state.h).map(|(w, h)| w * h).sum();
        assert_eq!(pred, head + params.b_y);
    }

    #[test]
    fn empty_window_is_rejected() {
        let params = LstmParams::zeros(2, 1);
        assert_eq!(
            sequence_forward(&params, &[]).unwrap_err(),
            LstmError::EmptyWindow
        );
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = LstmParams::init(8, 1, 77);
        let b = LstmParams::init(8, 1, 77);
        assert_eq!(a, b);
        assert_eq!(a.w_f.rows(), 8);
        assert_eq!(a.w_f.cols(), 9);
        let k = 1.0 / (8.0f64).sqrt();
        for m in [&a.w_f, &a.w_i, &a.w_c, &a.w_o] {
            assert!(m.as_slice().iter().all(|&v| (-k..=k).contains(&v)));
        }
        assert!(a.w_y.iter().all(|&v| (-k..=k).contains(&v)));
        assert!(a.b_f.iter().all(|&v| v == 1.0));
        assert!(a.b_i.iter().all(|&v| v == 0.0));
        assert_eq!(a.b_y, 0.0);
        let c = LstmParams::init(8, 1, 78);
        assert_ne!(a, c);
    }

    #[test]
    fn validate_catches_bad_shapes() {
        let mut params = LstmParams::init(4, 1, 0);
        params.validate().unwrap();
        params.b_o.pop();
        assert!(params.validate().is_err());
    }

    proptest! {
        // Gate ranges for arbitrary finite inputs: sigmoid gates in (0,1),
        // candidate in (-1,1), hidden entries in (-1,1).
        #[test]
        fn gate_ranges(seed in proptest::num::u64::ANY, x in -1.0e3f64..1.0e3) {
            let params = LstmParams::init(4, 1, seed);
            let mut state = CellState::zeros(4);
            for _ in 0..3 {
                let (next, cache) = cell_forward(&params, &[x], &state).unwrap();
                for gate in [&cache.z_f, &cache.z_i, &cache.z_o] {
                    prop_assert!(gate.iter().all(|&v| v > 0.0 && v < 1.0));
                }
                prop_assert!(cache.z.iter().all(|&v| v > -1.0 && v < 1.0));
                prop_assert!(next.h.iter().all(|&v| v > -1.0 && v < 1.0));
                state = next;
            }
        }

        // Identical params and window produce bit-identical predictions.
        #[test]
        fn forward_is_deterministic(seed in proptest::num::u64::ANY) {
            let params = LstmParams::init(5, 1, seed);
            let window = [0.1, -0.4, 0.9, 0.2];
            let (a, _) = sequence_forward(&params, &window).unwrap();
            let (b, _) = sequence_forward(&params, &window).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
