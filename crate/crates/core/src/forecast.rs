//! Recursive multi-step forecasting: each one-step prediction is fed back
//! as the newest window entry, then the scaled predictions are mapped back
//! to persons/day and accumulated onto the cumulative axis.

use chrono::NaiveDate;
use thiserror::Error;

use crate::lstm::{sequence_forward, LstmError, LstmParams};
use crate::scaling::ScalerParams;

#[derive(Debug, Error, PartialEq)]
pub enum ForecastError {
    #[error("window has {found} values, model expects {expected}")]
    WindowLengthMismatch { expected: usize, found: usize },
    #[error("holdout series is empty")]
    EmptyTest,
    #[error(transparent)]
    Lstm(#[from] LstmError),
}

/// Horizon-length daily predictions plus the reconstructed cumulative
/// curve, anchored at the last observed cumulative value.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub dates: Vec<NaiveDate>,
    pub daily: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// Holdout comparison in persons/day.
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutEval {
    pub predicted_daily: Vec<f64>,
    pub rmse: f64,
    pub mae: f64,
}

/// One-step prediction on an already-scaled window. Pure delegation to the
/// unrolled forward pass after checking the window length against the
/// model's declared `window_len`.
pub fn predict_next(
    params: &LstmParams,
    window_len: usize,
    scaled_window: &[f64],
) -> Result<f64, ForecastError> {
    if scaled_window.len() != window_len {
        return Err(ForecastError::WindowLengthMismatch {
            expected: window_len,
            found: scaled_window.len(),
        });
    }
    let (prediction, _) = sequence_forward(params, scaled_window)?;
    Ok(prediction)
}

/// Iterated one-step forecasting over `horizon` days.
///
/// Each prediction is appended to the sliding window (oldest entry
/// dropped); afterwards the scaled predictions are inverse-transformed to
/// persons/day and prefix-summed from `anchor` onto the cumulative axis.
/// Dates continue day by day after `last_date`.
pub fn forecast_horizon(
    params: &LstmParams,
    scaler: &ScalerParams,
    window_len: usize,
    seed_window: &[f64],
    horizon: usize,
    anchor: f64,
    last_date: NaiveDate,
) -> Result<ForecastResult, ForecastError> {
    let scaled = recursive_predictions(params, window_len, seed_window, horizon)?;
    let daily = scaler.inverse_transform(&scaled);

    let mut running = anchor;
    let cumulative: Vec<f64> = daily
        .iter()
        .map(|d| {
            running += d;
            running
        })
        .collect();
    let dates = (1..=horizon as u64)
        .map(|offset| last_date + chrono::Days::new(offset))
        .collect();

    Ok(ForecastResult {
        dates,
        daily,
        cumulative,
    })
}

fn recursive_predictions(
    params: &LstmParams,
    window_len: usize,
    seed_window: &[f64],
    horizon: usize,
) -> Result<Vec<f64>, ForecastError> {
    if seed_window.len() != window_len {
        return Err(ForecastError::WindowLengthMismatch {
            expected: window_len,
            found: seed_window.len(),
        });
    }
    let mut window = seed_window.to_vec();
    let mut predictions = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = predict_next(params, window_len, &window)?;
        predictions.push(next);
        window.remove(0);
        window.push(next);
    }
    Ok(predictions)
}

/// Forecasts `test.len()` days from the training tail and compares the
/// inverse-scaled predictions against the observed deltas (persons/day).
///
/// With `teacher_forcing` the window slides with the scaled observations
/// instead of the model's own predictions.
pub fn evaluate_holdout(
    params: &LstmParams,
    scaler: &ScalerParams,
    window_len: usize,
    train_tail_window: &[f64],
    test: &[f64],
    teacher_forcing: bool,
) -> Result<HoldoutEval, ForecastError> {
    if test.is_empty() {
        return Err(ForecastError::EmptyTest);
    }
    let scaled = if teacher_forcing {
        let mut window = train_tail_window.to_vec();
        if window.len() != window_len {
            return Err(ForecastError::WindowLengthMismatch {
                expected: window_len,
                found: window.len(),
            });
        }
        let mut predictions = Vec::with_capacity(test.len());
        for &observed in test {
            predictions.push(predict_next(params, window_len, &window)?);
            window.remove(0);
            window.push(scaler.transform_one(observed));
        }
        predictions
    } else {
        recursive_predictions(params, window_len, train_tail_window, test.len())?
    };

    let predicted_daily = scaler.inverse_transform(&scaled);
    let n = test.len() as f64;
    let mut sq_sum = 0.0;
    let mut abs_sum = 0.0;
    for (p, t) in predicted_daily.iter().zip(test) {
        sq_sum += (p - t) * (p - t);
        abs_sum += (p - t).abs();
    }
    Ok(HoldoutEval {
        predicted_daily,
        rmse: (sq_sum / n).sqrt(),
        mae: abs_sum / n,
    })
}
