//! Min-max normalization onto [0, 1] and its exact algebraic inverse.
//!
//! The scaler is fitted on training data only; transforming values outside
//! the fitted range extrapolates linearly instead of clamping, so the
//! inverse stays exact on forecast outputs that leave the training range.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScaleError {
    #[error("cannot fit a scaler on an empty series")]
    EmptyInput,
    #[error("degenerate range: all {len} values equal {value}")]
    DegenerateRange { value: f64, len: usize },
}

/// Fitted bounds of the series being normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub x_min: f64,
    pub x_max: f64,
}

impl ScalerParams {
    /// Fits the scaler: `x_min`/`x_max` are the extrema of `values`.
    pub fn fit(values: &[f64]) -> Result<Self, ScaleError> {
        if values.is_empty() {
            return Err(ScaleError::EmptyInput);
        }
        let x_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let x_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if x_max <= x_min {
            return Err(ScaleError::DegenerateRange {
                value: x_min,
                len: values.len(),
            });
        }
        Ok(Self { x_min, x_max })
    }

    fn range(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Maps each value through `(x - x_min) / (x_max - x_min)`.
    ///
    /// Inputs inside the fitted range land in [0, 1]; out-of-range inputs
    /// extrapolate outside it.
    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        let range = self.range();
        values.iter().map(|x| (x - self.x_min) / range).collect()
    }

    /// Inverse map `x_sc * (x_max - x_min) + x_min`.
    pub fn inverse_transform(&self, scaled: &[f64]) -> Vec<f64> {
        let range = self.range();
        scaled.iter().map(|x| x * range + self.x_min).collect()
    }

    /// Scalar versions, used by the recursive forecaster.
    pub fn transform_one(&self, x: f64) -> f64 {
        (x - self.x_min) / self.range()
    }

    pub fn inverse_transform_one(&self, x_sc: f64) -> f64 {
        x_sc * self.range() + self.x_min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> ScalerParams {
        ScalerParams {
            x_min: 2.0,
            x_max: 10.0,
        }
    }

    #[test]
    fn fit_takes_extrema() {
        let p = ScalerParams::fit(&[2.0, 4.0, 10.0]).unwrap();
        assert_eq!(p.x_min, 2.0);
        assert_eq!(p.x_max, 10.0);
    }

    #[test]
    fn fit_rejects_constant_series() {
        assert_eq!(
            ScalerParams::fit(&[5.0, 5.0, 5.0]),
            Err(ScaleError::DegenerateRange {
                value: 5.0,
                len: 3
            })
        );
    }

    #[test]
    fn fit_rejects_empty_input() {
        assert_eq!(ScalerParams::fit(&[]), Err(ScaleError::EmptyInput));
    }

    #[test]
    fn boundaries_map_to_zero_and_one() {
        let p = params();
        assert_eq!(p.transform(&[2.0, 10.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn interior_point_per_definition() {
        assert_eq!(params().transform(&[4.0]), vec![0.25]);
    }

    #[test]
    fn out_of_range_extrapolates() {
        assert_eq!(params().transform(&[12.0]), vec![1.25]);
    }

    #[test]
    fn inverse_of_known_points() {
        let p = params();
        assert_eq!(p.inverse_transform(&[0.25]), vec![4.0]);
        assert_eq!(p.inverse_transform(&[0.0]), vec![2.0]);
    }

    proptest! {
        // Round trip: inverse ∘ transform is the identity within 1e-12
        // relative error.
        #[test]
        fn round_trip_identity(
            values in proptest::collection::vec(-1.0e6f64..1.0e6, 1..50),
            x_min in -1.0e3f64..0.0,
            span in 1.0e-3f64..1.0e6,
        ) {
            let p = ScalerParams { x_min, x_max: x_min + span };
            let back = p.inverse_transform(&p.transform(&values));
            for (orig, rt) in values.iter().zip(&back) {
                let tol = 1e-12 * orig.abs().max(1.0);
                prop_assert!((orig - rt).abs() <= tol, "{orig} vs {rt}");
            }
        }

        // transform is strictly monotone increasing.
        #[test]
        fn strictly_monotone(a in -1.0e6f64..1.0e6, gap in 1.0e-6f64..1.0e6) {
            let p = params();
            let out = p.transform(&[a, a + gap]);
            prop_assert!(out[0] < out[1]);
        }

        // In-range inputs stay inside [0, 1]; the argmax index is preserved.
        #[test]
        fn range_and_argmax(values in proptest::collection::vec(0.0f64..100.0, 2..40)) {
            let p = ScalerParams { x_min: 0.0, x_max: 100.0 };
            let scaled = p.transform(&values);
            prop_assert!(scaled.iter().all(|v| (0.0..=1.0).contains(v)));
            let argmax = |xs: &[f64]| {
                xs.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap()
            };
            prop_assert_eq!(argmax(&values), argmax(&scaled));
        }
    }
}
