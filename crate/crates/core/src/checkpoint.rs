//! Versioned, self-describing model checkpoint: parameters plus the
//! preprocessing state (scaler, window length, cumulative anchor) needed
//! to forecast without retraining.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fsutil::atomic_write;
use crate::lstm::LstmParams;
use crate::scaling::ScalerParams;

/// Current checkpoint file format.
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot read checkpoint {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write checkpoint {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("checkpoint is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported checkpoint format_version {found} (supported: {supported})")]
    Version { found: u32, supported: u32 },
    #[error("invalid checkpoint field {field}: {reason}")]
    Invalid { field: String, reason: String },
}

/// Everything `forecast` and `evaluate` need from a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub window_len: usize,
    pub test_len: usize,
    pub seed: u64,
    pub scaler: ScalerParams,
    /// Last observed cumulative value of the ingested series at train time.
    pub base_cumulative: f64,
    /// Last calendar date of the ingested series at train time.
    pub last_date: NaiveDate,
    pub params: LstmParams,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let json = serde_json::to_string_pretty(self)?;
        atomic_write(path, json.as_bytes()).map_err(|source| CheckpointError::Write {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let raw = fs::read_to_string(path).map_err(|source| CheckpointError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let checkpoint: Checkpoint = serde_json::from_str(&raw)?;
        checkpoint.validate()?;
        Ok(checkpoint)
    }

    /// Field-by-field validation so a corrupted file is reported by the
    /// field that failed rather than by a panic downstream.
    pub fn validate(&self) -> Result<(), CheckpointError> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(CheckpointError::Version {
                found: self.format_version,
                supported: CHECKPOINT_FORMAT_VERSION,
            });
        }
        if self.window_len == 0 {
            return Err(CheckpointError::Invalid {
                field: "window_len".into(),
                reason: "must be at least 1".into(),
            });
        }
        if !(self.scaler.x_max > self.scaler.x_min) {
            return Err(CheckpointError::Invalid {
                field: "scaler".into(),
                reason: format!(
                    "x_max ({}) must exceed x_min ({})",
                    self.scaler.x_max, self.scaler.x_min
                ),
            });
        }
        if !self.base_cumulative.is_finite() {
            return Err(CheckpointError::Invalid {
                field: "base_cumulative".into(),
                reason: "must be finite".into(),
            });
        }
        self.params
            .validate()
            .map_err(|err| CheckpointError::Invalid {
                field: "params".into(),
                reason: err.to_string(),
            })
    }
}
