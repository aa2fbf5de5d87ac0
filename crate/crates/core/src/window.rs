//! Sliding-window supervision: tail train/test split, (window → next value)
//! pair construction, and seeded batching.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("test split of {test_len} does not fit a series of length {series_len}")]
    TestTooLarge { test_len: usize, series_len: usize },
    #[error("series of length {len} cannot produce windows of length {window_len}")]
    SeriesTooShort { len: usize, window_len: usize },
    #[error("dataset has no samples")]
    EmptyDataset,
}

/// Supervised pairs: each input holds `window_len` consecutive series
/// values and its target is the value immediately following them.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub window_len: usize,
}

impl SupervisedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Number of days held out at the series tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_len: usize,
}

/// One training batch; the final batch of an epoch may be smaller.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

/// Splits the series into `(head, tail)` with `spec.test_len` values in the
/// tail; concatenating the two halves reproduces the input exactly.
pub fn split_train_test(series: &[f64], spec: SplitSpec) -> Result<(&[f64], &[f64]), WindowError> {
    if spec.test_len >= series.len() {
        return Err(WindowError::TestTooLarge {
            test_len: spec.test_len,
            series_len: series.len(),
        });
    }
    Ok(series.split_at(series.len() - spec.test_len))
}

/// Builds the `len(series) - window_len` sliding-window pairs.
///
/// `window_len` must be at least 1.
pub fn make_windows(series: &[f64], window_len: usize) -> Result<SupervisedDataset, WindowError> {
    debug_assert!(window_len >= 1);
    if series.len() <= window_len {
        return Err(WindowError::SeriesTooShort {
            len: series.len(),
            window_len,
        });
    }
    let mut inputs = Vec::with_capacity(series.len() - window_len);
    let mut targets = Vec::with_capacity(series.len() - window_len);
    for pair in series.windows(window_len + 1) {
        inputs.push(pair[..window_len].to_vec());
        targets.push(pair[window_len]);
    }
    Ok(SupervisedDataset {
        inputs,
        targets,
        window_len,
    })
}

/// Partitions the dataset into batches of `batch_size` (the last may be
/// shorter). With `shuffle` off the dataset order is kept; with it on, the
/// permutation is a deterministic function of `seed`.
pub fn make_batches(
    dataset: &SupervisedDataset,
    batch_size: usize,
    shuffle: bool,
    seed: u64,
) -> Result<Vec<Batch>, WindowError> {
    debug_assert!(batch_size >= 1);
    if dataset.is_empty() {
        return Err(WindowError::EmptyDataset);
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    if shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    let batches = order
        .chunks(batch_size)
        .map(|chunk| Batch {
            inputs: chunk.iter().map(|&i| dataset.inputs[i].clone()).collect(),
            targets: chunk.iter().map(|&i| dataset.targets[i]).collect(),
        })
        .collect();
    Ok(batches)
}
