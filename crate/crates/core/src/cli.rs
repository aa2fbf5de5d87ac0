//! Command implementations behind the `recovercast` binary: inspect,
//! train, forecast and evaluate, plus the run manifest that makes every
//! training run replayable.
//!
//! Exit-code contract (stable for scripting): 0 success, 2 data error,
//! 3 config error, 4 checkpoint error.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chart::{LineChart, Series};
use crate::checkpoint::{Checkpoint, CheckpointError, CHECKPOINT_FORMAT_VERSION};
use crate::forecast::{evaluate_holdout, forecast_horizon};
use crate::fsutil::atomic_write;
use crate::ingest::{
    aggregate_global, country_totals, parse_jhu_csv, to_daily_deltas, CumulativeSeries,
    DeltaSeries, RegionSeriesTable,
};
use crate::scaling::ScalerParams;
use crate::train::{train, TrainConfig};
use crate::window::{make_windows, split_train_test, SplitSpec};

/// Error categories mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input data (exit 2).
    Data(String),
    /// Invalid configuration or unwritable outputs (exit 3).
    Config(String),
    /// Unreadable, corrupted or incompatible checkpoints (exit 4).
    Checkpoint(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 2,
            CliError::Config(_) => 3,
            CliError::Checkpoint(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Checkpoint(msg) => write!(f, "checkpoint error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn data(err: impl fmt::Display) -> CliError {
    CliError::Data(err.to_string())
}

fn config(err: impl fmt::Display) -> CliError {
    CliError::Config(err.to_string())
}

fn checkpoint_err(err: CheckpointError) -> CliError {
    CliError::Checkpoint(err.to_string())
}

/// Echo of one training run; replaying these flags reproduces the
/// checkpoint bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub window_len: usize,
    pub hidden_size: usize,
    pub seed: u64,
    pub gradient_clip: f64,
    pub test_len: usize,
}

#[derive(Debug, Clone)]
pub struct InspectOptions {
    pub input: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub config: TrainConfig,
    pub test_len: usize,
}

#[derive(Debug, Clone)]
pub struct ForecastOptions {
    pub checkpoint: PathBuf,
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub horizon: usize,
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub checkpoint: PathBuf,
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub teacher_forcing: bool,
}

struct IngestedSeries {
    table: RegionSeriesTable,
    cumulative: CumulativeSeries,
    deltas: DeltaSeries,
}

fn read_series(input: &Path) -> Result<IngestedSeries, CliError> {
    let file = fs::File::open(input)
        .map_err(|err| CliError::Data(format!("cannot open {}: {err}", input.display())))?;
    let table = parse_jhu_csv(file).map_err(data)?;
    let cumulative = aggregate_global(&table).map_err(data)?;
    let deltas = to_daily_deltas(&cumulative).map_err(data)?;
    Ok(IngestedSeries {
        table,
        cumulative,
        deltas,
    })
}

fn ensure_output_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|err| CliError::Config(format!("cannot create {}: {err}", dir.display())))
}

fn write_output(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    atomic_write(path, contents)
        .map_err(|err| CliError::Config(format!("cannot write {}: {err}", path.display())))
}

/// Prints region count, date range and global totals, and writes the
/// per-country ranking plus the global history charts.
pub fn cmd_inspect(opts: &InspectOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let series = read_series(&opts.input)?;
    ensure_output_dir(&opts.output_dir)?;

    let first = series.table.dates.first().expect("validated non-empty");
    let last = series.table.dates.last().expect("validated non-empty");
    writeln!(out, "regions: {}", series.table.regions.len()).map_err(config)?;
    writeln!(out, "date range: {first} through {last}").map_err(config)?;
    writeln!(out, "date columns: {}", series.table.dates.len()).map_err(config)?;
    writeln!(
        out,
        "global final cumulative: {}",
        series.cumulative.values.last().expect("non-empty")
    )
    .map_err(config)?;

    let totals = country_totals(&series.table);
    writeln!(out, "top countries by final cumulative:").map_err(config)?;
    for (rank, (country, total)) in totals.iter().take(5).enumerate() {
        writeln!(out, "  {}. {country}: {total}", rank + 1).map_err(config)?;
    }

    let mut ranking = String::from("country,total\n");
    for (country, total) in &totals {
        ranking.push_str(&format!("{},{total}\n", csv_field(country)));
    }
    write_output(&opts.output_dir.join("country_totals.csv"), ranking.as_bytes())?;

    let mut cumulative_chart =
        LineChart::new("Cumulative recoveries across the globe", "persons")
            .with_dates(series.cumulative.dates.clone());
    cumulative_chart.push_series(Series::new("cumulative", series.cumulative.values.clone()));
    write_output(
        &opts.output_dir.join("global_cumulative.svg"),
        cumulative_chart.render().as_bytes(),
    )?;

    let mut daily_chart = LineChart::new("Daily recoveries across the globe", "persons/day")
        .with_dates(series.deltas.dates.clone());
    daily_chart.push_series(Series::new("daily", series.deltas.values.clone()));
    write_output(
        &opts.output_dir.join("global_daily.svg"),
        daily_chart.render().as_bytes(),
    )?;

    Ok(())
}

/// Full training pipeline: ingest → deltas → tail split → scaler fit on
/// the training head → windows → training. Writes the checkpoint, the
/// loss-history CSV and the run manifest.
pub fn cmd_train(opts: &TrainOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let series = read_series(&opts.input)?;
    ensure_output_dir(&opts.output_dir)?;
    let cfg = &opts.config;

    let (train_deltas, _) = split_train_test(
        &series.deltas.values,
        SplitSpec {
            test_len: opts.test_len,
        },
    )
    .map_err(config_split)?;
    let scaler = ScalerParams::fit(train_deltas).map_err(data)?;
    let scaled = scaler.transform(train_deltas);
    let dataset = make_windows(&scaled, cfg.window_len).map_err(|err| {
        CliError::Config(format!(
            "window of {} days does not fit the {}-day training split: {err}",
            cfg.window_len,
            train_deltas.len()
        ))
    })?;

    writeln!(
        out,
        "training on {} windows from {} training days ({} held out)",
        dataset.len(),
        train_deltas.len(),
        opts.test_len
    )
    .map_err(config)?;

    let (params, report) = train(cfg, &dataset).map_err(config)?;

    let checkpoint = Checkpoint {
        format_version: CHECKPOINT_FORMAT_VERSION,
        window_len: cfg.window_len,
        test_len: opts.test_len,
        seed: cfg.seed,
        scaler,
        base_cumulative: *series.cumulative.values.last().expect("non-empty"),
        last_date: *series.cumulative.dates.last().expect("non-empty"),
        params,
    };
    let checkpoint_path = opts.output_dir.join("checkpoint.json");
    checkpoint
        .save(&checkpoint_path)
        .map_err(|err| CliError::Config(err.to_string()))?;

    let mut losses = String::from("epoch,mean_loss\n");
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        losses.push_str(&format!("{},{loss}\n", epoch + 1));
    }
    write_output(&opts.output_dir.join("loss_history.csv"), losses.as_bytes())?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: "train".to_string(),
        input: opts.input.clone(),
        output_dir: opts.output_dir.clone(),
        checkpoint: checkpoint_path.clone(),
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        window_len: cfg.window_len,
        hidden_size: cfg.hidden_size,
        seed: cfg.seed,
        gradient_clip: cfg.gradient_clip,
        test_len: opts.test_len,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)
        .map_err(|err| CliError::Config(err.to_string()))?;
    write_output(&opts.output_dir.join("manifest.json"), manifest_json.as_bytes())?;

    match report.epoch_losses.last() {
        Some(loss) => writeln!(out, "trained {} epochs; final mean loss {loss}", report.epoch_losses.len()),
        None => writeln!(out, "no epochs requested; checkpoint equals initialization"),
    }
    .map_err(config)?;
    writeln!(out, "checkpoint: {}", checkpoint_path.display()).map_err(config)?;
    Ok(())
}

fn config_split(err: crate::window::WindowError) -> CliError {
    CliError::Config(err.to_string())
}

/// Recursive forecast beyond the end of the ingested series, written as a
/// CSV plus a combined historical/predicted chart.
pub fn cmd_forecast(opts: &ForecastOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let checkpoint = Checkpoint::load(&opts.checkpoint).map_err(checkpoint_err)?;
    let series = read_series(&opts.input)?;
    ensure_output_dir(&opts.output_dir)?;

    let scaled = checkpoint.scaler.transform(&series.deltas.values);
    if scaled.len() < checkpoint.window_len {
        return Err(CliError::Data(format!(
            "series has {} daily values; the model needs {} to seed a forecast",
            scaled.len(),
            checkpoint.window_len
        )));
    }
    let seed_window = &scaled[scaled.len() - checkpoint.window_len..];
    let anchor = *series.cumulative.values.last().expect("non-empty");
    let last_date = *series.cumulative.dates.last().expect("non-empty");

    let result = forecast_horizon(
        &checkpoint.params,
        &checkpoint.scaler,
        checkpoint.window_len,
        seed_window,
        opts.horizon,
        anchor,
        last_date,
    )
    .map_err(data)?;

    let mut csv = String::from("date,predicted_daily,predicted_cumulative\n");
    for ((date, daily), cumulative) in result.dates.iter().zip(&result.daily).zip(&result.cumulative)
    {
        csv.push_str(&format!("{date},{daily},{cumulative}\n"));
    }
    write_output(&opts.output_dir.join("forecast.csv"), csv.as_bytes())?;

    let mut dates = series.deltas.dates.clone();
    dates.extend_from_slice(&result.dates);
    let mut chart = LineChart::new(
        "Historical and predicted daily recoveries",
        "persons/day",
    )
    .with_dates(dates);
    chart.push_series(Series::new("historical", series.deltas.values.clone()));
    chart.push_series(Series::starting_at(
        "predicted",
        series.deltas.values.len(),
        result.daily.clone(),
    ));
    write_output(&opts.output_dir.join("forecast.svg"), chart.render().as_bytes())?;

    writeln!(out, "forecast horizon: {} days", opts.horizon).map_err(config)?;
    let negative = result.daily.iter().filter(|&&v| v < 0.0).count();
    if negative > 0 {
        writeln!(
            out,
            "warning: {negative} of {} predicted daily values are negative",
            result.daily.len()
        )
        .map_err(config)?;
    }
    if let (Some(first), Some(last)) = (result.dates.first(), result.dates.last()) {
        writeln!(out, "dates: {first} through {last}").map_err(config)?;
    }
    Ok(())
}

/// Holdout evaluation against the tail recorded in the checkpoint; prints
/// RMSE/MAE and writes the per-day comparison plus an overlay chart.
pub fn cmd_evaluate(opts: &EvaluateOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let checkpoint = Checkpoint::load(&opts.checkpoint).map_err(checkpoint_err)?;
    if checkpoint.test_len == 0 {
        return Err(CliError::Checkpoint(
            "checkpoint records no holdout split (test_len is 0)".into(),
        ));
    }
    let series = read_series(&opts.input)?;
    ensure_output_dir(&opts.output_dir)?;

    let deltas = &series.deltas.values;
    let (train_deltas, test_deltas) = split_train_test(
        deltas,
        SplitSpec {
            test_len: checkpoint.test_len,
        },
    )
    .map_err(|err| CliError::Data(err.to_string()))?;
    let scaled_train = checkpoint.scaler.transform(train_deltas);
    if scaled_train.len() < checkpoint.window_len {
        return Err(CliError::Data(format!(
            "training split has {} values; the model needs {}",
            scaled_train.len(),
            checkpoint.window_len
        )));
    }
    let tail = &scaled_train[scaled_train.len() - checkpoint.window_len..];

    let eval = evaluate_holdout(
        &checkpoint.params,
        &checkpoint.scaler,
        checkpoint.window_len,
        tail,
        test_deltas,
        opts.teacher_forcing,
    )
    .map_err(data)?;

    writeln!(out, "holdout days: {}", test_deltas.len()).map_err(config)?;
    writeln!(
        out,
        "mode: {}",
        if opts.teacher_forcing {
            "teacher forcing"
        } else {
            "recursive"
        }
    )
    .map_err(config)?;
    writeln!(out, "rmse: {}", eval.rmse).map_err(config)?;
    writeln!(out, "mae: {}", eval.mae).map_err(config)?;

    let test_dates = &series.deltas.dates[deltas.len() - checkpoint.test_len..];
    let mut csv = String::from("date,observed,predicted,error\n");
    for ((date, observed), predicted) in
        test_dates.iter().zip(test_deltas).zip(&eval.predicted_daily)
    {
        csv.push_str(&format!("{date},{observed},{predicted},{}\n", predicted - observed));
    }
    write_output(&opts.output_dir.join("evaluation.csv"), csv.as_bytes())?;

    let mut chart = LineChart::new(
        "Historical, real and predicted daily recoveries",
        "persons/day",
    )
    .with_dates(series.deltas.dates.clone());
    chart.push_series(Series::new("historical", train_deltas.to_vec()));
    chart.push_series(Series::starting_at(
        "real",
        train_deltas.len(),
        test_deltas.to_vec(),
    ));
    chart.push_series(Series::starting_at(
        "predicted",
        train_deltas.len(),
        eval.predicted_daily.clone(),
    ));
    write_output(&opts.output_dir.join("evaluation.svg"), chart.render().as_bytes())?;

    Ok(())
}

/// Quotes a CSV field when it contains the delimiter or quotes.
fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}
