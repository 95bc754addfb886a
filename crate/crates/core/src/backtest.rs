//! Historical validation of the resampling simulator.
//!
//! Rows are split on a time column into slice A (before the split) and slice
//! B (at or after it). For every swept value, slice A is resampled at the
//! fraction the value actually reached in B, and the simulated metric is
//! scored against the metric realized in B.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bucket::bucket_numeric;
use crate::dataset::{ColumnKind, Dataset};
use crate::objective::{eval_metric, ObjectiveSpec};
use crate::resample::{repeated_resample_strata, Scenario, Strata};
use crate::seed::scenario_seed;
use crate::stats::descriptive::{mean, sample_std};
use crate::value::ScenarioValue;
use crate::{Error, Result};

/// Numeric columns with more distinct values than this are bucketed.
const MAX_RAW_VALUES: usize = 20;
const N_BUCKETS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestEntry {
    pub column: String,
    pub value: String,
    pub fraction_a: f64,
    pub fraction_b: f64,
    /// Mean of the per-draw metrics on resampled slice A.
    pub simulated_metric: f64,
    /// Standard deviation of the per-draw metrics.
    pub simulated_std: f64,
    pub actual_metric: f64,
    /// `|simulated - actual| / |actual|`, or unnormalized when `actual == 0`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestSkip {
    pub column: String,
    pub value: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub time_column: String,
    pub split: String,
    /// Predicate selecting slice A, e.g. `year < 2016`.
    pub period_a: String,
    pub period_b: String,
    pub rows_a: usize,
    pub rows_b: usize,
    /// Rows left out because their time cell is missing.
    pub rows_without_time: usize,
    pub entries: Vec<BacktestEntry>,
    pub skipped: Vec<BacktestSkip>,
    /// Mean of the entry errors.
    pub mae: f64,
    /// Sample standard deviation of the entry errors.
    pub mae_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub time_column: String,
    /// Boundary: numeric for numeric time columns, otherwise compared as text.
    pub split: String,
    /// Columns to evaluate; empty means every column except time and metric.
    #[serde(default)]
    pub columns: Vec<String>,
    pub objective: ObjectiveSpec,
    #[serde(default = "default_n_sample")]
    pub n_sample: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_sample() -> usize {
    crate::resample::DEFAULT_N_SAMPLE
}

impl BacktestConfig {
    pub fn new(time_column: impl Into<String>, split: impl Into<String>, objective: ObjectiveSpec) -> Self {
        Self {
            time_column: time_column.into(),
            split: split.into(),
            columns: Vec::new(),
            objective,
            n_sample: default_n_sample(),
            seed: 0,
        }
    }
}

/// Row indices of slices A and B, plus the count of rows without a time.
fn split_rows(dataset: &Dataset, time_column: &str, split: &str) -> Result<(Vec<usize>, Vec<usize>, usize)> {
    let col = dataset.column(time_column)?;
    let cmp: alloc::boxed::Box<dyn Fn(usize) -> Option<Ordering>> = match col.kind() {
        ColumnKind::Numeric => {
            let boundary = split.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "time column `{time_column}` is numeric but split `{split}` is not a number"
                ))
            })?;
            let cells = col.numeric().expect("numeric column");
            alloc::boxed::Box::new(move |r| cells[r].map(|t| t.total_cmp(&boundary)))
        }
        ColumnKind::Categorical => {
            let split = split.to_string();
            alloc::boxed::Box::new(move |r| col.cell_label(r).map(|t| t.as_str().cmp(split.as_str())))
        }
    };
    let (mut a, mut b, mut none) = (Vec::new(), Vec::new(), 0);
    for r in 0..dataset.n_rows() {
        match cmp(r) {
            Some(Ordering::Less) => a.push(r),
            Some(_) => b.push(r),
            None => none += 1,
        }
    }
    Ok((a, b, none))
}

fn swept_values(dataset: &Dataset, column: &str) -> Result<Vec<ScenarioValue>> {
    let col = dataset.column(column)?;
    let mut values: Vec<ScenarioValue> = match col.kind() {
        ColumnKind::Categorical => col
            .levels()
            .unwrap_or_default()
            .iter()
            .map(|l| ScenarioValue::Category(l.clone()))
            .collect(),
        ColumnKind::Numeric if col.distinct_count() > MAX_RAW_VALUES => bucket_numeric(dataset, column, N_BUCKETS)?
            .into_iter()
            .map(ScenarioValue::Range)
            .collect(),
        ColumnKind::Numeric => col.distinct_numbers().into_iter().map(ScenarioValue::Number).collect(),
    };
    if col.spec().missing_count > 0 {
        values.push(ScenarioValue::Missing);
    }
    Ok(values)
}

/// Runs the backtest. Entries follow dataset column order, so the result
/// does not depend on the order of `config.columns`.
pub fn backtest(dataset: &Dataset, config: &BacktestConfig) -> Result<BacktestReport> {
    let obj = &config.objective;
    obj.validate(dataset)?;
    if config.n_sample == 0 {
        return Err(Error::InvalidArgument("n_sample must be >= 1".into()));
    }
    for c in &config.columns {
        dataset.column(c)?;
    }
    let (rows_a, rows_b, rows_without_time) = split_rows(dataset, &config.time_column, &config.split)?;
    if rows_a.is_empty() || rows_b.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "split `{}` leaves slice {} empty",
            config.split,
            if rows_a.is_empty() { "A" } else { "B" }
        )));
    }
    let slice_a = dataset.select_rows(&rows_a)?;
    let slice_b = dataset.select_rows(&rows_b)?;
    let actual_metric = eval_metric(&slice_b, obj)?;

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for col in dataset.columns() {
        let name = col.name();
        let selected = if config.columns.is_empty() {
            name != config.time_column && name != obj.metric
        } else {
            config.columns.iter().any(|c| c == name)
        };
        if !selected {
            continue;
        }
        for value in swept_values(dataset, name)? {
            let label = value.label();
            let outcome = (|| -> Result<BacktestEntry> {
                let fraction_b = slice_b.current_fraction(name, &value)?;
                let strata = Strata::new(&slice_a, name, &value)?;
                let scenario = Scenario::new(name, value.clone(), fraction_b);
                let seed = scenario_seed(config.seed, name, &label);
                let s = repeated_resample_strata(&slice_a, &strata, &scenario, obj, config.n_sample, seed)?;
                let diff = libm::fabs(s.metric_mean - actual_metric);
                Ok(BacktestEntry {
                    column: name.to_string(),
                    value: label.clone(),
                    fraction_a: strata.current_fraction(),
                    fraction_b,
                    simulated_metric: s.metric_mean,
                    simulated_std: s.metric_std,
                    actual_metric,
                    error: if actual_metric != 0.0 { diff / libm::fabs(actual_metric) } else { diff },
                })
            })();
            match outcome {
                Ok(e) => entries.push(e),
                Err(e) => skipped.push(BacktestSkip {
                    column: name.to_string(),
                    value: label,
                    reason: e.to_string(),
                }),
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Infeasible("no backtest entry could be evaluated".into()));
    }
    let errors: Vec<f64> = entries.iter().map(|e| e.error).collect();
    let t = &config.time_column;
    Ok(BacktestReport {
        period_a: format!("{t} < {}", config.split),
        period_b: format!("{t} >= {}", config.split),
        time_column: t.clone(),
        split: config.split.clone(),
        rows_a: rows_a.len(),
        rows_b: rows_b.len(),
        rows_without_time,
        mae: mean(&errors),
        mae_std: sample_std(&errors),
        entries,
        skipped,
    })
}
