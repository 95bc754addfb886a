//! Request handling shared by the CLI and the HTTP service, so both paths
//! produce identical results for identical inputs.

use serde::{Deserialize, Serialize};
use whim_core::bayesopt::{default_fractions, summarize_curve, CurveSummary};
use whim_core::engine::{BaselineMode, ProgressEvent, SweepReport};
use whim_core::resample::{resample_metric_values, Strata};
use whim_core::seed::{scenario_seed, SeedHasher};
use whim_core::stats::ComparisonReport;
use whim_core::{
    backtest, bucket_numeric, compare, marginal_curve, optimize_fraction, BacktestConfig, BacktestReport, BoConfig,
    ColumnKind, Dataset, EngineConfig, MarginalPoint, ObjectiveSpec, OptimizationResult, Scenario, ScenarioValue,
};

use crate::config::{EngineOverrides, ObjectiveArgs, Settings};
use crate::error::Result;
use crate::sweep::run_sweep;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfRequest {
    pub column: String,
    pub value: String,
    pub fraction: f64,
    #[serde(flatten)]
    pub objective: ObjectiveArgs,
    #[serde(default)]
    pub n_sample: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub baseline: Option<BaselineMode>,
    /// Multiplier on the KDE bandwidth.
    #[serde(default)]
    pub smoothing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub column: String,
    pub value: String,
    pub fraction: f64,
    pub current_fraction: f64,
    pub metric: String,
    pub operator: String,
    pub direction: String,
    pub n_sample: usize,
    pub seed: u64,
    pub baseline_mode: BaselineMode,
    #[serde(flatten)]
    pub report: ComparisonReport,
}

/// Resolves `text` in `column`, rejecting categorical labels that never
/// occur.
pub fn resolve_value(dataset: &Dataset, column: &str, text: &str) -> Result<ScenarioValue> {
    let value = dataset.resolve_value(column, text)?;
    if let ScenarioValue::Category(label) = &value {
        let levels = dataset.column(column)?.levels().unwrap_or_default();
        if levels.binary_search(label).is_err() {
            return Err(whim_core::Error::UnknownValue {
                column: column.into(),
                value: text.into(),
            }
            .into());
        }
    }
    Ok(value)
}

fn baseline_seed(scenario_seed: u64) -> u64 {
    SeedHasher::new(scenario_seed).write_str("baseline").finish()
}

pub fn whatif(dataset: &Dataset, req: &WhatIfRequest, settings: &Settings) -> Result<WhatIfResponse> {
    let objective = settings.objective(&req.objective)?;
    objective.validate(dataset)?;
    let value = resolve_value(dataset, &req.column, &req.value)?;
    let strata = Strata::new(dataset, &req.column, &value)?;
    let n_sample = settings.n_sample(req.n_sample);
    let master = req.seed.unwrap_or(settings.seed);
    let seed = scenario_seed(master, &req.column, &value.label());
    let scenario = Scenario::new(req.column.clone(), value.clone(), req.fraction);
    let (whatif_draws, _) = resample_metric_values(dataset, &strata, &scenario, &objective, n_sample, seed)?;

    let mode = req.baseline.or(settings.engine.baseline).unwrap_or_default();
    let baseline_draws = match mode {
        BaselineMode::Raw => vec![metric_values(dataset, &objective)?],
        BaselineMode::Bootstrap => {
            let identity = scenario.with_fraction(strata.current_fraction());
            resample_metric_values(dataset, &strata, &identity, &objective, n_sample, baseline_seed(seed))?.0
        }
    };
    let mut cfg = settings.compare.clone();
    if let Some(m) = req.smoothing {
        cfg.bandwidth_multiplier = m;
    }
    let report = compare(&baseline_draws, &whatif_draws, &objective, &cfg)?;
    Ok(WhatIfResponse {
        column: req.column.clone(),
        value: value.label(),
        fraction: req.fraction,
        current_fraction: strata.current_fraction(),
        metric: objective.metric.clone(),
        operator: objective.operator.to_string(),
        direction: objective.direction.to_string(),
        n_sample,
        seed: master,
        baseline_mode: mode,
        report,
    })
}

fn metric_values(dataset: &Dataset, objective: &ObjectiveSpec) -> Result<Vec<f64>> {
    let cells = dataset.column(&objective.metric)?.numeric().ok_or_else(|| whim_core::Error::NotNumeric(objective.metric.clone()))?;
    Ok(cells.iter().flatten().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginsRequest {
    pub column: String,
    pub value: String,
    #[serde(flatten)]
    pub objective: ObjectiveArgs,
    #[serde(default)]
    pub fractions: Option<Vec<f64>>,
    #[serde(default)]
    pub n_sample: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginsResponse {
    pub column: String,
    pub value: String,
    pub current_fraction: f64,
    pub metric: String,
    pub curve: Vec<MarginalPoint>,
    pub summary: Option<CurveSummary>,
    /// Optimizer run for the same scenario, giving `x*`.
    pub optimization: OptimizationResult,
}

pub fn margins(dataset: &Dataset, req: &MarginsRequest, settings: &Settings) -> Result<MarginsResponse> {
    let objective = settings.objective(&req.objective)?;
    objective.validate(dataset)?;
    let value = resolve_value(dataset, &req.column, &req.value)?;
    let n_sample = settings.n_sample(req.n_sample);
    let seed = scenario_seed(req.seed.unwrap_or(settings.seed), &req.column, &value.label());
    let fractions = req.fractions.clone().unwrap_or_else(default_fractions);
    let curve = marginal_curve(dataset, &req.column, &value, &objective, &fractions, n_sample, seed)?;

    let defaults = BoConfig::default();
    let bo = BoConfig {
        iterations: req.iterations.or(settings.engine.iterations).unwrap_or(defaults.iterations),
        init_points: settings.engine.init_points.unwrap_or(defaults.init_points),
        xi: settings.engine.xi.unwrap_or(defaults.xi),
        n_sample,
        seed,
    };
    let optimization = optimize_fraction(dataset, &req.column, &value, &objective, &bo)?;
    Ok(MarginsResponse {
        column: req.column.clone(),
        value: value.label(),
        current_fraction: dataset.current_fraction(&req.column, &value)?,
        metric: objective.metric,
        summary: summarize_curve(&curve),
        curve,
        optimization,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecommendRequest {
    #[serde(flatten)]
    pub objective: ObjectiveArgs,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub engine: EngineOverrides,
}

pub fn recommend(
    dataset: &Dataset,
    req: &RecommendRequest,
    settings: &Settings,
    progress: &(dyn Fn(&ProgressEvent) + Sync),
) -> Result<SweepReport> {
    run_sweep(dataset, &recommend_config(req, settings)?, progress)
}

pub fn recommend_config(req: &RecommendRequest, settings: &Settings) -> Result<EngineConfig> {
    let objective = settings.objective(&req.objective)?;
    Ok(settings.engine_config(objective, &req.engine, req.seed))
}

/// A split boundary given as a JSON number or string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplitValue {
    Number(f64),
    Text(String),
}

impl SplitValue {
    pub fn as_text(&self) -> String {
        match self {
            SplitValue::Number(x) => format!("{x}"),
            SplitValue::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRequest {
    pub time_column: String,
    pub split: SplitValue,
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    #[serde(flatten)]
    pub objective: ObjectiveArgs,
    #[serde(default)]
    pub n_sample: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Service only: run as a polled job instead of answering inline.
    #[serde(default, rename = "async")]
    pub run_async: bool,
}

pub fn run_backtest(dataset: &Dataset, req: &BacktestRequest, settings: &Settings) -> Result<BacktestReport> {
    let objective = settings.objective(&req.objective)?;
    let mut cfg = BacktestConfig::new(req.time_column.clone(), req.split.as_text(), objective);
    cfg.columns = req.columns.clone().unwrap_or_default();
    cfg.n_sample = settings.n_sample(req.n_sample);
    cfg.seed = req.seed.unwrap_or(settings.seed);
    Ok(backtest(dataset, &cfg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub kind: ColumnKind,
    pub n_unique: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueInfo {
    pub label: String,
    pub count: usize,
    pub current_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDetail {
    #[serde(flatten)]
    pub summary: ColumnSummary,
    /// True when values are quantile buckets rather than raw values.
    pub bucketed: bool,
    pub values: Vec<ValueInfo>,
}

pub fn column_summaries(dataset: &Dataset) -> Vec<ColumnSummary> {
    dataset
        .columns()
        .iter()
        .map(|c| ColumnSummary {
            name: c.name().into(),
            kind: c.kind(),
            n_unique: c.distinct_count(),
            missing: c.spec().missing_count,
        })
        .collect()
}

/// Scenario values per column as the sweep would enumerate them, with
/// their counts and current fractions.
pub fn column_details(dataset: &Dataset, settings: &Settings) -> Result<Vec<ColumnDetail>> {
    let n_unique = settings.engine.n_unique.unwrap_or(20);
    let n_buckets = settings.engine.n_buckets.unwrap_or(10);
    let n = dataset.n_rows() as f64;
    column_summaries(dataset)
        .into_iter()
        .map(|summary| {
            let col = dataset.column(&summary.name)?;
            let bucketed = summary.kind == ColumnKind::Numeric && summary.n_unique > n_unique;
            let mut values: Vec<ScenarioValue> = match summary.kind {
                ColumnKind::Categorical => col.levels().unwrap_or_default().iter().cloned().map(ScenarioValue::Category).collect(),
                ColumnKind::Numeric if bucketed => bucket_numeric(dataset, &summary.name, n_buckets)?.into_iter().map(ScenarioValue::Range).collect(),
                ColumnKind::Numeric => col.distinct_numbers().into_iter().map(ScenarioValue::Number).collect(),
            };
            if summary.missing > 0 {
                values.push(ScenarioValue::Missing);
            }
            let values = values
                .into_iter()
                .map(|v| {
                    let count = col.match_mask(&v)?.into_iter().filter(|m| *m).count();
                    Ok(ValueInfo {
                        label: v.label(),
                        count,
                        current_fraction: count as f64 / n,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ColumnDetail { summary, bucketed, values })
        })
        .collect()
}
