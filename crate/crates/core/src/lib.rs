//! Core engine for data-driven what-if analysis over tabular data.
//!
//! A hypothetical scenario ("value `u` of column `c` occurs in a fraction `x`
//! of rows") is simulated by stratified bootstrap resampling of the observed
//! rows. The effect on a target metric is compared against a baseline, the
//! metric-optimal fraction is located with Gaussian-process Bayesian
//! optimization, and a full sweep over every column/value produces a ranked
//! list of recommendations.
//!
//! The crate is `no_std` and only needs `alloc`; file IO, the CLI and the HTTP
//! service live in the `whim` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod backtest;
pub mod bayesopt;
pub mod bucket;
pub mod dataset;
pub mod engine;
mod error;
pub mod gp;
pub mod objective;
pub mod resample;
pub mod seed;
pub mod stats;
pub mod value;

pub use backtest::{backtest, BacktestConfig, BacktestEntry, BacktestReport, BacktestSkip};
pub use bayesopt::{
    marginal_curve, optimize_fraction, optimize_with, summarize_curve, BoConfig, CurveSummary, Evaluation,
    MarginalPoint, OptimizationResult, ResponseShape, TracePoint,
};
pub use bucket::{bucket_numeric, Bucket};
pub use dataset::{ColumnKind, ColumnSpec, Dataset, IngestOptions, MISSING_LABEL};
pub use engine::{
    generate_hypotheses, generate_hypotheses_with_progress, rank_recommendations, BaselineMode, EngineConfig,
    ProgressEvent, Recommendation, ScenarioStatus, SkippedScenario, SweepPlan, SweepReport,
};
pub use error::{Error, ErrorClass, Result};
pub use objective::{eval_metric, eval_metric_rows, Aggregate, Direction, ObjectiveSpec};
pub use resample::{repeated_resample, resample_with_fraction, ResampleDraw, ResampleSummary, Scenario};
pub use stats::{compare, CompareConfig, ComparisonReport};
pub use value::ScenarioValue;
