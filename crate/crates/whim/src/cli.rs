//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, CommandFactory, Parser, Subcommand};
use whim_core::engine::BaselineMode;

use crate::analysis::{self, BacktestRequest, MarginsRequest, RecommendRequest, SplitValue, WhatIfRequest};
use crate::config::{EngineOverrides, FileConfig, ObjectiveArgs, Settings};
use crate::error::{Result, WhimError};
use crate::io::{self, load_csv, to_json_string, write_output};

#[derive(Debug, Parser)]
#[command(name = "whim", version, about = "What-if analysis over tabular data")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Target metric column.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// Aggregation: mean, sum, median or pNN (e.g. p90).
    #[arg(long, global = true)]
    pub operator: Option<String>,
    /// minimize or maximize.
    #[arg(long, global = true)]
    pub direction: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare one scenario against the baseline.
    Whatif(WhatifArgs),
    /// Metric response over a grid of fractions, plus the optimal fraction.
    Margins(MarginsArgs),
    /// Sweep every column and value and rank the scenarios by impact.
    Recommend(RecommendArgs),
    /// Replay an observed fraction change between two time slices.
    Backtest(BacktestArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct DataArg {
    /// Input CSV with a header row.
    #[arg(long, short = 'd', value_name = "CSV")]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(long, short = 'o', value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WhatifArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[arg(long)]
    pub column: String,
    /// Category label, number, bucket label or `(missing)`.
    #[arg(long)]
    pub value: String,
    /// Target fraction in [0, 1].
    #[arg(long)]
    pub fraction: f64,
    #[arg(long)]
    pub n_sample: Option<usize>,
    #[arg(long, value_parser = parse_baseline)]
    pub baseline: Option<BaselineMode>,
    /// KDE bandwidth multiplier.
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Also write densities and histograms as CSV.
    #[arg(long, value_name = "FILE")]
    pub plot_data: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct MarginsArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[arg(long)]
    pub column: String,
    #[arg(long)]
    pub value: String,
    /// Comma-separated fractions; defaults to 0, 0.1, ..., 1.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long)]
    pub n_sample: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[arg(long)]
    pub n_sample: Option<usize>,
    /// Numeric columns with more distinct values are bucketed.
    #[arg(long)]
    pub n_unique: Option<usize>,
    #[arg(long)]
    pub n_buckets: Option<usize>,
    /// Objective evaluations per scenario.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub min_support: Option<usize>,
    #[arg(long, value_parser = parse_baseline)]
    pub baseline: Option<BaselineMode>,
    #[arg(long, value_delimiter = ',')]
    pub include: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub exclude: Option<Vec<String>>,
    /// Also write the ranked list as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Print progress events to stderr as JSON lines.
    #[arg(long)]
    pub progress: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub data: DataArg,
    #[arg(long)]
    pub time_column: String,
    /// Rows with time < split form slice A, the rest slice B.
    #[arg(long)]
    pub split: String,
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    #[arg(long)]
    pub n_sample: Option<usize>,
    /// Print a text table instead of JSON.
    #[arg(long)]
    pub table: bool,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "WHIM_BIND")]
    pub bind: Option<String>,
    /// Worker threads for analyses and sweeps.
    #[arg(long, env = "WHIM_WORKERS")]
    pub workers: Option<usize>,
}

fn parse_baseline(s: &str) -> std::result::Result<BaselineMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "raw" => Ok(BaselineMode::Raw),
        "bootstrap" => Ok(BaselineMode::Bootstrap),
        _ => Err(format!("expected raw or bootstrap, got `{s}`")),
    }
}

/// Parses `argv`, runs the command and returns the exit code. Diagnostics go
/// to stderr.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.code() == "usage" {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            e.exit_code()
        }
    }
}

fn settings(global: &GlobalArgs) -> Result<Settings> {
    let file = match &global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut s = Settings::from_file(&file)?;
    if let Some(seed) = global.seed {
        s.seed = seed;
    }
    if let Some(m) = &global.metric {
        s.metric = Some(m.clone());
    }
    if let Some(op) = &global.operator {
        s.operator = op.parse()?;
    }
    if let Some(d) = &global.direction {
        s.direction = d.parse()?;
    }
    Ok(s)
}

fn load(settings: &Settings, data: &DataArg) -> Result<whim_core::Dataset> {
    load_csv(&data.data, &settings.ingest, settings.service.max_rows)
}

/// Metric, operator and direction come from `settings`.
fn objective_defaults(settings: &Settings) -> Result<ObjectiveArgs> {
    settings.objective(&ObjectiveArgs::default())?;
    Ok(ObjectiveArgs::default())
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut settings = settings(&cli.global)?;
    match cli.command {
        Command::Whatif(a) => {
            let objective = objective_defaults(&settings)?;
            let ds = load(&settings, &a.data)?;
            let req = WhatIfRequest {
                column: a.column,
                value: a.value,
                fraction: a.fraction,
                objective,
                n_sample: a.n_sample,
                seed: None,
                baseline: a.baseline,
                smoothing: a.smoothing,
            };
            let r = analysis::whatif(&ds, &req, &settings)?;
            if let Some(p) = &a.plot_data {
                write_output(Some(p), &io::plot_data_csv(&r.report)?)?;
            }
            write_output(a.out.out.as_deref(), &to_json_string(&r)?)
        }
        Command::Margins(a) => {
            let objective = objective_defaults(&settings)?;
            let ds = load(&settings, &a.data)?;
            let req = MarginsRequest {
                column: a.column,
                value: a.value,
                objective,
                fractions: a.fractions,
                n_sample: a.n_sample,
                seed: None,
                iterations: a.iterations,
            };
            write_output(a.out.out.as_deref(), &to_json_string(&analysis::margins(&ds, &req, &settings)?)?)
        }
        Command::Recommend(a) => {
            let objective = objective_defaults(&settings)?;
            let ds = load(&settings, &a.data)?;
            let req = RecommendRequest {
                objective,
                seed: None,
                engine: EngineOverrides {
                    n_sample: a.n_sample,
                    n_unique: a.n_unique,
                    n_buckets: a.n_buckets,
                    iterations: a.iterations,
                    min_support: a.min_support,
                    baseline: a.baseline,
                    include: a.include,
                    exclude: a.exclude,
                    ..EngineOverrides::default()
                },
            };
            let stderr = Mutex::new(std::io::stderr());
            let progress = |e: &whim_core::ProgressEvent| {
                if a.progress {
                    if let Ok(line) = serde_json::to_string(e) {
                        use std::io::Write;
                        let _ = writeln!(stderr.lock().expect("stderr lock"), "{line}");
                    }
                }
            };
            let report = analysis::recommend(&ds, &req, &settings, &progress)?;
            if let Some(p) = &a.csv {
                write_output(Some(p), &io::recommendations_csv(&report.recommendations)?)?;
            }
            write_output(a.out.out.as_deref(), &to_json_string(&report)?)
        }
        Command::Backtest(a) => {
            let objective = objective_defaults(&settings)?;
            let ds = load(&settings, &a.data)?;
            let req = BacktestRequest {
                time_column: a.time_column,
                split: SplitValue::Text(a.split),
                columns: a.columns,
                objective,
                n_sample: a.n_sample,
                seed: None,
                run_async: false,
            };
            let report = analysis::run_backtest(&ds, &req, &settings)?;
            let text = if a.table { io::backtest_table(&report) } else { to_json_string(&report)? };
            write_output(a.out.out.as_deref(), &text)
        }
        Command::Serve(a) => {
            if let Some(b) = a.bind {
                settings.service.bind = b;
            }
            if let Some(w) = a.workers {
                settings.service.workers = w.max(1);
            }
            let rt = tokio::runtime::Runtime::new().map_err(|e| WhimError::io(Path::new("<runtime>"), e))?;
            rt.block_on(crate::service::serve(settings))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parse_errors_are_usage_errors() {
        let e = Cli::try_parse_from(["whim", "frobnicate"]).unwrap_err();
        assert!(e.use_stderr());
        let e = Cli::try_parse_from(["whim", "whatif", "--column", "c"]).unwrap_err();
        assert!(e.use_stderr());
        let help = Cli::try_parse_from(["whim", "--help"]).unwrap_err();
        assert!(!help.use_stderr());
    }
}
