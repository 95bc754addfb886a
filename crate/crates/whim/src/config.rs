//! TOML configuration and the resolved settings shared by the CLI and the
//! service.
//!
//! ```toml
//! seed = 7
//! metric = "restore_minutes"
//! operator = "mean"
//! direction = "minimize"
//!
//! [ingest]
//! missing_tokens = ["", "NA", "null"]
//! numeric_threshold = 0.95
//! types = { year = "numeric" }
//!
//! [engine]
//! n_sample = 30
//! baseline = "raw"
//!
//! [compare]
//! bandwidth_multiplier = 1.5
//!
//! [service]
//! bind = "127.0.0.1:8080"
//! workers = 4
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use whim_core::engine::BaselineMode;
use whim_core::{Aggregate, ColumnKind, CompareConfig, Direction, EngineConfig, IngestOptions, ObjectiveSpec};

use crate::error::{Result, WhimError};
use crate::io::DEFAULT_MAX_ROWS;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_MAX_BODY_BYTES: usize = 100 * 1024 * 1024;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub metric: Option<String>,
    pub operator: Option<String>,
    pub direction: Option<String>,
    pub ingest: IngestSection,
    pub engine: EngineOverrides,
    pub compare: Option<CompareConfig>,
    pub service: ServiceSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub missing_tokens: Option<Vec<String>>,
    pub numeric_threshold: Option<f64>,
    pub types: BTreeMap<String, ColumnKind>,
}

/// Optional engine knobs; unset fields keep engine defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOverrides {
    pub n_sample: Option<usize>,
    pub n_unique: Option<usize>,
    pub n_buckets: Option<usize>,
    pub iterations: Option<usize>,
    pub init_points: Option<usize>,
    pub xi: Option<f64>,
    pub min_support: Option<usize>,
    pub baseline: Option<BaselineMode>,
    pub include: Option<Vec<String>>,
    pub exclude: Option<Vec<String>>,
}

impl EngineOverrides {
    /// Fields set in `other` win.
    pub fn merged(&self, other: &EngineOverrides) -> EngineOverrides {
        EngineOverrides {
            n_sample: other.n_sample.or(self.n_sample),
            n_unique: other.n_unique.or(self.n_unique),
            n_buckets: other.n_buckets.or(self.n_buckets),
            iterations: other.iterations.or(self.iterations),
            init_points: other.init_points.or(self.init_points),
            xi: other.xi.or(self.xi),
            min_support: other.min_support.or(self.min_support),
            baseline: other.baseline.or(self.baseline),
            include: other.include.clone().or_else(|| self.include.clone()),
            exclude: other.exclude.clone().or_else(|| self.exclude.clone()),
        }
    }

    pub fn apply(&self, cfg: &mut EngineConfig) {
        let o = self;
        if let Some(v) = o.n_sample {
            cfg.n_sample = v;
        }
        if let Some(v) = o.n_unique {
            cfg.n_unique = v;
        }
        if let Some(v) = o.n_buckets {
            cfg.n_buckets = v;
        }
        if let Some(v) = o.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = o.init_points {
            cfg.init_points = v;
        }
        if let Some(v) = o.xi {
            cfg.xi = v;
        }
        if let Some(v) = o.min_support {
            cfg.min_support = v;
        }
        if let Some(v) = o.baseline {
            cfg.baseline = v;
        }
        if let Some(v) = &o.include {
            cfg.include = v.clone();
        }
        if let Some(v) = &o.exclude {
            cfg.exclude = v.clone();
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: Option<String>,
    pub workers: Option<usize>,
    pub max_body_bytes: Option<usize>,
    pub max_rows: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| WhimError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| WhimError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceSettings {
    pub bind: String,
    pub workers: usize,
    pub max_body_bytes: usize,
    pub max_rows: usize,
}

/// Fully resolved settings. Requests may still override objective, seed
/// and engine knobs individually.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub ingest: IngestOptions,
    pub seed: u64,
    pub metric: Option<String>,
    pub operator: Aggregate,
    pub direction: Direction,
    pub engine: EngineOverrides,
    pub compare: CompareConfig,
    pub service: ServiceSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            ingest: IngestOptions::default(),
            seed: 0,
            metric: None,
            operator: Aggregate::Mean,
            direction: Direction::Minimize,
            engine: EngineOverrides::default(),
            compare: CompareConfig::default(),
            service: ServiceSettings {
                bind: DEFAULT_BIND.into(),
                workers: default_workers(),
                max_body_bytes: DEFAULT_MAX_BODY_BYTES,
                max_rows: DEFAULT_MAX_ROWS,
            },
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl Settings {
    pub fn from_file(file: &FileConfig) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(t) = &file.ingest.missing_tokens {
            s.ingest.missing_tokens = t.clone();
        }
        if let Some(t) = file.ingest.numeric_threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(WhimError::Config(format!("numeric_threshold {t} outside [0, 1]")));
            }
            s.ingest.numeric_threshold = t;
        }
        s.ingest.kind_overrides = file.ingest.types.iter().map(|(k, v)| (k.clone(), *v)).collect();
        s.seed = file.seed.unwrap_or(0);
        s.metric = file.metric.clone();
        if let Some(op) = &file.operator {
            s.operator = op.parse().map_err(|e: whim_core::Error| WhimError::Config(e.to_string()))?;
        }
        if let Some(d) = &file.direction {
            s.direction = d.parse().map_err(|e: whim_core::Error| WhimError::Config(e.to_string()))?;
        }
        s.engine = file.engine.clone();
        if let Some(c) = &file.compare {
            s.compare = c.clone();
        }
        let svc = &file.service;
        if let Some(b) = &svc.bind {
            s.service.bind = b.clone();
        }
        if let Some(w) = svc.workers {
            s.service.workers = w.max(1);
        }
        if let Some(b) = svc.max_body_bytes {
            s.service.max_body_bytes = b;
        }
        if let Some(r) = svc.max_rows {
            s.service.max_rows = r;
        }
        Ok(s)
    }

    /// Objective from optional per-request fields over the defaults here.
    pub fn objective(&self, args: &ObjectiveArgs) -> Result<ObjectiveSpec> {
        let metric = args
            .metric
            .clone()
            .or_else(|| self.metric.clone())
            .ok_or_else(|| WhimError::Usage("a target metric is required (--metric)".into()))?;
        let operator = match &args.operator {
            Some(op) => op.parse()?,
            None => self.operator,
        };
        let direction = match &args.direction {
            Some(d) => d.parse()?,
            None => self.direction,
        };
        Ok(ObjectiveSpec::new(metric, operator, direction))
    }

    pub fn engine_config(&self, objective: ObjectiveSpec, overrides: &EngineOverrides, seed: Option<u64>) -> EngineConfig {
        let mut cfg = EngineConfig::new(objective);
        self.engine.merged(overrides).apply(&mut cfg);
        cfg.master_seed = seed.unwrap_or(self.seed);
        cfg
    }

    pub fn n_sample(&self, requested: Option<usize>) -> usize {
        requested.or(self.engine.n_sample).unwrap_or(whim_core::resample::DEFAULT_N_SAMPLE)
    }
}

/// Objective fields as they appear in requests and on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveArgs {
    pub metric: Option<String>,
    pub operator: Option<String>,
    pub direction: Option<String>,
}
