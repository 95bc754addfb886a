//! Holistic sweep: every column and every (bucketed) value becomes a
//! scenario whose fraction is optimized, then scenarios are ranked by impact.
//!
//! Each recommendation is a one-variable counterfactual. Only the chosen
//! value's share changes; the complement keeps its internal mix.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bayesopt::{optimize_fraction, BoConfig};
use crate::bucket::bucket_numeric;
use crate::dataset::{ColumnKind, Dataset};
use crate::objective::{eval_metric, ObjectiveSpec};
use crate::resample::{resample_metric_values, Scenario, Strata, DEFAULT_N_SAMPLE};
use crate::seed::{scenario_seed, SeedHasher};
use crate::stats::descriptive::{mean, sample_std, sorted_copy};
use crate::stats::ks::{kolmogorov_p_value, ks_statistic_sorted};
use crate::value::ScenarioValue;
use crate::{Error, Result};

/// Denominator floor for relative impact.
const TINY: f64 = 1e-12;

/// How the reference distribution for a scenario is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMode {
    /// The observed rows as they are.
    #[default]
    Raw,
    /// Stratified draws at the scenario's current fraction, so baseline and
    /// what-if share the same bootstrap noise.
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub objective: ObjectiveSpec,
    #[serde(default = "default_n_sample")]
    pub n_sample: usize,
    /// Numeric columns with more distinct values than this are bucketed.
    #[serde(default = "default_n_unique")]
    pub n_unique: usize,
    #[serde(default = "default_n_buckets")]
    pub n_buckets: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_init_points")]
    pub init_points: usize,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// Columns to sweep; empty means all.
    #[serde(default)]
    pub include: Vec<String>,
    #[serde(default)]
    pub exclude: Vec<String>,
    /// Smallest matching stratum worth optimizing.
    #[serde(default = "default_min_support")]
    pub min_support: usize,
    #[serde(default)]
    pub baseline: BaselineMode,
}

fn default_n_sample() -> usize {
    DEFAULT_N_SAMPLE
}
fn default_n_unique() -> usize {
    20
}
fn default_n_buckets() -> usize {
    10
}
fn default_iterations() -> usize {
    BoConfig::default().iterations
}
fn default_init_points() -> usize {
    BoConfig::default().init_points
}
fn default_xi() -> f64 {
    BoConfig::default().xi
}
fn default_min_support() -> usize {
    5
}

impl EngineConfig {
    pub fn new(objective: ObjectiveSpec) -> Self {
        Self {
            objective,
            n_sample: default_n_sample(),
            n_unique: default_n_unique(),
            n_buckets: default_n_buckets(),
            iterations: default_iterations(),
            init_points: default_init_points(),
            xi: default_xi(),
            master_seed: 0,
            include: Vec::new(),
            exclude: Vec::new(),
            min_support: default_min_support(),
            baseline: BaselineMode::Raw,
        }
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        if self.n_unique < 2 {
            return Err(Error::InvalidArgument("n_unique must be >= 2".into()));
        }
        if self.n_buckets < 2 {
            return Err(Error::InvalidArgument("n_buckets must be >= 2".into()));
        }
        if self.n_sample == 0 || self.min_support == 0 {
            return Err(Error::InvalidArgument("n_sample and min_support must be >= 1".into()));
        }
        for name in self.include.iter().chain(&self.exclude) {
            dataset.column(name)?;
        }
        self.objective.validate(dataset)
    }

    fn bo_config(&self, seed: u64) -> BoConfig {
        BoConfig {
            iterations: self.iterations,
            init_points: self.init_points,
            xi: self.xi,
            n_sample: self.n_sample,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// 1-based position in the ranked list.
    pub rank: usize,
    /// Scenario at the optimal fraction `x*`.
    pub scenario: Scenario,
    pub value_label: String,
    pub current_fraction: f64,
    /// Rows matching the value in the source data.
    pub support: usize,
    pub baseline_metric: f64,
    /// Mean of `per_draw`.
    pub projected_metric: f64,
    pub projected_std: f64,
    /// `projected_metric - baseline_metric`.
    pub absolute_change: f64,
    pub impact: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Objective evaluations spent by the optimizer.
    pub evaluations: usize,
    pub per_draw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedScenario {
    pub column: String,
    pub value: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum ScenarioStatus {
    Done { impact: f64 },
    Skipped { reason: String },
}

/// Emitted once per finished scenario. With parallel evaluation events may
/// arrive out of `index` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressEvent {
    pub index: usize,
    pub total: usize,
    pub column: String,
    pub value: String,
    #[serde(flatten)]
    pub status: ScenarioStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub baseline_metric: f64,
    pub recommendations: Vec<Recommendation>,
    pub skipped: Vec<SkippedScenario>,
    /// Scenarios that produced a recommendation.
    pub attempted: usize,
    /// All enumerated scenarios: `attempted + skipped.len()`.
    pub enumerated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedScenario {
    pub column: String,
    pub value: ScenarioValue,
    pub label: String,
}

pub type ScenarioOutcome = core::result::Result<Recommendation, SkippedScenario>;

/// Enumerated scenarios plus shared baseline state. Scenarios can be
/// evaluated independently and in any order.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    config: EngineConfig,
    scenarios: Vec<PlannedScenario>,
    baseline_metric: f64,
    /// Sorted observed metric values, used by [`BaselineMode::Raw`].
    baseline_values: Vec<f64>,
}

impl SweepPlan {
    pub fn new(dataset: &Dataset, config: &EngineConfig) -> Result<Self> {
        config.validate(dataset)?;
        let scenarios = enumerate_scenarios(dataset, config)?;
        let baseline_metric = eval_metric(dataset, &config.objective)?;
        let cells = dataset.column(&config.objective.metric)?.numeric().expect("validated numeric");
        let baseline_values = sorted_copy(&cells.iter().flatten().copied().collect::<Vec<_>>());
        Ok(Self {
            config: config.clone(),
            scenarios,
            baseline_metric,
            baseline_values,
        })
    }

    pub fn scenarios(&self) -> &[PlannedScenario] {
        &self.scenarios
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Evaluates scenario `index`. Failures become a skip entry.
    pub fn evaluate(&self, dataset: &Dataset, index: usize) -> ScenarioOutcome {
        let planned = &self.scenarios[index];
        self.evaluate_inner(dataset, planned).map_err(|reason| SkippedScenario {
            column: planned.column.clone(),
            value: planned.label.clone(),
            reason,
        })
    }

    fn evaluate_inner(&self, dataset: &Dataset, planned: &PlannedScenario) -> core::result::Result<Recommendation, String> {
        let cfg = &self.config;
        let reason = |e: Error| e.to_string();
        let strata = Strata::new(dataset, &planned.column, &planned.value).map_err(reason)?;
        let support = strata.matching.len();
        if support < cfg.min_support {
            return Err(format!("support {support} below min_support {}", cfg.min_support));
        }
        if strata.complement.is_empty() {
            return Err("value occurs in every row".to_string());
        }

        let seed = scenario_seed(cfg.master_seed, &planned.column, &planned.label);
        let opt = optimize_fraction(dataset, &planned.column, &planned.value, &cfg.objective, &cfg.bo_config(seed))
            .map_err(reason)?;
        let scenario = Scenario::new(planned.column.clone(), planned.value.clone(), opt.x_star);
        let (draws, per_draw) =
            resample_metric_values(dataset, &strata, &scenario, &cfg.objective, cfg.n_sample, seed).map_err(reason)?;
        let what = sorted_copy(&draws.concat());

        let (baseline_metric, ks_statistic, base_len) = match cfg.baseline {
            BaselineMode::Raw => (
                self.baseline_metric,
                ks_statistic_sorted(&self.baseline_values, &what),
                self.baseline_values.len(),
            ),
            BaselineMode::Bootstrap => {
                let base_seed = SeedHasher::new(seed).write_str("baseline").finish();
                let identity = scenario.with_fraction(strata.current_fraction());
                let (bd, bp) = resample_metric_values(dataset, &strata, &identity, &cfg.objective, cfg.n_sample, base_seed)
                    .map_err(reason)?;
                let base = sorted_copy(&bd.concat());
                (mean(&bp), ks_statistic_sorted(&base, &what), base.len())
            }
        };
        if base_len == 0 || what.is_empty() {
            return Err(Error::EmptySample.to_string());
        }
        let (na, nb) = (base_len as f64, what.len() as f64);
        let ks_p_value = kolmogorov_p_value(na * nb / (na + nb), ks_statistic);

        let projected_metric = mean(&per_draw);
        let absolute_change = projected_metric - baseline_metric;
        Ok(Recommendation {
            rank: 0,
            value_label: planned.label.clone(),
            current_fraction: strata.current_fraction(),
            support,
            baseline_metric,
            projected_metric,
            projected_std: sample_std(&per_draw),
            absolute_change,
            impact: impact(baseline_metric, projected_metric),
            ks_statistic,
            ks_p_value,
            evaluations: opt.iterations,
            per_draw,
            scenario,
        })
    }

    pub fn progress_event(&self, index: usize, outcome: &ScenarioOutcome) -> ProgressEvent {
        let planned = &self.scenarios[index];
        ProgressEvent {
            index,
            total: self.scenarios.len(),
            column: planned.column.clone(),
            value: planned.label.clone(),
            status: match outcome {
                Ok(r) => ScenarioStatus::Done { impact: r.impact },
                Err(s) => ScenarioStatus::Skipped {
                    reason: s.reason.clone(),
                },
            },
        }
    }

    /// Deterministic reduction of outcomes given in scenario order.
    pub fn assemble(&self, outcomes: Vec<ScenarioOutcome>) -> SweepReport {
        let enumerated = outcomes.len();
        let mut recs = Vec::new();
        let mut skipped = Vec::new();
        for o in outcomes {
            match o {
                Ok(r) => recs.push(r),
                Err(s) => skipped.push(s),
            }
        }
        let recommendations = rank_recommendations(recs);
        SweepReport {
            baseline_metric: self.baseline_metric,
            attempted: recommendations.len(),
            recommendations,
            skipped,
            enumerated,
        }
    }
}

/// Relative change, or the absolute change when the baseline is zero.
pub fn impact(baseline: f64, projected: f64) -> f64 {
    let diff = libm::fabs(projected - baseline);
    if baseline != 0.0 {
        diff / libm::fabs(baseline).max(TINY)
    } else {
        diff
    }
}

/// Columns to sweep in dataset order, and their scenario values.
///
/// Numeric columns with more than `n_unique` distinct values are bucketed;
/// others are swept by value. Columns with missing cells add a
/// `(missing)` scenario.
pub fn enumerate_scenarios(dataset: &Dataset, config: &EngineConfig) -> Result<Vec<PlannedScenario>> {
    let mut out = Vec::new();
    let mut swept = 0usize;
    for col in dataset.columns() {
        let name = col.name();
        if name == config.objective.metric
            || (!config.include.is_empty() && !config.include.iter().any(|c| c == name))
            || config.exclude.iter().any(|c| c == name)
        {
            continue;
        }
        swept += 1;
        let values: Vec<ScenarioValue> = match col.kind() {
            ColumnKind::Categorical => col
                .levels()
                .unwrap_or_default()
                .iter()
                .map(|l| ScenarioValue::Category(l.clone()))
                .collect(),
            ColumnKind::Numeric if col.distinct_count() > config.n_unique => bucket_numeric(dataset, name, config.n_buckets)?
                .into_iter()
                .map(ScenarioValue::Range)
                .collect(),
            ColumnKind::Numeric => col.distinct_numbers().into_iter().map(ScenarioValue::Number).collect(),
        };
        let missing = (col.spec().missing_count > 0).then_some(ScenarioValue::Missing);
        for value in values.into_iter().chain(missing) {
            out.push(PlannedScenario {
                column: name.to_string(),
                label: value.label(),
                value,
            });
        }
    }
    if swept == 0 {
        return Err(Error::InvalidArgument("no sweepable columns after exclusions".into()));
    }
    Ok(out)
}

/// Sequential sweep over all scenarios.
pub fn generate_hypotheses(dataset: &Dataset, config: &EngineConfig) -> Result<SweepReport> {
    generate_hypotheses_with_progress(dataset, config, |_| {})
}

pub fn generate_hypotheses_with_progress(
    dataset: &Dataset,
    config: &EngineConfig,
    mut progress: impl FnMut(&ProgressEvent),
) -> Result<SweepReport> {
    let plan = SweepPlan::new(dataset, config)?;
    let outcomes = (0..plan.len())
        .map(|i| {
            let o = plan.evaluate(dataset, i);
            progress(&plan.progress_event(i, &o));
            o
        })
        .collect();
    Ok(plan.assemble(outcomes))
}

/// Sorts by impact (descending), then |absolute change| (descending), KS p
/// (ascending), column and value label, and assigns dense ranks from 1.
pub fn rank_recommendations(mut recs: Vec<Recommendation>) -> Vec<Recommendation> {
    recs.sort_by(rank_order);
    for (i, r) in recs.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    recs
}

fn rank_order(a: &Recommendation, b: &Recommendation) -> Ordering {
    b.impact
        .total_cmp(&a.impact)
        .then_with(|| libm::fabs(b.absolute_change).total_cmp(&libm::fabs(a.absolute_change)))
        .then_with(|| a.ks_p_value.total_cmp(&b.ks_p_value))
        .then_with(|| a.scenario.column.cmp(&b.scenario.column))
        .then_with(|| a.value_label.cmp(&b.value_label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TypedCells;
    use crate::objective::{Aggregate, Direction};
    use alloc::vec;

    fn rec(column: &str, label: &str, impact: f64, change: f64, p: f64) -> Recommendation {
        Recommendation {
            rank: 0,
            scenario: Scenario::new(column, ScenarioValue::Category(label.into()), 0.5),
            value_label: label.into(),
            current_fraction: 0.5,
            support: 10,
            baseline_metric: 1.0,
            projected_metric: 1.0 + change,
            projected_std: 0.0,
            absolute_change: change,
            impact,
            ks_statistic: 0.0,
            ks_p_value: p,
            evaluations: 1,
            per_draw: vec![],
        }
    }

    fn labels(recs: &[Recommendation]) -> Vec<(String, usize)> {
        recs.iter().map(|r| (r.value_label.clone(), r.rank)).collect()
    }

    #[test]
    fn ranks_by_impact() {
        let out = rank_recommendations(vec![rec("c", "a", 0.3, 1.0, 0.5), rec("c", "b", 0.1, 1.0, 0.5), rec("c", "d", 0.2, 1.0, 0.5)]);
        assert_eq!(labels(&out), vec![("a".into(), 1), ("d".into(), 2), ("b".into(), 3)]);
    }

    #[test]
    fn ties_fall_back_to_p_then_names() {
        let out = rank_recommendations(vec![
            rec("c", "a", 0.2, 1.0, 0.3),
            rec("c", "b", 0.2, 1.0, 0.01),
            rec("c", "d", 0.2, -2.0, 0.9),
            rec("b", "z", 0.2, 1.0, 0.3),
        ]);
        assert_eq!(
            labels(&out),
            vec![("d".into(), 1), ("b".into(), 2), ("z".into(), 3), ("a".into(), 4)]
        );
        assert!(rank_recommendations(vec![]).is_empty());
    }

    #[test]
    fn impact_definition() {
        assert_eq!(impact(100.0, 80.0), 0.2);
        assert_eq!(impact(-50.0, -25.0), 0.5);
        assert_eq!(impact(0.0, 3.0), 3.0);
    }

    fn two_value() -> Dataset {
        let n = 100;
        Dataset::from_columns(vec![
            (
                "kind".into(),
                TypedCells::Categorical((0..n).map(|i| Some(if i % 2 == 0 { "A" } else { "B" }.into())).collect()),
            ),
            (
                "m".into(),
                TypedCells::Numeric((0..n).map(|i| Some(if i % 2 == 0 { 100.0 } else { 0.0 })).collect()),
            ),
        ])
        .unwrap()
    }

    #[test]
    fn two_value_closed_form() {
        let ds = two_value();
        let cfg = EngineConfig::new(ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize));
        let report = generate_hypotheses(&ds, &cfg).unwrap();
        assert_eq!(report.enumerated, 2);
        assert_eq!(report.attempted, 2);
        assert_eq!(report.baseline_metric, 50.0);
        for r in &report.recommendations {
            let x = r.scenario.fraction;
            match r.value_label.as_str() {
                "A" => assert_eq!(x, 0.0),
                "B" => assert_eq!(x, 1.0),
                _ => unreachable!(),
            }
            assert_eq!(r.projected_metric, 0.0);
            assert_eq!(r.impact, 1.0);
            assert!(r.ks_p_value < 1e-6);
        }
        assert!(report.recommendations.iter().all(|r| r.scenario.column == "kind"));
    }

    #[test]
    fn projected_metric_is_mean_of_draws() {
        let ds = two_value();
        let mut cfg = EngineConfig::new(ObjectiveSpec::new("m", Aggregate::Percentile(75.0), Direction::Maximize));
        cfg.n_sample = 7;
        cfg.baseline = BaselineMode::Bootstrap;
        let report = generate_hypotheses(&ds, &cfg).unwrap();
        for r in &report.recommendations {
            assert_eq!(r.per_draw.len(), 7);
            assert_eq!(r.projected_metric, mean(&r.per_draw));
        }
    }

    #[test]
    fn enumeration_buckets_and_missing() {
        let n = 60;
        let ds = Dataset::from_columns(vec![
            ("wide".into(), TypedCells::Numeric((0..n).map(|i| Some(i as f64)).collect())),
            ("narrow".into(), TypedCells::Numeric((0..n).map(|i| if i == 0 { None } else { Some((i % 3) as f64) }).collect())),
            ("m".into(), TypedCells::Numeric((0..n).map(|i| Some(i as f64)).collect())),
        ])
        .unwrap();
        let cfg = EngineConfig::new(ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize));
        let sc = enumerate_scenarios(&ds, &cfg).unwrap();
        let wide = sc.iter().filter(|s| s.column == "wide").count();
        let narrow: Vec<&str> = sc.iter().filter(|s| s.column == "narrow").map(|s| s.label.as_str()).collect();
        assert_eq!(wide, 10);
        assert_eq!(narrow, vec!["0", "1", "2", "(missing)"]);
        assert!(sc.iter().all(|s| s.column != "m"));

        // the single missing cell is below min_support
        let report = generate_hypotheses(&ds, &cfg).unwrap();
        assert_eq!(report.enumerated, sc.len());
        assert_eq!(report.attempted + report.skipped.len(), sc.len());
        assert!(report.skipped.iter().any(|s| s.column == "narrow" && s.value == "(missing)"));
    }

    #[test]
    fn include_exclude_and_errors() {
        let ds = two_value();
        let mut cfg = EngineConfig::new(ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize));
        cfg.exclude = vec!["kind".into()];
        assert!(matches!(generate_hypotheses(&ds, &cfg), Err(Error::InvalidArgument(_))));
        cfg.exclude = vec!["nope".into()];
        assert!(matches!(generate_hypotheses(&ds, &cfg), Err(Error::UnknownColumn(_))));
        cfg.exclude.clear();
        cfg.n_unique = 1;
        assert!(generate_hypotheses(&ds, &cfg).is_err());
    }

    #[test]
    fn constant_column_is_skipped() {
        let ds = Dataset::from_columns(vec![
            ("k".into(), TypedCells::Categorical(vec![Some("x".into()); 20])),
            ("m".into(), TypedCells::Numeric((0..20).map(|i| Some(i as f64)).collect())),
        ])
        .unwrap();
        let cfg = EngineConfig::new(ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize));
        let mut events = Vec::new();
        let report = generate_hypotheses_with_progress(&ds, &cfg, |e| events.push(e.clone())).unwrap();
        assert_eq!(report.attempted, 0);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(events.len(), 1);
        assert!(matches!(events[0].status, ScenarioStatus::Skipped { .. }));
    }
}
