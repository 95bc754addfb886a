//! Stratified bootstrap that realizes a scenario's target fraction exactly.
//!
//! Rows are split into the matching stratum (`column == value`) and its
//! complement. A draw takes `round(x * N)` rows with replacement from the
//! matching stratum and the remaining rows with replacement from the
//! complement, so every draw has the source row count `N`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::objective::{gather, ObjectiveSpec};
use crate::seed::{draw_seed, rng};
use crate::stats::descriptive::{mean, sample_std};
use crate::value::ScenarioValue;
use crate::{Error, Result};

/// Default number of draws per scenario evaluation.
pub const DEFAULT_N_SAMPLE: usize = 30;

/// "Value `value` of `column` occurs in a `fraction` of rows."
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub column: String,
    pub value: ScenarioValue,
    pub fraction: f64,
}

impl Scenario {
    pub fn new(column: impl Into<String>, value: ScenarioValue, fraction: f64) -> Self {
        Self {
            column: column.into(),
            value,
            fraction,
        }
    }

    pub fn with_fraction(&self, fraction: f64) -> Self {
        Self {
            fraction,
            ..self.clone()
        }
    }

    fn check_fraction(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::InvalidArgument(format!(
                "fraction must be in [0, 1], got {}",
                self.fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleDraw {
    pub row_indices: Vec<usize>,
    pub seed: u64,
}

/// Half-up rounding of `fraction * n`.
pub fn target_count(fraction: f64, n: usize) -> usize {
    (libm::floor(fraction * n as f64 + 0.5) as usize).min(n)
}

/// Row indices of a scenario's matching stratum and its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct Strata {
    pub matching: Vec<usize>,
    pub complement: Vec<usize>,
}

impl Strata {
    pub fn new(dataset: &Dataset, column: &str, value: &ScenarioValue) -> Result<Self> {
        let mask = dataset.column(column)?.match_mask(value)?;
        let (mut matching, mut complement) = (Vec::new(), Vec::new());
        for (i, m) in mask.into_iter().enumerate() {
            if m {
                matching.push(i);
            } else {
                complement.push(i);
            }
        }
        Ok(Self { matching, complement })
    }

    pub fn n_rows(&self) -> usize {
        self.matching.len() + self.complement.len()
    }

    pub fn current_fraction(&self) -> f64 {
        self.matching.len() as f64 / self.n_rows() as f64
    }

    /// Whether `fraction` can be realized from the available strata.
    pub fn feasible(&self, fraction: f64) -> Result<()> {
        let n = self.n_rows();
        let k = target_count(fraction, n);
        if k > 0 && self.matching.is_empty() {
            return Err(Error::Infeasible(format!(
                "fraction {fraction} needs {k} matching rows but the value never occurs"
            )));
        }
        if k < n && self.complement.is_empty() {
            return Err(Error::Infeasible(format!(
                "fraction {fraction} needs {} non-matching rows but every row matches",
                n - k
            )));
        }
        Ok(())
    }

    /// One stratified bootstrap draw of `n_rows()` indices.
    pub fn draw(&self, fraction: f64, seed: u64) -> Result<ResampleDraw> {
        self.feasible(fraction)?;
        let n = self.n_rows();
        let k = target_count(fraction, n);
        let mut r = rng(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..k {
            rows.push(self.matching[r.gen_range(0..self.matching.len())]);
        }
        for _ in k..n {
            rows.push(self.complement[r.gen_range(0..self.complement.len())]);
        }
        Ok(ResampleDraw {
            row_indices: rows,
            seed,
        })
    }
}

/// A single what-if dataset for `scenario`, deterministic in `seed`.
pub fn resample_with_fraction(dataset: &Dataset, scenario: &Scenario, seed: u64) -> Result<ResampleDraw> {
    scenario.check_fraction()?;
    Strata::new(dataset, &scenario.column, &scenario.value)?.draw(scenario.fraction, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleSummary {
    pub metric_mean: f64,
    /// Sample standard deviation across draws; 0 for a single draw.
    pub metric_std: f64,
    pub per_draw: Vec<f64>,
}

/// Evaluates the objective on `n_sample` independent draws of `scenario`.
///
/// Draw `i` uses the sub-seed `draw_seed(master_seed, scenario, i)`.
pub fn repeated_resample(
    dataset: &Dataset,
    scenario: &Scenario,
    objective: &ObjectiveSpec,
    n_sample: usize,
    master_seed: u64,
) -> Result<ResampleSummary> {
    let strata = Strata::new(dataset, &scenario.column, &scenario.value)?;
    repeated_resample_strata(dataset, &strata, scenario, objective, n_sample, master_seed)
}

/// [`repeated_resample`] with precomputed strata.
pub fn repeated_resample_strata(
    dataset: &Dataset,
    strata: &Strata,
    scenario: &Scenario,
    objective: &ObjectiveSpec,
    n_sample: usize,
    master_seed: u64,
) -> Result<ResampleSummary> {
    let mut per_draw = Vec::with_capacity(n_sample);
    for_each_draw(dataset, strata, scenario, objective, n_sample, master_seed, |mut values| {
        per_draw.push(objective.operator.apply(&mut values)?);
        Ok(())
    })?;
    Ok(ResampleSummary {
        metric_mean: mean(&per_draw),
        metric_std: sample_std(&per_draw),
        per_draw,
    })
}

/// Metric cells (missing skipped) of each draw, using the same seeds as
/// [`repeated_resample`]. Also returns the per-draw objective values.
pub fn resample_metric_values(
    dataset: &Dataset,
    strata: &Strata,
    scenario: &Scenario,
    objective: &ObjectiveSpec,
    n_sample: usize,
    master_seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut draws = Vec::with_capacity(n_sample);
    let mut per_draw = Vec::with_capacity(n_sample);
    for_each_draw(dataset, strata, scenario, objective, n_sample, master_seed, |values| {
        let mut scratch = values.clone();
        per_draw.push(objective.operator.apply(&mut scratch)?);
        draws.push(values);
        Ok(())
    })?;
    Ok((draws, per_draw))
}

fn for_each_draw(
    dataset: &Dataset,
    strata: &Strata,
    scenario: &Scenario,
    objective: &ObjectiveSpec,
    n_sample: usize,
    master_seed: u64,
    mut f: impl FnMut(Vec<f64>) -> Result<()>,
) -> Result<()> {
    if n_sample == 0 {
        return Err(Error::InvalidArgument("n_sample must be >= 1".into()));
    }
    scenario.check_fraction()?;
    objective.validate(dataset)?;
    strata.feasible(scenario.fraction)?;
    let cells = dataset.column(&objective.metric)?.numeric().expect("validated numeric");
    for i in 0..n_sample {
        let draw = strata.draw(scenario.fraction, draw_seed(master_seed, scenario, i as u64))?;
        f(gather(cells, &draw.row_indices))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TypedCells;
    use crate::objective::{Aggregate, Direction};
    use alloc::string::ToString;
    use alloc::vec;

    fn toy(n: usize, n_match: usize, metric: impl Fn(bool) -> f64) -> Dataset {
        let cat: Vec<Option<String>> = (0..n)
            .map(|i| Some(if i < n_match { "v" } else { "w" }.to_string()))
            .collect();
        let m: Vec<Option<f64>> = (0..n).map(|i| Some(metric(i < n_match))).collect();
        Dataset::from_columns(vec![
            ("c".to_string(), TypedCells::Categorical(cat)),
            ("m".to_string(), TypedCells::Numeric(m)),
        ])
        .unwrap()
    }

    fn v() -> ScenarioValue {
        ScenarioValue::Category("v".to_string())
    }

    fn count_matching(ds: &Dataset, draw: &ResampleDraw) -> usize {
        let mask = ds.column("c").unwrap().match_mask(&v()).unwrap();
        draw.row_indices.iter().filter(|&&r| mask[r]).count()
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(target_count(0.25, 10), 3);
        assert_eq!(target_count(0.3, 10), 3);
        assert_eq!(target_count(0.1, 1000), 100);
        assert_eq!(target_count(1.0, 7), 7);
        assert_eq!(target_count(0.0, 7), 0);
    }

    #[test]
    fn forced_fraction() {
        let ds = toy(10, 3, |_| 1.0);
        let draw = resample_with_fraction(&ds, &Scenario::new("c", v(), 0.5), 9).unwrap();
        assert_eq!(draw.row_indices.len(), 10);
        assert_eq!(count_matching(&ds, &draw), 5);
    }

    #[test]
    fn identity_fraction_keeps_stratum_sizes() {
        let ds = toy(10, 3, |_| 1.0);
        let x = ds.current_fraction("c", &v()).unwrap();
        let draw = resample_with_fraction(&ds, &Scenario::new("c", v(), x), 1).unwrap();
        assert_eq!(count_matching(&ds, &draw), 3);
    }

    #[test]
    fn zero_fraction_draws_only_complement() {
        let ds = toy(10, 3, |_| 1.0);
        let draw = resample_with_fraction(&ds, &Scenario::new("c", v(), 0.0), 4).unwrap();
        assert!(draw.row_indices.iter().all(|&r| r >= 3));
        assert_eq!(draw.row_indices.len(), 10);
    }

    #[test]
    fn infeasible_scenarios() {
        let ds = toy(10, 0, |_| 1.0);
        let err = resample_with_fraction(&ds, &Scenario::new("c", v(), 0.2), 0).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
        // 0.04 * 10 rounds to 0, which is feasible.
        assert!(resample_with_fraction(&ds, &Scenario::new("c", v(), 0.04), 0).is_ok());
        let all = toy(10, 10, |_| 1.0);
        assert!(matches!(
            resample_with_fraction(&all, &Scenario::new("c", v(), 0.5), 0),
            Err(Error::Infeasible(_))
        ));
        assert!(resample_with_fraction(&all, &Scenario::new("c", v(), 1.0), 0).is_ok());
        assert!(matches!(
            resample_with_fraction(&all, &Scenario::new("c", v(), 1.5), 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn deterministic_in_seed() {
        let ds = toy(50, 20, |m| if m { 3.0 } else { 1.0 });
        let s = Scenario::new("c", v(), 0.7);
        assert_eq!(resample_with_fraction(&ds, &s, 5).unwrap(), resample_with_fraction(&ds, &s, 5).unwrap());
        assert_ne!(resample_with_fraction(&ds, &s, 5).unwrap(), resample_with_fraction(&ds, &s, 6).unwrap());
    }

    #[test]
    fn single_draw_has_zero_std() {
        let ds = toy(20, 5, |m| if m { 10.0 } else { 0.0 });
        let obj = ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize);
        let s = repeated_resample(&ds, &Scenario::new("c", v(), 0.5), &obj, 1, 3).unwrap();
        assert_eq!(s.metric_std, 0.0);
        assert_eq!(s.per_draw.len(), 1);
        assert_eq!(s.metric_mean, s.per_draw[0]);
        assert_eq!(s.metric_mean, 5.0);
    }

    #[test]
    fn constant_metric_is_invariant() {
        let ds = toy(40, 13, |_| 7.0);
        let obj = ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize);
        for n_sample in [1, 2, 10] {
            for x in [0.0, 0.3, 1.0] {
                let s = repeated_resample(&ds, &Scenario::new("c", v(), x), &obj, n_sample, 11).unwrap();
                assert_eq!((s.metric_mean, s.metric_std), (7.0, 0.0));
            }
        }
    }

    #[test]
    fn zero_samples_rejected() {
        let ds = toy(10, 3, |_| 1.0);
        let obj = ObjectiveSpec::new("m", Aggregate::Mean, Direction::Minimize);
        assert!(matches!(
            repeated_resample(&ds, &Scenario::new("c", v(), 0.5), &obj, 0, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn metric_values_consistent_with_summary() {
        let ds = toy(30, 10, |m| if m { 2.0 } else { 1.0 });
        let obj = ObjectiveSpec::new("m", Aggregate::Sum, Direction::Minimize);
        let s = Scenario::new("c", v(), 0.2);
        let strata = Strata::new(&ds, "c", &s.value).unwrap();
        let summary = repeated_resample(&ds, &s, &obj, 5, 1).unwrap();
        let (draws, per_draw) = resample_metric_values(&ds, &strata, &s, &obj, 5, 1).unwrap();
        assert_eq!(per_draw, summary.per_draw);
        assert_eq!(draws.len(), 5);
        assert!(draws.iter().all(|d| d.len() == 30));
    }
}
