//! Baseline vs. what-if comparison report.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::descriptive::{mean, sorted_copy, Summary};
use super::histogram::{shared_histograms, Histograms};
use super::kde::{kde_scaled, DensityCurve, DEFAULT_GRID_POINTS};
use super::ks::{kolmogorov_p_value, ks_statistic_sorted};
use crate::objective::ObjectiveSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    /// Significance level for the KS test.
    pub alpha: f64,
    /// Multiplier on the Silverman bandwidth ("graph smoothing").
    pub bandwidth_multiplier: f64,
    pub grid_points: usize,
    /// Larger samples are thinned to this many evenly spaced order statistics
    /// before density estimation. Statistics and the KS test use all values.
    pub max_density_points: usize,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bandwidth_multiplier: 1.0,
            grid_points: DEFAULT_GRID_POINTS,
            max_density_points: 20_000,
        }
    }
}

/// Density curves; `None` when that side is degenerate (constant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Densities {
    pub baseline: Option<DensityCurve>,
    pub whatif: Option<DensityCurve>,
}

/// Histogram bin with the largest difference in relative frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Highlight {
    pub lower: f64,
    pub upper: f64,
    /// What-if share minus baseline share within the bin.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline_stats: Summary,
    pub whatif_stats: Summary,
    /// `P(m)` of the baseline (mean over baseline draws).
    pub baseline_metric: f64,
    /// `P(m)` of the scenario, the mean of its per-draw values.
    pub whatif_metric: f64,
    /// `whatif_metric - baseline_metric`.
    pub potential_gain: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub alpha: f64,
    pub significant: bool,
    pub histograms: Histograms,
    pub densities: Densities,
    pub highlight: Option<Highlight>,
}

/// Compares metric distributions. Each side is a list of draws (row-level
/// metric values); a raw baseline is a single draw of all rows.
///
/// Per-draw `P(m)` values are averaged to get each side's metric, while the
/// distribution statistics, KS test, histograms and densities use the pooled
/// row-level values.
pub fn compare(
    baseline_draws: &[Vec<f64>],
    whatif_draws: &[Vec<f64>],
    objective: &ObjectiveSpec,
    config: &CompareConfig,
) -> Result<ComparisonReport> {
    let baseline_metric = side_metric(baseline_draws, objective)?;
    let whatif_metric = side_metric(whatif_draws, objective)?;

    let base = sorted_copy(&baseline_draws.concat());
    let what = sorted_copy(&whatif_draws.concat());
    if base.iter().chain(&what).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite metric value".into()));
    }

    let ks_statistic = ks_statistic_sorted(&base, &what);
    let (na, nb) = (base.len() as f64, what.len() as f64);
    let ks_p_value = kolmogorov_p_value(na * nb / (na + nb), ks_statistic);

    let densities = Densities {
        baseline: density(&base, config)?,
        whatif: density(&what, config)?,
    };
    let histograms = shared_histograms(&base, &what);
    let highlight = largest_deviation(&histograms, na, nb);

    Ok(ComparisonReport {
        baseline_stats: Summary::from_sorted(&base),
        whatif_stats: Summary::from_sorted(&what),
        baseline_metric,
        whatif_metric,
        potential_gain: whatif_metric - baseline_metric,
        ks_statistic,
        ks_p_value,
        alpha: config.alpha,
        significant: ks_p_value < config.alpha,
        histograms,
        densities,
        highlight,
    })
}

fn side_metric(draws: &[Vec<f64>], objective: &ObjectiveSpec) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::EmptySample);
    }
    let per_draw = draws
        .iter()
        .map(|d| objective.operator.apply(&mut d.clone()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean(&per_draw))
}

fn density(sorted: &[f64], config: &CompareConfig) -> Result<Option<DensityCurve>> {
    let thinned;
    let sample = if sorted.len() > config.max_density_points && config.max_density_points >= 2 {
        let m = config.max_density_points;
        let n = sorted.len();
        thinned = (0..m).map(|i| sorted[i * (n - 1) / (m - 1)]).collect::<Vec<_>>();
        &thinned[..]
    } else {
        sorted
    };
    match kde_scaled(sample, config.grid_points, config.bandwidth_multiplier) {
        Ok(curve) => Ok(Some(curve)),
        Err(Error::Degenerate) => Ok(None),
        Err(e) => Err(e),
    }
}

fn largest_deviation(h: &Histograms, na: f64, nb: f64) -> Option<Highlight> {
    let mut best: Option<Highlight> = None;
    for (i, (b, w)) in h.baseline.iter().zip(&h.whatif).enumerate() {
        let deviation = *w as f64 / nb - *b as f64 / na;
        if deviation != 0.0 && best.is_none_or(|x| deviation.abs() > x.deviation.abs()) {
            best = Some(Highlight {
                lower: h.edges[i],
                upper: h.edges[i + 1],
                deviation,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Aggregate, Direction};
    use alloc::vec;

    fn obj(op: Aggregate) -> ObjectiveSpec {
        ObjectiveSpec::new("m", op, Direction::Minimize)
    }

    #[test]
    fn identical_sides() {
        let base = vec![vec![1.0, 2.0, 3.0, 4.0, 10.0]];
        let r = compare(&base, &base, &obj(Aggregate::Mean), &CompareConfig::default()).unwrap();
        assert_eq!(r.potential_gain, 0.0);
        assert_eq!(r.ks_statistic, 0.0);
        assert_eq!(r.ks_p_value, 1.0);
        assert!(!r.significant);
        assert!(r.highlight.is_none());
    }

    #[test]
    fn gain_is_difference_of_metrics() {
        let base = vec![vec![8.0, 12.0, 10.0]];
        let what = vec![vec![7.0, 6.0, 8.0], vec![7.0, 7.0, 7.0]];
        let r = compare(&base, &what, &obj(Aggregate::Mean), &CompareConfig::default()).unwrap();
        assert_eq!(r.baseline_metric, 10.0);
        assert_eq!(r.whatif_metric, 7.0);
        assert_eq!(r.potential_gain, -3.0);
        assert!(r.densities.whatif.is_some());
    }

    #[test]
    fn sum_uses_per_draw_metric() {
        let base = vec![vec![1.0, 1.0]];
        let what = vec![vec![2.0, 2.0], vec![2.0, 2.0]];
        let r = compare(&base, &what, &obj(Aggregate::Sum), &CompareConfig::default()).unwrap();
        assert_eq!(r.whatif_metric, 4.0);
        assert_eq!(r.potential_gain, 2.0);
        // Both sides constant: stats without densities.
        assert!(r.densities.baseline.is_none() && r.densities.whatif.is_none());
        assert_eq!(r.whatif_stats.n, 4);
    }

    #[test]
    fn shift_is_significant_and_highlighted() {
        let base: Vec<f64> = (0..400).map(|i| f64::from(i % 97)).collect();
        let what: Vec<f64> = base.iter().map(|x| x + 40.0).collect();
        let r = compare(&[base], &[what], &obj(Aggregate::Mean), &CompareConfig::default()).unwrap();
        assert!(r.significant);
        assert!(r.highlight.is_some());
        assert!((r.potential_gain - 40.0).abs() < 1e-9);
    }

    #[test]
    fn thinning_keeps_extremes() {
        let base: Vec<f64> = (0..5000).map(f64::from).collect();
        let cfg = CompareConfig {
            max_density_points: 100,
            ..CompareConfig::default()
        };
        let r = compare(core::slice::from_ref(&base), core::slice::from_ref(&base), &obj(Aggregate::Mean), &cfg).unwrap();
        let curve = r.densities.baseline.unwrap();
        assert!(curve.grid[0] < 0.0 && *curve.grid.last().unwrap() > 4999.0);
    }

    #[test]
    fn empty_side_rejected() {
        assert!(compare(&[], &[vec![1.0]], &obj(Aggregate::Mean), &CompareConfig::default()).is_err());
        assert_eq!(
            compare(&[vec![]], &[vec![1.0]], &obj(Aggregate::Mean), &CompareConfig::default()),
            Err(Error::EmptySelection)
        );
    }
}
