//! Metric-optimal scenario fraction via GP Bayesian optimization, and
//! marginal response curves over a fraction grid.
//!
//! The loop evaluates an initial design (0, 1, the current fraction and
//! evenly spaced fill), then repeatedly fits a GP to the standardized
//! observations and evaluates the grid fraction with the highest expected
//! improvement. Maximization objectives are negated so the acquisition
//! always minimizes.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::gp::{expected_improvement_at, GpModel, Matern52};
use crate::objective::{Direction, ObjectiveSpec};
use crate::resample::{repeated_resample_strata, Scenario, Strata, DEFAULT_N_SAMPLE};
use crate::stats::descriptive::{mean, sample_std};
use crate::value::ScenarioValue;
use crate::{Dataset, Error, Result};

const LENGTH_SCALES: [f64; 5] = [0.05, 0.1, 0.2, 0.5, 1.0];
const NOISE_VARIANCES: [f64; 3] = [1e-4, 1e-2, 1e-1];
/// Candidate fractions are `k / GRID_STEPS` for `k = 0..=GRID_STEPS`.
const GRID_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoConfig {
    /// Total evaluation budget, initial design included.
    pub iterations: usize,
    pub init_points: usize,
    /// EI exploration margin, in standardized units.
    pub xi: f64,
    pub n_sample: usize,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            iterations: 15,
            init_points: 5,
            xi: 0.01,
            n_sample: DEFAULT_N_SAMPLE,
            seed: 0,
        }
    }
}

impl BoConfig {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.init_points == 0 {
            return Err(Error::InvalidArgument("iterations and init_points must be >= 1".into()));
        }
        if !(self.xi >= 0.0) {
            return Err(Error::InvalidArgument("xi must be non-negative".into()));
        }
        if self.n_sample == 0 {
            return Err(Error::InvalidArgument("n_sample must be >= 1".into()));
        }
        Ok(())
    }
}

/// Noisy observation of the objective at one fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// Standard error of `value`; enters the GP as per-point noise.
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    pub y: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFraction {
    pub x: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Best observed fraction under the objective direction.
    pub x_star: f64,
    pub f_star: f64,
    /// Evaluations in order.
    pub trace: Vec<TracePoint>,
    pub iterations: usize,
    pub skipped: Vec<SkippedFraction>,
    pub direction: Direction,
}

fn grid_index(x: f64) -> Option<usize> {
    let k = libm::round(x * GRID_STEPS as f64);
    ((x * GRID_STEPS as f64 - k).abs() < 1e-9).then_some(k as usize)
}

fn grid_point(k: usize) -> f64 {
    k as f64 / GRID_STEPS as f64
}

/// 0, 1, the current fraction, then `init_points - 3` evenly spaced interior
/// grid points. Duplicates are dropped.
pub fn initial_design(current: f64, init_points: usize) -> Vec<f64> {
    let mut design = Vec::new();
    let push = |x: f64, d: &mut Vec<f64>| {
        if !d.iter().any(|y| (y - x).abs() < 1e-12) {
            d.push(x);
        }
    };
    for x in [0.0, 1.0, current] {
        push(x, &mut design);
    }
    let fill = init_points.saturating_sub(3);
    for k in 1..=fill {
        let x = libm::round(k as f64 / (fill + 1) as f64 * GRID_STEPS as f64) / GRID_STEPS as f64;
        push(x, &mut design);
    }
    design.truncate(init_points.max(1));
    design
}

/// Runs the BO loop against an arbitrary noisy objective over `[0, 1]`.
///
/// `evaluate` returning [`Error::Infeasible`] marks the fraction as skipped;
/// any other error aborts.
pub fn optimize_with<F>(
    current: f64,
    direction: Direction,
    config: &BoConfig,
    mut evaluate: F,
) -> Result<OptimizationResult>
where
    F: FnMut(f64) -> Result<Evaluation>,
{
    config.validate()?;
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut skipped: Vec<SkippedFraction> = Vec::new();
    let mut tried = [false; GRID_STEPS + 1];

    let mut attempt = |x: f64, tried: &mut [bool], trace: &mut Vec<TracePoint>, skipped: &mut Vec<SkippedFraction>| {
        if let Some(k) = grid_index(x) {
            tried[k] = true;
        }
        match evaluate(x) {
            Ok(e) => trace.push(TracePoint {
                x,
                y: e.value,
                std_error: e.std_error,
            }),
            Err(Error::Infeasible(reason)) => skipped.push(SkippedFraction { x, reason }),
            Err(e) => return Err(e),
        }
        Ok(())
    };

    for x in initial_design(current, config.init_points) {
        if trace.len() >= config.iterations {
            break;
        }
        attempt(x, &mut tried, &mut trace, &mut skipped)?;
    }

    while trace.len() < config.iterations {
        let next = if trace.is_empty() {
            (0..=GRID_STEPS).find(|k| !tried[*k])
        } else {
            let model = fit_surrogate(&trace, direction)?;
            next_candidate(&model, &tried, config.xi)
        };
        let Some(k) = next else { break };
        attempt(grid_point(k), &mut tried, &mut trace, &mut skipped)?;
    }

    let best = trace
        .iter()
        .copied()
        .reduce(|best, p| if direction.better(p.y, best.y) { p } else { best })
        .ok_or_else(|| Error::Infeasible("no evaluated fraction was feasible".to_string()))?;

    Ok(OptimizationResult {
        x_star: best.x,
        f_star: best.y,
        iterations: trace.len(),
        trace,
        skipped,
        direction,
    })
}

/// Surrogate fitted to standardized, minimization-frame observations.
pub struct Surrogate {
    pub model: GpModel,
    /// Best standardized observation.
    pub f_best: f64,
}

/// Standardizes the trace and picks the kernel length scale and noise
/// variance maximizing the log marginal likelihood over a coarse grid.
pub fn fit_surrogate(trace: &[TracePoint], direction: Direction) -> Result<Surrogate> {
    let ys: Vec<f64> = trace.iter().map(|p| direction.to_min(p.y)).collect();
    let mu = mean(&ys);
    let sd = match sample_std(&ys) {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let xs: Vec<f64> = trace.iter().map(|p| p.x).collect();
    let zs: Vec<f64> = ys.iter().map(|y| (y - mu) / sd).collect();
    let point_noise: Vec<f64> = trace.iter().map(|p| { let r = p.std_error / sd; r * r }).collect();

    let mut best: Option<(f64, GpModel)> = None;
    for &ell in &LENGTH_SCALES {
        for &noise in &NOISE_VARIANCES {
            let Ok(m) = GpModel::fit_with_point_noise(&xs, &zs, Matern52::new(ell, 1.0), noise, &point_noise) else {
                continue;
            };
            let lml = m.log_marginal_likelihood();
            if lml.is_finite() && best.as_ref().is_none_or(|(b, _)| lml > *b) {
                best = Some((lml, m));
            }
        }
    }
    let (_, model) = best.ok_or_else(|| Error::Numerical("no hyperparameter setting could be fitted".into()))?;
    let f_best = zs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Surrogate { model, f_best })
}

fn next_candidate(s: &Surrogate, tried: &[bool], xi: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, _) in tried.iter().enumerate().filter(|(_, t)| !**t) {
        let ei = expected_improvement_at(s.model.posterior(grid_point(k)), s.f_best, xi);
        if best.is_none_or(|(_, b)| ei > b) {
            best = Some((k, ei));
        }
    }
    best.map(|(k, _)| k)
}

/// Finds the fraction of `value` in `column` that optimizes the objective,
/// evaluating each fraction as the mean of `n_sample` stratified draws.
pub fn optimize_fraction(
    dataset: &Dataset,
    column: &str,
    value: &ScenarioValue,
    objective: &ObjectiveSpec,
    config: &BoConfig,
) -> Result<OptimizationResult> {
    objective.validate(dataset)?;
    let strata = Strata::new(dataset, column, value)?;
    let scenario = Scenario::new(column, value.clone(), strata.current_fraction());
    optimize_with(strata.current_fraction(), objective.direction, config, |x| {
        strata.feasible(x)?;
        let s = repeated_resample_strata(
            dataset,
            &strata,
            &scenario.with_fraction(x),
            objective,
            config.n_sample,
            config.seed,
        )?;
        Ok(Evaluation {
            value: s.metric_mean,
            std_error: s.metric_std / libm::sqrt(config.n_sample as f64),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPoint {
    pub x: f64,
    /// `None` marks a gap at an infeasible fraction.
    pub metric_mean: Option<f64>,
    pub metric_std: Option<f64>,
}

/// `{0, 0.1, ..., 1.0}`.
pub fn default_fractions() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Objective mean and spread at each fraction of an ascending grid.
pub fn marginal_curve(
    dataset: &Dataset,
    column: &str,
    value: &ScenarioValue,
    objective: &ObjectiveSpec,
    fractions: &[f64],
    n_sample: usize,
    seed: u64,
) -> Result<Vec<MarginalPoint>> {
    if fractions.len() < 2 {
        return Err(Error::InvalidArgument("marginal curve needs at least 2 fractions".into()));
    }
    if fractions.windows(2).any(|w| !(w[0] < w[1])) || fractions.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidArgument("fractions must be strictly ascending within [0, 1]".into()));
    }
    objective.validate(dataset)?;
    let strata = Strata::new(dataset, column, value)?;
    let scenario = Scenario::new(column, value.clone(), 0.0);
    fractions
        .iter()
        .map(|&x| {
            if strata.feasible(x).is_err() {
                return Ok(MarginalPoint {
                    x,
                    metric_mean: None,
                    metric_std: None,
                });
            }
            let s = repeated_resample_strata(dataset, &strata, &scenario.with_fraction(x), objective, n_sample, seed)?;
            Ok(MarginalPoint {
                x,
                metric_mean: Some(s.metric_mean),
                metric_std: Some(s.metric_std),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseShape {
    Flat,
    Linear,
    /// Increments shrink along the curve (saturating, logarithmic-like).
    Concave,
    /// Increments grow along the curve (accelerating, exponential-like).
    Convex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    /// Least-squares slope of metric against fraction.
    pub slope: f64,
    pub shape: ResponseShape,
}

/// Least-squares slope and a coarse shape class from a quadratic fit.
///
/// A curve is linear when the quadratic term moves the fit by less than 10%
/// of the total change over the covered fractions.
pub fn summarize_curve(curve: &[MarginalPoint]) -> Option<CurveSummary> {
    let pts: Vec<(f64, f64)> = curve.iter().filter_map(|p| p.metric_mean.map(|m| (p.x, m))).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;

    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let scale = lo.abs().max(hi.abs()).max(1e-300);
    if hi - lo <= 1e-12 * scale {
        return Some(CurveSummary {
            slope,
            shape: ResponseShape::Flat,
        });
    }
    if pts.len() < 3 {
        return Some(CurveSummary {
            slope,
            shape: ResponseShape::Linear,
        });
    }
    let curvature = quadratic_coefficient(&pts);
    let span = pts[pts.len() - 1].0 - pts[0].0;
    let bend = curvature * span * span / 4.0;
    let shape = if bend.abs() < 0.1 * (hi - lo) {
        ResponseShape::Linear
    } else if curvature < 0.0 {
        ResponseShape::Concave
    } else {
        ResponseShape::Convex
    };
    Some(CurveSummary { slope, shape })
}

/// `c` of the least-squares fit `y = a + b x + c x^2`.
fn quadratic_coefficient(pts: &[(f64, f64)]) -> f64 {
    // Normal equations on centered x for conditioning.
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let (mut s2, mut s3, mut s4, mut sy, mut sxy, mut sx2y) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let u = x - mx;
        s2 += u * u;
        s3 += u * u * u;
        s4 += u * u * u * u;
        sy += y;
        sxy += u * y;
        sx2y += u * u * y;
    }
    // [n 0 s2; 0 s2 s3; s2 s3 s4] [a b c]^T = [sy sxy sx2y]^T
    let det = n * (s2 * s4 - s3 * s3) - s2 * (s2 * s2);
    if det.abs() < 1e-300 {
        return 0.0;
    }
    let det_c = n * (s2 * sx2y - s3 * sxy) - s2 * s2 * sy;
    det_c / det
}
