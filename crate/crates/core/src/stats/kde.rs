//! Gaussian kernel density estimation with Silverman's rule-of-thumb bandwidth.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::descriptive::{iqr_sorted, sample_std, sorted_copy};
use super::normal;
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 256;

/// Kernel contributions beyond this many bandwidths are below 1e-22 and skipped.
const KERNEL_CUTOFF: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityCurve {
    /// Trapezoidal integral of the density over the grid.
    pub fn mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| 0.5 * (g[1] - g[0]) * (d[0] + d[1]))
            .sum()
    }
}

/// `0.9 * min(s, IQR / 1.34) * n^(-1/5)`, falling back to `s` alone when the
/// IQR is zero. Constant samples are degenerate.
pub fn silverman_bandwidth(sample: &[f64]) -> Result<f64> {
    match sample.len() {
        0 => return Err(Error::EmptySample),
        1 => return Err(Error::Degenerate),
        _ => {}
    }
    let sorted = sorted_copy(sample);
    bandwidth_sorted(&sorted)
}

fn bandwidth_sorted(sorted: &[f64]) -> Result<f64> {
    let s = sample_std(sorted);
    if !(s > 0.0) {
        return Err(Error::Degenerate);
    }
    let iqr = iqr_sorted(sorted);
    let spread = if iqr > 0.0 { s.min(iqr / 1.34) } else { s };
    Ok(0.9 * spread * libm::pow(sorted.len() as f64, -0.2))
}

pub fn kde(sample: &[f64], grid_points: usize) -> Result<DensityCurve> {
    kde_scaled(sample, grid_points, 1.0)
}

/// KDE whose Silverman bandwidth is multiplied by `multiplier` (the UI's
/// smoothing control). The grid spans `[min - 3h, max + 3h]`.
pub fn kde_scaled(sample: &[f64], grid_points: usize, multiplier: f64) -> Result<DensityCurve> {
    if grid_points < 2 {
        return Err(Error::InvalidArgument("grid_points must be >= 2".into()));
    }
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::InvalidArgument("bandwidth multiplier must be positive".into()));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.len() < 2 {
        return Err(Error::Degenerate);
    }
    let sorted = sorted_copy(sample);
    let h = bandwidth_sorted(&sorted)? * multiplier;
    let lo = sorted[0] - 3.0 * h;
    let hi = sorted[sorted.len() - 1] + 3.0 * h;
    let step = (hi - lo) / (grid_points - 1) as f64;
    let norm = 1.0 / (sorted.len() as f64 * h);

    let mut grid = Vec::with_capacity(grid_points);
    let mut density = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let g = if i == grid_points - 1 { hi } else { lo + step * i as f64 };
        let start = sorted.partition_point(|x| *x < g - KERNEL_CUTOFF * h);
        let end = sorted.partition_point(|x| *x <= g + KERNEL_CUTOFF * h);
        let sum: f64 = sorted[start..end].iter().map(|x| normal::pdf((g - x) / h)).sum();
        grid.push(g);
        density.push(sum * norm);
    }
    Ok(DensityCurve {
        grid,
        density,
        bandwidth: h,
    })
}
