//! Summary statistics with the conventions used across the engine:
//! sample standard deviation with the `n - 1` denominator and linearly
//! interpolated quantiles between order statistics.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Quantile `p` in `[0, 1]` of already sorted data, interpolating linearly
/// between order statistics at position `p * (n - 1)`.
///
/// Panics on empty input.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let p = p.clamp(0.0, 1.0);
    let h = p * (sorted.len() - 1) as f64;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    libm::sqrt(ss / (values.len() - 1) as f64)
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Interquartile range of sorted data.
pub fn iqr_sorted(sorted: &[f64]) -> f64 {
    quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        let s = sorted_copy(values);
        Ok(Self::from_sorted(&s))
    }

    pub(crate) fn from_sorted(s: &[f64]) -> Self {
        Self {
            n: s.len(),
            mean: mean(s),
            std: sample_std(s),
            min: s[0],
            max: s[s.len() - 1],
            p5: quantile_sorted(s, 0.05),
            p25: quantile_sorted(s, 0.25),
            p50: quantile_sorted(s, 0.50),
            p75: quantile_sorted(s, 0.75),
            p95: quantile_sorted(s, 0.95),
        }
    }
}
