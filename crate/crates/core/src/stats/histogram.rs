use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::descriptive::{iqr_sorted, sorted_copy};

pub const MIN_BINS: usize = 10;
pub const MAX_BINS: usize = 100;

/// Baseline and what-if counts over one shared set of bin edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub edges: Vec<f64>,
    pub baseline: Vec<usize>,
    pub whatif: Vec<usize>,
}

/// Freedman-Diaconis bins on the pooled data, clamped to 10..=100 bins.
pub fn shared_histograms(baseline: &[f64], whatif: &[f64]) -> Histograms {
    let mut pooled: Vec<f64> = baseline.iter().chain(whatif).copied().collect();
    if pooled.is_empty() {
        return Histograms {
            edges: Vec::new(),
            baseline: Vec::new(),
            whatif: Vec::new(),
        };
    }
    pooled = sorted_copy(&pooled);
    let (mut lo, mut hi) = (pooled[0], pooled[pooled.len() - 1]);
    if hi == lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = 2.0 * iqr_sorted(&pooled) * libm::cbrt(pooled.len() as f64).recip();
    let bins = if width > 0.0 {
        (libm::ceil((hi - lo) / width) as usize).clamp(MIN_BINS, MAX_BINS)
    } else {
        MAX_BINS
    };
    let step = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + step * i as f64).collect();
    edges.push(hi);

    let count = |values: &[f64]| {
        let mut counts = vec![0usize; bins];
        for x in values {
            let idx = (((x - lo) / step) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        counts
    };
    Histograms {
        baseline: count(baseline),
        whatif: count(whatif),
        edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_cover_everything() {
        let a: Vec<f64> = (0..500).map(|i| f64::from(i) * 0.37 % 17.0).collect();
        let b: Vec<f64> = (0..300).map(|i| f64::from(i) * 0.11 % 9.0 + 4.0).collect();
        let h = shared_histograms(&a, &b);
        assert_eq!(h.edges.len(), h.baseline.len() + 1);
        assert!((MIN_BINS..=MAX_BINS).contains(&h.baseline.len()));
        assert_eq!(h.baseline.iter().sum::<usize>(), 500);
        assert_eq!(h.whatif.iter().sum::<usize>(), 300);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_data() {
        let h = shared_histograms(&[2.0; 5], &[2.0; 3]);
        assert_eq!(h.edges[0], 1.5);
        assert_eq!(*h.edges.last().unwrap(), 2.5);
        assert_eq!(h.baseline.iter().sum::<usize>(), 5);
    }
}
