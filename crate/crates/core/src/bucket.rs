//! Quantile discretization of numeric columns.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Dataset};
use crate::stats::descriptive::quantile_sorted;
use crate::{Error, Result};

/// Half-open interval `[lower, upper)` of one numeric column; the last bucket
/// of a column is closed, `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub column: String,
    pub lower: f64,
    pub upper: f64,
    pub upper_inclusive: bool,
    pub label: String,
}

impl Bucket {
    pub fn new(column: &str, lower: f64, upper: f64, upper_inclusive: bool) -> Self {
        let close = if upper_inclusive { ']' } else { ')' };
        Self {
            column: String::from(column),
            lower,
            upper,
            upper_inclusive,
            label: format!("[{lower}, {upper}{close}"),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && (x < self.upper || (self.upper_inclusive && x <= self.upper))
    }

    /// Parses labels of the form `[lo, hi)` or `[lo, hi]`.
    pub fn parse_label(column: &str, text: &str) -> Option<Self> {
        let body = text.trim().strip_prefix('[')?;
        let (body, inclusive) = match body.strip_suffix(')') {
            Some(b) => (b, false),
            None => (body.strip_suffix(']')?, true),
        };
        let (lo, hi) = body.split_once(',')?;
        let lo: f64 = lo.trim().parse().ok()?;
        let hi: f64 = hi.trim().parse().ok()?;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return None;
        }
        Some(Self::new(column, lo, hi, inclusive))
    }
}

/// Splits a numeric column at its `i / n_buckets` empirical quantiles.
///
/// Tied edges are merged, so heavily tied columns can produce fewer than
/// `n_buckets` buckets; a constant column produces the single bucket `[v, v]`.
pub fn bucket_numeric(dataset: &Dataset, column: &str, n_buckets: usize) -> Result<Vec<Bucket>> {
    if n_buckets < 2 {
        return Err(Error::InvalidArgument(format!("n_buckets must be >= 2, got {n_buckets}")));
    }
    let col = dataset.column(column)?;
    if col.kind() != ColumnKind::Numeric {
        return Err(Error::NotNumeric(String::from(column)));
    }
    let mut values: Vec<f64> = col.numeric().unwrap_or(&[]).iter().flatten().copied().collect();
    if values.is_empty() {
        return Err(Error::AllMissing(String::from(column)));
    }
    values.sort_by(f64::total_cmp);

    let mut edges: Vec<f64> = (0..=n_buckets)
        .map(|i| quantile_sorted(&values, i as f64 / n_buckets as f64))
        .collect();
    let (lo, hi) = (edges[0], edges[n_buckets]);
    for e in &mut edges[1..n_buckets] {
        *e = snap(*e).clamp(lo, hi);
    }
    edges.dedup();

    if edges.len() == 1 {
        return Ok(alloc::vec![Bucket::new(column, edges[0], edges[0], true)]);
    }
    let last = edges.len() - 2;
    Ok(edges
        .windows(2)
        .enumerate()
        .map(|(i, w)| Bucket::new(column, w[0], w[1], i == last))
        .collect())
}

/// Rounds an interior edge to 12 significant digits so interpolation noise
/// such as `41.80000000000001` does not leak into labels.
fn snap(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let k = 11 - libm::floor(libm::log10(libm::fabs(x))) as i32;
    if k >= 0 {
        let scale = libm::pow(10.0, f64::from(k.min(300)));
        libm::round(x * scale) / scale
    } else {
        let scale = libm::pow(10.0, f64::from(-k));
        libm::round(x / scale) * scale
    }
}
