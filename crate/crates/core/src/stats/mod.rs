//! Distribution comparison between a baseline and a what-if scenario.

pub mod compare;
pub mod descriptive;
pub mod histogram;
pub mod kde;
pub mod ks;
pub mod normal;

pub use compare::{compare, CompareConfig, ComparisonReport, Densities, Highlight};
pub use descriptive::Summary;
pub use histogram::{shared_histograms, Histograms};
pub use kde::{kde, kde_scaled, silverman_bandwidth, DensityCurve, DEFAULT_GRID_POINTS};
pub use ks::{kolmogorov_p_value, ks_statistic_sorted, ks_two_sample, KsResult};
