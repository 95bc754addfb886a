//! One-dimensional Gaussian-process regression with a Matérn-5/2 kernel and
//! the expected-improvement acquisition function.
//!
//! The prior mean is zero; callers standardize their targets first.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::stats::normal;
use crate::{Error, Result};

/// Diagonal jitter tried in turn until the Cholesky factorization succeeds.
const JITTER_SCHEDULE: [f64; 5] = [0.0, 1e-6, 1e-5, 1e-4, 1e-3];

/// Posterior standard deviations below this are treated as zero by EI.
const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matern52 {
    pub length_scale: f64,
    pub signal_variance: f64,
}

impl Matern52 {
    pub fn new(length_scale: f64, signal_variance: f64) -> Self {
        Self {
            length_scale,
            signal_variance,
        }
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let r = libm::fabs(a - b) / self.length_scale;
        let s5r = libm::sqrt(5.0) * r;
        self.signal_variance * (1.0 + s5r + 5.0 * r * r / 3.0) * libm::exp(-s5r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    pub std: f64,
}

/// GP conditioned on observations `(x_i, y_i)`.
///
/// The covariance of the observations is `K + (noise_variance + jitter) I +
/// diag(point_noise)`, where `point_noise` carries per-observation variance
/// such as a bootstrap standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    kernel: Matern52,
    noise_variance: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    point_noise: Vec<f64>,
    jitter: f64,
    /// Lower-triangular Cholesky factor, row-major.
    chol: Vec<f64>,
    /// `(K + noise)^-1 y`.
    alpha: Vec<f64>,
}

impl GpModel {
    /// Fits a homoscedastic model.
    pub fn fit(xs: &[f64], ys: &[f64], kernel: Matern52, noise_variance: f64) -> Result<Self> {
        Self::fit_with_point_noise(xs, ys, kernel, noise_variance, &[])
    }

    /// Fits a model with extra per-observation noise variances (`point_noise`
    /// may be empty, meaning all zero).
    pub fn fit_with_point_noise(
        xs: &[f64],
        ys: &[f64],
        kernel: Matern52,
        noise_variance: f64,
        point_noise: &[f64],
    ) -> Result<Self> {
        let n = xs.len();
        if n == 0 {
            return Err(Error::InvalidArgument("GP needs at least one observation".into()));
        }
        if ys.len() != n || !(point_noise.is_empty() || point_noise.len() == n) {
            return Err(Error::InvalidArgument("observation arrays differ in length".into()));
        }
        if !(kernel.length_scale > 0.0 && kernel.signal_variance > 0.0) {
            return Err(Error::InvalidArgument("kernel hyperparameters must be positive".into()));
        }
        if !(noise_variance >= 0.0) || point_noise.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidArgument("noise variances must be non-negative".into()));
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("observations must be finite".into()));
        }
        let point_noise = if point_noise.is_empty() {
            vec![0.0; n]
        } else {
            point_noise.to_vec()
        };

        let mut base = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = kernel.eval(xs[i], xs[j]);
                base[i * n + j] = k;
                base[j * n + i] = k;
            }
            base[i * n + i] += noise_variance + point_noise[i];
        }

        for jitter in JITTER_SCHEDULE {
            let mut m = base.clone();
            for i in 0..n {
                m[i * n + i] += jitter;
            }
            if let Some(chol) = cholesky(&m, n) {
                let alpha = cho_solve(&chol, n, ys);
                return Ok(Self {
                    kernel,
                    noise_variance,
                    xs: xs.to_vec(),
                    ys: ys.to_vec(),
                    point_noise,
                    jitter,
                    chol,
                    alpha,
                });
            }
        }
        Err(Error::Numerical(format!(
            "kernel matrix not positive definite with jitter up to {}",
            JITTER_SCHEDULE[JITTER_SCHEDULE.len() - 1]
        )))
    }

    pub fn kernel(&self) -> Matern52 {
        self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Jitter that was needed to factorize the covariance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn n_observations(&self) -> usize {
        self.xs.len()
    }

    /// Posterior mean and standard deviation of the latent function at `x`.
    pub fn posterior(&self, x: f64) -> Posterior {
        let n = self.xs.len();
        let k_star: Vec<f64> = self.xs.iter().map(|xi| self.kernel.eval(x, *xi)).collect();
        let mean = k_star.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        let v = forward_sub(&self.chol, n, &k_star);
        let var = self.kernel.eval(x, x) - v.iter().map(|t| t * t).sum::<f64>();
        Posterior {
            mean,
            std: libm::sqrt(var.max(0.0)),
        }
    }

    /// `log p(y | X)` under the fitted hyperparameters.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.xs.len();
        let fit: f64 = self.ys.iter().zip(&self.alpha).map(|(y, a)| y * a).sum();
        let log_det: f64 = (0..n).map(|i| libm::log(self.chol[i * n + i])).sum();
        -0.5 * fit - log_det - 0.5 * n as f64 * libm::log(2.0 * PI)
    }

    pub fn observations(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn point_noise(&self) -> &[f64] {
        &self.point_noise
    }
}

/// Expected improvement for minimization at a point with posterior `post`:
/// `(f_best - mu - xi) Phi(z) + sigma phi(z)` with `z = (f_best - mu - xi) / sigma`,
/// or `max(0, f_best - mu - xi)` when `sigma` is numerically zero.
pub fn expected_improvement_at(post: Posterior, f_best: f64, xi: f64) -> f64 {
    let improvement = f_best - post.mean - xi;
    if post.std < SIGMA_FLOOR {
        return improvement.max(0.0);
    }
    let z = improvement / post.std;
    (improvement * normal::cdf(z) + post.std * normal::pdf(z)).max(0.0)
}

pub fn expected_improvement(model: &GpModel, x: f64, f_best: f64, xi: f64) -> f64 {
    expected_improvement_at(model.posterior(x), f_best, xi)
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L v = b`.
fn forward_sub(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * v[k]).sum();
        v[i] = (b[i] - s) / l[i * n + i];
    }
    v
}

/// Solves `L L^T x = b`.
fn cho_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let v = forward_sub(l, n, b);
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (v[i] - s) / l[i * n + i];
    }
    x
}
