//! Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

use serde::{Deserialize, Serialize};

use super::descriptive::sorted_copy;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("sample contains NaN".into()));
    }
    let a = sorted_copy(a);
    let b = sorted_copy(b);
    let d = ks_statistic_sorted(&a, &b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_p_value(na * nb / (na + nb), d),
    })
}

/// Largest gap between the two right-continuous empirical CDFs, evaluated at
/// every distinct sample point. Both inputs must be sorted ascending.
pub fn ks_statistic_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov tail probability for effective size `n_e` and
/// statistic `d`: `2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 n_e d^2)`, summed until
/// a term drops below 1e-10 and clamped to `[0, 1]`.
pub fn kolmogorov_p_value(n_e: f64, d: f64) -> f64 {
    let lambda_sq = n_e * d * d;
    // Below lambda = 0.2 the tail is 1 to within 1e-12, and the series would
    // need very many terms to settle.
    if lambda_sq < 0.04 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100_000u32 {
        let k = f64::from(k);
        let term = 2.0 * libm::exp(-2.0 * k * k * lambda_sq);
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn brute_force_d(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], t: f64| s.iter().filter(|x| **x <= t).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|t| (cdf(a, *t) - cdf(b, *t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identical_samples() {
        let a = [3.0, 1.0, 2.0, 2.0];
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn disjoint_supports() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.p_value < 0.05);
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(ks_two_sample(&[], &[1.0]), Err(Error::EmptySample));
    }

    #[test]
    fn ties_across_samples() {
        let a = [1.0, 1.0, 2.0];
        let b = [1.0, 2.0, 2.0];
        assert_eq!(ks_statistic_sorted(&a, &b), brute_force_d(&a, &b));
        assert!((ks_statistic_sorted(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn p_value_reference_points() {
        // Q_KS(1) = 0.26999967..., Q_KS(1.36) ~ 0.0494.
        assert!((kolmogorov_p_value(1.0, 1.0) - 0.2699996716735).abs() < 1e-9);
        assert!((kolmogorov_p_value(100.0, 0.136) - 0.04946).abs() < 1e-4);
        assert_eq!(kolmogorov_p_value(10.0, 0.0), 1.0);
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((-40i32..40).prop_map(|v| f64::from(v) * 0.5), 1..60)
    }

    proptest! {
        #[test]
        fn statistic_matches_brute_force(a in sample(), b in sample()) {
            let r = ks_two_sample(&a, &b).unwrap();
            prop_assert_eq!(r.statistic, brute_force_d(&a, &b));
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }

        #[test]
        fn symmetric(a in sample(), b in sample()) {
            prop_assert_eq!(ks_two_sample(&a, &b).unwrap(), ks_two_sample(&b, &a).unwrap());
        }

        #[test]
        fn invariant_under_monotone_transform(a in sample(), b in sample()) {
            let f = |x: &f64| (x * 0.3).exp() * 5.0 - 2.0;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(
                ks_two_sample(&a, &b).unwrap().statistic,
                ks_two_sample(&ta, &tb).unwrap().statistic
            );
        }
    }
}
