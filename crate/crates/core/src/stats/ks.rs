//! Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::check_sample;

/// The alternating series stops once a term falls below this magnitude.
const SERIES_TOLERANCE: f64 = 1e-12;
/// Hard cap on the number of alternating-series terms.
const SERIES_MAX_TERMS: u32 = 100;
/// Below this argument the alternating series needs more than the capped
/// number of terms, so the equivalent theta-function form is summed instead.
const THETA_FORM_BELOW: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Sup-norm distance between the two ECDFs.
    pub statistic: f64,
    /// `statistic * sqrt(n m / (n + m))`.
    pub adjusted: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest absolute ECDF gap over the pooled sample points.
///
/// Both ECDFs are right-continuous step functions that only jump at sample
/// points, so the gap after consuming every copy of each pooled value (and
/// before consuming it, which is the previous pooled value) covers the
/// supremum over the whole real line.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    check_sample(a, "first KS sample")?;
    check_sample(b, "second KS sample")?;
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as u128, b.len() as u128);

    let (mut i, mut j) = (0usize, 0usize);
    let mut widest: u128 = 0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        // |i/n - j/m| scaled by n*m keeps the comparison exact
        widest = widest.max((i as u128 * m).abs_diff(j as u128 * n));
    }
    Ok(widest as f64 / (n * m) as f64)
}

/// `statistic * sqrt(n m / (n + m))`.
pub fn size_adjusted(statistic: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    statistic * (n * m / (n + m)).sqrt()
}

/// Asymptotic Kolmogorov survival function
/// `2 Σ_{k≥1} (-1)^(k-1) exp(-2 k² d²)`, clamped to `[0, 1]`.
pub fn ks_pvalue(adjusted: f64) -> Result<f64> {
    if adjusted.is_nan() || adjusted < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "size-adjusted KS statistic must be >= 0, got {adjusted}"
        )));
    }
    if adjusted == 0.0 {
        return Ok(1.0);
    }
    if adjusted.is_infinite() {
        return Ok(0.0);
    }
    let p = if adjusted < THETA_FORM_BELOW {
        1.0 - kolmogorov_cdf_theta(adjusted)
    } else {
        alternating_series(adjusted)
    };
    Ok(p.clamp(0.0, 1.0))
}

fn alternating_series(d: f64) -> f64 {
    let mut sum = 0.0;
    for k in 1..=SERIES_MAX_TERMS {
        let k = f64::from(k);
        let term = (-2.0 * k * k * d * d).exp();
        sum += if k as u32 % 2 == 1 { term } else { -term };
        if term < SERIES_TOLERANCE {
            break;
        }
    }
    2.0 * sum
}

/// `sqrt(2π)/d Σ_{k≥1} exp(-(2k-1)² π² / (8 d²))`, the same distribution
/// function written through the Jacobi theta identity.
fn kolmogorov_cdf_theta(d: f64) -> f64 {
    let scale = std::f64::consts::PI * std::f64::consts::PI / (8.0 * d * d);
    let mut sum = 0.0;
    for k in 1..=SERIES_MAX_TERMS {
        let odd = f64::from(2 * k - 1);
        let term = (-odd * odd * scale).exp();
        sum += term;
        if term <= f64::EPSILON * sum || term == 0.0 {
            break;
        }
    }
    (2.0 * std::f64::consts::PI).sqrt() / d * sum
}

/// KS statistic, size adjustment and p-value in one step.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let statistic = ks_statistic(a, b)?;
    let adjusted = size_adjusted(statistic, a.len(), b.len());
    Ok(KsResult {
        statistic,
        adjusted,
        p_value: ks_pvalue(adjusted)?,
        n: a.len(),
        m: b.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force ECDF enumeration over pooled points.
    fn brute_statistic(a: &[f64], b: &[f64]) -> f64 {
        let (n, m) = (a.len() as u128, b.len() as u128);
        let mut best = 0u128;
        for &x in a.iter().chain(b) {
            let ca = a.iter().filter(|&&v| v <= x).count() as u128;
            let cb = b.iter().filter(|&&v| v <= x).count() as u128;
            best = best.max((ca * m).abs_diff(cb * n));
        }
        best as f64 / (n * m) as f64
    }

    #[test]
    fn identical_samples_give_zero() {
        let a = [0.3, 0.1, 0.7, 0.1];
        let mut b = a;
        b.reverse();
        assert_eq!(ks_statistic(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_give_one() {
        assert_eq!(
            ks_statistic(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(),
            1.0
        );
    }

    #[test]
    fn interleaved_example_is_one_third() {
        let s = ks_statistic(&[0.1, 0.4, 0.7], &[0.2, 0.5, 0.9]).unwrap();
        assert_eq!(s, brute_statistic(&[0.1, 0.4, 0.7], &[0.2, 0.5, 0.9]));
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(ks_statistic(&[], &[1.0]).is_err());
        assert!(ks_statistic(&[1.0], &[]).is_err());
        assert!(ks_statistic(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn pvalue_reference_points() {
        assert_eq!(ks_pvalue(0.0).unwrap(), 1.0);
        // 50-digit summation of the series
        assert!((ks_pvalue(1.36).unwrap() - 0.049_485_876_755_377_91).abs() < 1e-12);
        let first_term = 2.0 * (-18.0f64).exp();
        let p3 = ks_pvalue(3.0).unwrap();
        assert!((p3 - first_term).abs() < 1e-20);
        assert!((p3 - 3.045_995_948_942_525_7e-8).abs() < 1e-20);
        assert!(ks_pvalue(-0.1).is_err());
        assert!(ks_pvalue(f64::NAN).is_err());
    }

    #[test]
    fn small_arguments_stay_near_one() {
        // 50-digit values of the survival function
        assert!((ks_pvalue(0.3).unwrap() - 0.999_990_694_198_665_4).abs() < 1e-13);
        assert!((ks_pvalue(0.5).unwrap() - 0.963_945_243_664_875_1).abs() < 1e-13);
        for d in [1e-6, 1e-3, 0.01, 0.02, 0.05, 0.1] {
            let p = ks_pvalue(d).unwrap();
            assert!(p > 0.999_99 && p <= 1.0, "d={d} p={p}");
        }
    }

    #[test]
    fn forms_agree_at_switch_point() {
        let d = THETA_FORM_BELOW;
        let theta = 1.0 - kolmogorov_cdf_theta(d);
        let series = alternating_series(d);
        assert!((theta - series).abs() < 1e-14, "{theta} vs {series}");
    }

    #[test]
    fn pvalue_strictly_decreasing_on_grid() {
        let grid: Vec<f64> = (0..=470).map(|i| 0.3 + i as f64 * 0.01).collect();
        let ps: Vec<f64> = grid.iter().map(|&d| ks_pvalue(d).unwrap()).collect();
        assert!(ps.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn two_sample_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));

        let lo: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let hi: Vec<f64> = (0..50).map(|i| 100.0 + i as f64).collect();
        let r = ks_two_sample(&lo, &hi).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!((r.adjusted - 5.0).abs() < 1e-12);
        assert!(r.p_value < 1e-10);
        assert_eq!(r.adjusted, size_adjusted(r.statistic, r.n, r.m));
    }

    #[test]
    fn null_pvalues_roughly_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
        let trials = 1000;
        let mut rejections = 0;
        for _ in 0..trials {
            let a: Vec<f64> = (0..100).map(|_| rng.random()).collect();
            let b: Vec<f64> = (0..100).map(|_| rng.random()).collect();
            if ks_two_sample(&a, &b).unwrap().p_value < 0.05 {
                rejections += 1;
            }
        }
        let frac = rejections as f64 / trials as f64;
        assert!((0.02..=0.09).contains(&frac), "rejection rate {frac}");
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_is_symmetric(
            a in proptest::collection::vec(0u8..20, 1..30),
            b in proptest::collection::vec(0u8..20, 1..30),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let s = ks_statistic(&a, &b).unwrap();
            prop_assert_eq!(s, brute_statistic(&a, &b));
            prop_assert_eq!(s, ks_statistic(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn invariant_under_monotone_transform(
            a in proptest::collection::vec(0.001f64..1.0, 1..30),
            b in proptest::collection::vec(0.001f64..1.0, 1..30),
        ) {
            let f = |v: &f64| v.ln() * 3.0 + 7.0;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(ks_statistic(&a, &b).unwrap(), ks_statistic(&ta, &tb).unwrap());
        }

        #[test]
        fn pvalue_in_unit_interval(d in 0.0f64..50.0) {
            let p = ks_pvalue(d).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
