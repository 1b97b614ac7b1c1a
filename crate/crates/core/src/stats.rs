//! Kolmogorov-Smirnov statistics and empirical transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size `n m / (n + m)` (or `n` for one sample).
    pub n_eff: f64,
}

impl KsResult {
    /// The statistic's critical value at level `alpha`.
    pub fn critical(&self, alpha: f64) -> f64 {
        ks_critical_coefficient(alpha) / self.n_eff.sqrt()
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.statistic > self.critical(alpha)
    }
}

pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Fraction of `sorted` at or below `x`.
pub fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&v| v <= x) as f64 / sorted.len() as f64
}

/// `c(alpha) = sqrt(-ln(alpha / 2) / 2)`; 1.6276 at the 1% level.
pub fn ks_critical_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Asymptotic Kolmogorov survival `P(K > t) = 2 sum (-1)^(k-1) exp(-2 k^2 t^2)`.
pub fn kolmogorov_survival(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut acc = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * f64::from(k * k) * t * t).exp();
        acc += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * acc).clamp(0.0, 1.0)
}

fn p_value(d: f64, n_eff: f64) -> f64 {
    let en = n_eff.sqrt();
    kolmogorov_survival((en + 0.12 + 0.11 / en) * d)
}

/// Two-sample KS test on unsorted data.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty());
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let n_eff = n * m / (n + m);
    KsResult {
        statistic: d,
        p_value: p_value(d, n_eff),
        n_eff,
    }
}

/// One-sample KS test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsResult {
    assert!(!sample.is_empty());
    let s = sorted(sample);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    KsResult {
        statistic: d,
        p_value: p_value(d, n),
        n_eff: n,
    }
}

/// Empirical characteristic function `n^-1 sum exp(i s x)`.
pub fn ecf(values: &[f64], s: f64) -> Complex64 {
    let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
    for &x in values {
        let (sin, cos) = (s * x).sin_cos();
        re.add(cos);
        im.add(sin);
    }
    let n = values.len() as f64;
    Complex64::new(re.value() / n, im.value() / n)
}

/// `max_s |ecf_a(s) - ecf_b(s)|` over `s_grid`.
pub fn ecf_distance(a: &[f64], b: &[f64], s_grid: &[f64]) -> f64 {
    s_grid
        .iter()
        .map(|&s| (ecf(a, s) - ecf(b, s)).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniforms(n: usize, seed: u64) -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| r.random::<f64>()).collect()
    }

    #[test]
    fn critical_coefficient_at_one_percent() {
        assert!((ks_critical_coefficient(0.01) - 1.6276).abs() < 1e-4);
    }

    #[test]
    fn survival_matches_table() {
        // standard quantiles of the Kolmogorov distribution
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn identical_samples_have_zero_distance() {
        let a = uniforms(500, 1);
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(ecf_distance(&a, &a, &[0.5, 1.0, 3.0]), 0.0);
    }

    #[test]
    fn disjoint_samples_have_distance_one() {
        let a = uniforms(100, 2);
        let b: Vec<f64> = a.iter().map(|x| x + 2.0).collect();
        assert_eq!(ks_two_sample(&a, &b).statistic, 1.0);
        assert!(ks_two_sample(&a, &b).rejects(0.01));
    }

    #[test]
    fn same_law_is_accepted() {
        let r = ks_two_sample(&uniforms(20_000, 3), &uniforms(20_000, 4));
        assert!(!r.rejects(0.01), "{r:?}");
        let r = ks_one_sample(&uniforms(20_000, 5), |x| x.clamp(0.0, 1.0));
        assert!(!r.rejects(0.01), "{r:?}");
    }

    #[test]
    fn ecdf_counts_ties() {
        let s = sorted(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(ecdf(&s, 2.0), 0.75);
        assert_eq!(ecdf(&s, 0.5), 0.0);
        assert_eq!(ecdf(&s, 3.0), 1.0);
    }

    #[test]
    fn ecf_of_constant() {
        let c = ecf(&[2.0; 10], 0.7);
        assert!((c.re - 1.4f64.cos()).abs() < 1e-15 && (c.im - 1.4f64.sin()).abs() < 1e-15);
    }
}
