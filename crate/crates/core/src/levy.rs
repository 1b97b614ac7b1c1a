//! Levy structure of the solution.
//!
//! The solution is infinitely divisible with zero shift, and its Levy measure
//! `M` satisfies `x M(dx) = m L(A eta_sb)(dx)`. We carry the probability law
//! `L(A eta_sb)` as a sample and report the scale `m` separately; `M` itself
//! can have infinite mass. When `E[1/A] = K` is finite the mass is
//! `K (1 - c)` with `c` the atom of the solution at zero.

use serde::{Deserialize, Serialize};

use crate::distributions::{
    size_bias_resample_chunked, AtomicDistribution, EmpiricalSample, Exponential, MultiplierLaw,
};
use crate::error::{Error, Result};
use crate::lst::atom_at_zero;
use crate::numeric::{log_space, CompensatedSum};
use crate::seeds::derive_seed;
use crate::stats::{ecdf, sorted};

/// Number of points in [`LevyEstimate::grid_x`].
pub const LEVY_GRID_POINTS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct LevyEstimate {
    /// Increasing positive abscissae.
    pub grid_x: Vec<f64>,
    /// Empirical CDF of `A eta_sb` on `grid_x`.
    pub cdf: Vec<f64>,
    /// Total mass of `M`; `None` when infinite.
    pub total_mass: Option<f64>,
    /// Mean of the solution; `x M(dx)` has mass `scale`.
    pub scale: f64,
    samples: Vec<f64>,
}

impl LevyEstimate {
    /// Sorted draws of `A eta_sb`.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn cdf_at(&self, x: f64) -> f64 {
        ecdf(&self.samples, x)
    }

    pub fn mean(&self) -> f64 {
        CompensatedSum::from_iter(self.samples.iter().copied()).value() / self.samples.len() as f64
    }
}

/// `K (1 - c)` for finite `K = E[1/A]`.
pub fn levy_total_mass<L: MultiplierLaw + ?Sized>(rho: &L) -> Option<f64> {
    let k = rho.inverse_mean();
    k.is_finite().then(|| k * (1.0 - atom_at_zero(rho)))
}

/// Estimate `x M(dx)` from a sample of the solution: `n_out` draws of
/// `A eta_sb` with `eta_sb` size-bias resampled from `mu`.
pub fn levy_from_solution(
    rho: &AtomicDistribution,
    mu: &EmpiricalSample,
    seed: u64,
    n_out: usize,
    chunk_size: usize,
) -> Result<LevyEstimate> {
    let sb = size_bias_resample_chunked(mu, n_out, derive_seed(seed, "levy_sb", 0, 0), chunk_size)?;
    let a = rho.sample(n_out, derive_seed(seed, "levy_a", 0, 0), chunk_size);
    let samples = sorted(
        &sb.values()
            .iter()
            .zip(a.values())
            .map(|(x, a)| a * x)
            .collect::<Vec<_>>(),
    );
    let lo = samples
        .iter()
        .copied()
        .find(|&v| v > 0.0)
        .ok_or(Error::ZeroMass)?;
    let hi = samples[samples.len() - 1];
    let grid_x = if hi > lo {
        log_space(lo, hi, LEVY_GRID_POINTS)
    } else {
        vec![lo]
    };
    let cdf = grid_x.iter().map(|&x| ecdf(&samples, x)).collect();
    Ok(LevyEstimate {
        grid_x,
        cdf,
        total_mass: levy_total_mass(rho),
        scale: mu.mean(),
        samples,
    })
}

/// A law on `[0, inf)` known through its CDF and size-biased CDF.
pub trait CdfSource {
    /// `P(X <= x)`, except that sample-based sources count ties at `x` by half.
    fn cdf(&self, x: f64) -> f64;
    /// `E[X; X <= x] / E X`.
    fn size_biased_cdf(&self, x: f64) -> f64;
}

impl CdfSource for Exponential {
    fn cdf(&self, x: f64) -> f64 {
        Exponential::cdf(self, x)
    }

    fn size_biased_cdf(&self, x: f64) -> f64 {
        Exponential::size_biased_cdf(self, x)
    }
}

/// Empirical CDF with midpoint convention at ties.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &EmpiricalSample) -> Self {
        let values = sorted(sample.values());
        let mut acc = CompensatedSum::new();
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        for &v in &values {
            acc.add(v);
            prefix.push(acc.value());
        }
        Self { values, prefix }
    }

    fn counts(&self, x: f64) -> (usize, usize) {
        (
            self.values.partition_point(|&v| v < x),
            self.values.partition_point(|&v| v <= x),
        )
    }
}

impl CdfSource for EmpiricalCdf {
    fn cdf(&self, x: f64) -> f64 {
        let (lt, le) = self.counts(x);
        (lt + le) as f64 / (2 * self.values.len()) as f64
    }

    fn size_biased_cdf(&self, x: f64) -> f64 {
        let (lt, le) = self.counts(x);
        let total = self.prefix[self.values.len()];
        0.5 * (self.prefix[lt] + self.prefix[le]) / total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteutelReport {
    pub probes: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual: f64,
}

/// Both sides of the distribution-function form of the Steutel relation,
/// divided by the mean: `mu_sb[0, x]` against `int mu[0, x - y] L(A eta_sb)(dy)`.
pub fn steutel_residual<C: CdfSource + ?Sized>(
    mu: &C,
    levy: &LevyEstimate,
    probes: &[f64],
) -> Result<SteutelReport> {
    let ys = levy.samples();
    if let Some(&bad) = probes.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::ProbeOutsideSupport(bad));
    }
    let n = ys.len() as f64;
    let mut lhs = Vec::with_capacity(probes.len());
    let mut rhs = Vec::with_capacity(probes.len());
    for &x in probes {
        lhs.push(mu.size_biased_cdf(x));
        let below = ys.partition_point(|&y| y <= x);
        rhs.push(CompensatedSum::from_iter(ys[..below].iter().map(|&y| mu.cdf(x - y))).value() / n);
    }
    let residual = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SteutelReport {
        probes: probes.to_vec(),
        lhs,
        rhs,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{quantize_family, Family, QuantizeSource};
    use crate::moments::eta_moments;
    use crate::montecarlo::{mc_fixed_point, McConfig};
    use crate::stats::ks_one_sample;

    const PROBES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

    #[test]
    fn total_mass_matches_atom_at_zero() {
        let half = AtomicDistribution::point_mass(0.5).unwrap();
        let k = levy_total_mass(&half).unwrap();
        assert!((k + atom_at_zero(&half).ln()).abs() < 1e-10);
        assert!((k - 1.594).abs() < 1e-3);
        assert_eq!(levy_total_mass(&Family::Uniform01), None);
    }

    #[test]
    fn uniform_levy_law_is_exponential() {
        let rho = quantize_family(&QuantizeSource::Uniform01, 512).unwrap();
        let mu = Exponential { mean: 1.0 }.sample(50_000, 1);
        let levy = levy_from_solution(&rho, &mu, 2, 50_000, 8192).unwrap();
        let ks = ks_one_sample(levy.samples(), |x| Exponential { mean: 1.0 }.cdf(x));
        assert!(!ks.rejects(0.01), "{ks:?}");
        assert!(levy.cdf_at(1e-6) < 1e-3);
        assert!(levy.cdf.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*levy.cdf.last().unwrap(), 1.0);

        let r = steutel_residual(&Exponential { mean: 1.0 }, &levy, &PROBES).unwrap();
        assert!(r.residual < 1e-2, "{r:?}");
        for (x, l) in PROBES.iter().zip(&r.lhs) {
            assert!((l - (1.0 - (1.0 + x) * (-x).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn half_levy_mean_identity() {
        let rho = AtomicDistribution::point_mass(0.5).unwrap();
        let cfg = McConfig {
            n_samples: 40_000,
            n_transform_iterations: 25,
            ..McConfig::new(3)
        };
        let mu = mc_fixed_point(&rho, 1.0, &cfg).unwrap();
        let levy = levy_from_solution(&rho, &mu, 4, 40_000, 8192).unwrap();
        let m2 = eta_moments(&rho, 1.0, 2).unwrap().moments[2];
        let sd = {
            let mean = levy.mean();
            let v: f64 = levy
                .samples()
                .iter()
                .map(|x| (x - mean).powi(2))
                .sum::<f64>()
                / levy.samples().len() as f64;
            (v / levy.samples().len() as f64).sqrt()
        };
        assert!(
            (levy.mean() - 0.5 * m2).abs() < 4.0 * sd + 1e-3,
            "{}",
            levy.mean()
        );

        // the empirical solution with its own Levy sample satisfies the relation
        let r = steutel_residual(&EmpiricalCdf::new(&mu), &levy, &PROBES).unwrap();
        assert!(r.residual < 2e-2, "{r:?}");
        // but the exponential law with this Levy sample does not
        let r = steutel_residual(&Exponential { mean: 1.0 }, &levy, &PROBES).unwrap();
        assert!(r.residual > 0.05, "{r:?}");
    }

    #[test]
    fn probes_are_checked() {
        let rho = AtomicDistribution::point_mass(0.5).unwrap();
        let mu = Exponential { mean: 1.0 }.sample(1000, 1);
        let levy = levy_from_solution(&rho, &mu, 2, 1000, 512).unwrap();
        assert!(matches!(
            steutel_residual(&Exponential { mean: 1.0 }, &levy, &[0.0]),
            Err(Error::ProbeOutsideSupport(_))
        ));
        assert!(steutel_residual(&Exponential { mean: 1.0 }, &levy, &[f64::INFINITY]).is_err());
        let r = steutel_residual(&Exponential { mean: 1.0 }, &levy, &[1e-9]).unwrap();
        assert!(r.lhs[0] < 1e-12 && r.rhs[0] < 1e-6);
    }

    #[test]
    fn empirical_cdf_midpoint() {
        let s = EmpiricalSample::new(vec![1.0, 2.0, 2.0, 3.0], 0, "t").unwrap();
        let c = EmpiricalCdf::new(&s);
        assert_eq!(c.cdf(2.0), 0.5);
        assert_eq!(c.cdf(2.5), 0.75);
        assert_eq!(c.size_biased_cdf(3.0), (5.0 + 8.0) / 2.0 / 8.0);
    }
}
