//! Exact shot-noise resampling.
//!
//! For a step response with steps `(a_j, d_j)` at intensity `lambda`, the
//! shot-noise sum `sum_i xi_i h(tau_i)` is compound Poisson: the number of
//! shots is Poisson with mean `lambda * sum_j d_j`, and each shot lands in
//! step `j` with probability proportional to `d_j` and contributes `a_j xi`.
//! One draw therefore costs O(number of shots), not O(number of steps).

use rand::Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::diagnostics::existence_gate;
use crate::distributions::{
    resample, size_bias_resample_chunked, AtomicDistribution, EmpiricalSample,
};
use crate::error::{Error, Result};
use crate::lst::{eval_lst, LstGrid};
use crate::numeric::{log_space, CompensatedSum};
use crate::response::{response_from_rho, ResponseFunction};
use crate::seeds::{derive_seed, fill_chunked, DEFAULT_CHUNK_SIZE};
use crate::stats::{ecf_distance, ks_two_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub n_transform_iterations: usize,
    pub master_seed: u64,
    pub chunk_size: usize,
}

impl McConfig {
    /// 200 000 samples, 40 transform steps, default chunking.
    pub fn new(master_seed: u64) -> Self {
        Self {
            n_samples: 200_000,
            n_transform_iterations: 40,
            master_seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }
}

struct ShotTable {
    values: Vec<f64>,
    pick: Option<WeightedAliasIndex<f64>>,
    count: Option<Poisson<f64>>,
}

impl ShotTable {
    fn new(h: &ResponseFunction) -> Result<Self> {
        let rate = h.lambda() * h.support_end();
        if h.steps().is_empty() || rate == 0.0 {
            return Ok(Self {
                values: Vec::new(),
                pick: None,
                count: None,
            });
        }
        let pick = WeightedAliasIndex::new(h.steps().iter().map(|s| s.duration).collect())
            .map_err(|e| Error::InvalidArgument(format!("alias table: {e}")))?;
        let count = Poisson::new(rate)
            .map_err(|e| Error::InvalidArgument(format!("poisson rate {rate}: {e}")))?;
        Ok(Self {
            values: h.steps().iter().map(|s| s.value).collect(),
            pick: Some(pick),
            count: Some(count),
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R, theta: &[f64]) -> f64 {
        let (Some(pick), Some(count)) = (&self.pick, &self.count) else {
            return 0.0;
        };
        let shots = count.sample(rng) as u64;
        let mut total = 0.0;
        for _ in 0..shots {
            let a = self.values[pick.sample(rng)];
            total += a * theta[rng.random_range(0..theta.len())];
        }
        total
    }
}

fn transform(
    theta: &EmpiricalSample,
    table: &ShotTable,
    n_out: usize,
    master: u64,
    iteration: u64,
    chunk_size: usize,
) -> Vec<f64> {
    let xi = theta.values();
    fill_chunked(
        n_out,
        chunk_size,
        master,
        "shot_noise",
        iteration,
        |rng, _, out| {
            for v in out.iter_mut() {
                *v = table.draw(rng, xi);
            }
        },
    )
}

/// One application of the shot-noise transform with `xi` drawn from `theta`
/// with replacement; as many outputs as inputs.
pub fn shot_noise_resample(
    theta: &EmpiricalSample,
    h: &ResponseFunction,
    seed: u64,
) -> Result<EmpiricalSample> {
    shot_noise_resample_chunked(theta, h, seed, theta.len(), DEFAULT_CHUNK_SIZE)
}

pub fn shot_noise_resample_chunked(
    theta: &EmpiricalSample,
    h: &ResponseFunction,
    seed: u64,
    n_out: usize,
    chunk_size: usize,
) -> Result<EmpiricalSample> {
    if theta.is_empty() || n_out == 0 {
        return Err(Error::EmptySample);
    }
    let table = ShotTable::new(h)?;
    let values = transform(theta, &table, n_out, seed, 0, chunk_size);
    Ok(EmpiricalSample::from_parts(
        values,
        seed,
        format!("shot_noise(n={n_out},chunk={chunk_size})"),
    ))
}

/// Iterate the transform from the constant sample `m`; `observe` sees the
/// sample after every step (1-based).
///
/// The transform preserves the mean only in expectation, so the sample mean
/// performs a random walk across steps. Each iterate is rescaled to mean
/// exactly `m`; an all-zero iterate is left as is.
pub fn mc_fixed_point_observed<F>(
    rho: &AtomicDistribution,
    m: f64,
    cfg: &McConfig,
    mut observe: F,
) -> Result<EmpiricalSample>
where
    F: FnMut(usize, &EmpiricalSample),
{
    let (ok, e_log_a) = existence_gate(rho);
    if !ok {
        return Err(Error::ExistenceGate { e_log_a });
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidArgument(format!("mean {m} must be positive")));
    }
    if cfg.n_samples == 0 {
        return Err(Error::EmptySample);
    }
    let table = ShotTable::new(&response_from_rho(rho, 1.0)?)?;
    let mut theta = EmpiricalSample::constant(m, cfg.n_samples)?;
    for it in 1..=cfg.n_transform_iterations {
        let mut values = transform(
            &theta,
            &table,
            cfg.n_samples,
            cfg.master_seed,
            it as u64,
            cfg.chunk_size,
        );
        let mean = CompensatedSum::from_iter(values.iter().copied()).value() / values.len() as f64;
        if mean > 0.0 {
            let f = m / mean;
            values.iter_mut().for_each(|v| *v *= f);
        }
        theta = EmpiricalSample::from_parts(
            values,
            cfg.master_seed,
            format!(
                "mc_fixed_point(m={m},n={},iterations={it},chunk={})",
                cfg.n_samples, cfg.chunk_size
            ),
        );
        observe(it, &theta);
    }
    Ok(theta)
}

pub fn mc_fixed_point(rho: &AtomicDistribution, m: f64, cfg: &McConfig) -> Result<EmpiricalSample> {
    mc_fixed_point_observed(rho, m, cfg, |_, _| {})
}

/// Fixed characteristic-function grid used by [`perpetuity_residual`].
pub fn ecf_grid() -> Vec<f64> {
    log_space(0.05, 20.0, 24)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerpetuityReport {
    pub ks_stat: f64,
    pub p_value: f64,
    /// Two-sample KS critical value at the 1% level.
    pub critical_1pct: f64,
    pub ecf_distance: f64,
    pub n: usize,
}

/// Compare `eta_sb` with `A eta_sb' + eta` built from independent resamples
/// of `mu`.
pub fn perpetuity_residual(
    mu: &EmpiricalSample,
    rho: &AtomicDistribution,
    seed: u64,
    chunk_size: usize,
) -> Result<PerpetuityReport> {
    let n = mu.len();
    if n < 2 {
        return Err(Error::EmptySample);
    }
    let left = size_bias_resample_chunked(
        mu,
        n,
        derive_seed(seed, "perpetuity_left", 0, 0),
        chunk_size,
    )?;
    let sb =
        size_bias_resample_chunked(mu, n, derive_seed(seed, "perpetuity_sb", 0, 0), chunk_size)?;
    let a = rho.sample(n, derive_seed(seed, "perpetuity_a", 0, 0), chunk_size);
    let eta = resample(mu, n, derive_seed(seed, "perpetuity_eta", 0, 0), chunk_size);
    let right: Vec<f64> = sb
        .values()
        .iter()
        .zip(a.values())
        .zip(eta.values())
        .map(|((s, a), e)| a * s + e)
        .collect();
    let ks = ks_two_sample(left.values(), &right);
    Ok(PerpetuityReport {
        ks_stat: ks.statistic,
        p_value: ks.p_value,
        critical_1pct: ks.critical(0.01),
        ecf_distance: ecf_distance(left.values(), &right, &ecf_grid()),
        n,
    })
}

/// `n^-1 sum exp(-s x_i)` at each `s`.
pub fn empirical_lst(sample: &EmpiricalSample, s_grid: &[f64]) -> Vec<f64> {
    empirical_lst_with_se(sample, s_grid)
        .into_iter()
        .map(|(v, _)| v)
        .collect()
}

/// Empirical LST with its standard error at each `s`.
pub fn empirical_lst_with_se(sample: &EmpiricalSample, s_grid: &[f64]) -> Vec<(f64, f64)> {
    let n = sample.len() as f64;
    s_grid
        .iter()
        .map(|&s| {
            if s == 0.0 {
                return (1.0, 0.0);
            }
            let (mut a, mut b) = (CompensatedSum::new(), CompensatedSum::new());
            for &x in sample.values() {
                let e = (-s * x).exp();
                a.add(e);
                b.add(e * e);
            }
            let mean = a.value() / n;
            let var = ((b.value() / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
            (mean, (var / n).sqrt())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossOracleReport {
    pub s: Vec<f64>,
    pub mc: Vec<f64>,
    pub lst: Vec<f64>,
    /// Monte Carlo standard error at each `s`.
    pub mc_se: Vec<f64>,
    /// `|phi_G - phi_coarse|` at each `s`, a conservative grid-error estimate.
    pub grid_error: Vec<f64>,
    pub sup_distance: f64,
    /// Largest `|mc - lst| / (3 (mc_se + grid_error))`; the check passes below 1.
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Number of points in the cross-oracle grid.
pub const CROSS_ORACLE_POINTS: usize = 32;

/// Compare a Monte Carlo fixed point with the LST solution on
/// [`CROSS_ORACLE_POINTS`] log-spaced points of `[0.01, 100] / m`.
/// `coarse` is the same problem solved on a coarser grid.
pub fn cross_oracle(
    sample: &EmpiricalSample,
    fine: &LstGrid,
    coarse: &LstGrid,
) -> CrossOracleReport {
    let m = fine.mean_target;
    let s = log_space(1e-2 / m, 1e2 / m, CROSS_ORACLE_POINTS);
    let mc_pairs = empirical_lst_with_se(sample, &s);
    let lst: Vec<f64> = s.iter().map(|&x| eval_lst(fine, x)).collect();
    let grid_error: Vec<f64> = s
        .iter()
        .zip(&lst)
        .map(|(&x, l)| (eval_lst(coarse, x) - l).abs())
        .collect();
    let mut sup_distance: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for i in 0..s.len() {
        let d = (mc_pairs[i].0 - lst[i]).abs();
        sup_distance = sup_distance.max(d);
        let tol = 3.0 * (mc_pairs[i].1 + grid_error[i]);
        worst_ratio = worst_ratio.max(if tol > 0.0 {
            d / tol
        } else if d > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    CrossOracleReport {
        mc: mc_pairs.iter().map(|p| p.0).collect(),
        mc_se: mc_pairs.iter().map(|p| p.1).collect(),
        s,
        lst,
        grid_error,
        sup_distance,
        worst_ratio,
        pass: worst_ratio < 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub p: f64,
    /// `lambda * int h^p`, exact for a step response.
    pub response_integral: f64,
    /// `n^-1 sum xi^p` over the input sample.
    pub input_moment: f64,
    /// Sufficient condition for a finite `p`-th moment of the shot-noise sum.
    pub finite: bool,
    /// `p`-th sample moment of one resample of size `cfg.n_samples`.
    pub estimate: f64,
    /// The same on the first half of that resample.
    pub estimate_half: f64,
}

pub fn shot_noise_moment_check(
    theta: &EmpiricalSample,
    h: &ResponseFunction,
    p: f64,
    cfg: &McConfig,
) -> Result<MomentCheck> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must be positive")));
    }
    let response_integral = h.power_integral(p);
    let input_moment = theta.moment(p);
    let out =
        shot_noise_resample_chunked(theta, h, cfg.master_seed, cfg.n_samples, cfg.chunk_size)?;
    let half = cfg.n_samples / 2;
    let estimate_half = if half > 0 {
        CompensatedSum::from_iter(out.values()[..half].iter().map(|x| x.powf(p))).value()
            / half as f64
    } else {
        f64::NAN
    };
    Ok(MomentCheck {
        p,
        response_integral,
        input_moment,
        finite: response_integral.is_finite() && input_moment.is_finite(),
        estimate: out.moment(p),
        estimate_half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{quantize_family, Exponential, QuantizeSource};
    use crate::response::Step;
    use crate::stats::ks_one_sample;

    fn small(seed: u64) -> McConfig {
        McConfig {
            n_samples: 20_000,
            n_transform_iterations: 25,
            master_seed: seed,
            chunk_size: 4096,
        }
    }

    #[test]
    fn empty_response_gives_zeros() {
        let h = ResponseFunction::new(vec![], 1.0).unwrap();
        let theta = EmpiricalSample::constant(1.0, 100).unwrap();
        let out = shot_noise_resample(&theta, &h, 1).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_box_gives_poisson_one() {
        let h = ResponseFunction::new(
            vec![Step {
                value: 1.0,
                duration: 1.0,
            }],
            1.0,
        )
        .unwrap();
        let theta = EmpiricalSample::constant(1.0, 50_000).unwrap();
        let out = shot_noise_resample(&theta, &h, 9).unwrap();
        let n = out.len() as f64;
        let mean = out.mean();
        let var = out.std_of(|x| x).powi(2);
        assert!((mean - 1.0).abs() < 4.0 / n.sqrt());
        // Var of the sample variance of Poisson(1) is about (mu4 - 1) / n = 3 / n
        assert!((var - 1.0).abs() < 4.0 * (3.0 / n).sqrt());
        assert!(out.values().iter().all(|v| v.fract() == 0.0));
    }

    #[test]
    fn one_step_preserves_mean() {
        for rho in [
            AtomicDistribution::point_mass(0.5).unwrap(),
            quantize_family(&QuantizeSource::Uniform01, 64).unwrap(),
            AtomicDistribution::from_pairs(&[(0.5, 0.8), (1.5, 0.2)]).unwrap(),
        ] {
            let h = response_from_rho(&rho, 1.0).unwrap();
            let theta = Exponential { mean: 2.0 }.sample(40_000, 3);
            let out = shot_noise_resample(&theta, &h, 4).unwrap();
            let se = out.std_of(|x| x) / (out.len() as f64).sqrt();
            assert!(
                (out.mean() - theta.mean()).abs() < 4.0 * se,
                "{} vs {}",
                out.mean(),
                theta.mean()
            );
        }
    }

    #[test]
    fn deterministic_and_chunk_dependent() {
        let rho = AtomicDistribution::point_mass(0.5).unwrap();
        let a = mc_fixed_point(&rho, 1.0, &small(5)).unwrap();
        let b = mc_fixed_point(&rho, 1.0, &small(5)).unwrap();
        assert_eq!(a.values(), b.values());
        let c = mc_fixed_point(
            &rho,
            1.0,
            &McConfig {
                chunk_size: 1000,
                ..small(5)
            },
        )
        .unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn uniform_fixed_point_is_exponential() {
        let rho = quantize_family(&QuantizeSource::Uniform01, 512).unwrap();
        let mut means = Vec::new();
        let out =
            mc_fixed_point_observed(&rho, 1.0, &small(11), |_, s| means.push(s.mean())).unwrap();
        assert_eq!(means.len(), 25);
        assert!(means.iter().all(|x| (x - 1.0).abs() < 1e-12));
        let ks = ks_one_sample(out.values(), |x| Exponential { mean: 1.0 }.cdf(x));
        assert!(!ks.rejects(0.01), "{ks:?}");
    }

    #[test]
    fn half_fixed_point_has_atom_at_zero() {
        let rho = AtomicDistribution::point_mass(0.5).unwrap();
        let out = mc_fixed_point(&rho, 1.0, &small(12)).unwrap();
        let n = out.len() as f64;
        let frac = out.values().iter().filter(|&&v| v < 1e-9).count() as f64 / n;
        let c = 0.20319;
        assert!(
            (frac - c).abs() < 4.0 * (c * (1.0 - c) / n).sqrt(),
            "{frac}"
        );
    }

    #[test]
    fn gate_refuses() {
        let rho = AtomicDistribution::point_mass(1.0).unwrap();
        assert!(matches!(
            mc_fixed_point(&rho, 1.0, &small(1)),
            Err(Error::ExistenceGate { .. })
        ));
    }

    #[test]
    fn perpetuity_identity_and_negative_control() {
        let rho = quantize_family(&QuantizeSource::Uniform01, 512).unwrap();
        let mu = Exponential { mean: 1.0 }.sample(20_000, 21);
        let r = perpetuity_residual(&mu, &rho, 22, 4096).unwrap();
        assert!(r.ks_stat < 1.5 * r.critical_1pct, "{r:?}");
        let r = perpetuity_residual(&mu, &AtomicDistribution::point_mass(1.0).unwrap(), 22, 4096)
            .unwrap();
        assert!(r.ks_stat > r.critical_1pct, "{r:?}");
    }

    #[test]
    fn empirical_lst_examples() {
        let c = EmpiricalSample::constant(2.0, 10).unwrap();
        let v = empirical_lst(&c, &[0.0, 0.5, 3.0]);
        assert_eq!(v[0], 1.0);
        assert!((v[1] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v[2] - (-6.0f64).exp()).abs() < 1e-15);
        let e = Exponential { mean: 1.0 }.sample(20_000, 2);
        let (v, se) = empirical_lst_with_se(&e, &[1.0])[0];
        assert!((v - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn moment_check_examples() {
        let h = response_from_rho(&AtomicDistribution::point_mass(0.5).unwrap(), 1.0).unwrap();
        let theta = Exponential { mean: 1.0 }.sample(10_000, 5);
        let cfg = McConfig {
            n_samples: 40_000,
            ..McConfig::new(6)
        };
        let r = shot_noise_moment_check(&theta, &h, 2.0, &cfg).unwrap();
        assert!((r.response_integral - 0.5).abs() < 1e-15);
        assert!(r.finite);
        assert!((r.estimate / r.estimate_half - 1.0).abs() < 0.1);
        let r = shot_noise_moment_check(&theta, &h, 1.0, &cfg).unwrap();
        assert!((r.response_integral - 1.0).abs() < 1e-15);
    }
}
