//! The `r_Delta` distance between laws of equal mean,
//! `int_0^inf s^(-Delta-1) |phi_1(s) - phi_2(s)| ds` with characteristic
//! functions `phi`, and the contraction factor of the perpetuity map under it.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{AtomicDistribution, EmpiricalSample, Exponential, MultiplierLaw};
use crate::error::{Error, Result};
use crate::montecarlo::{shot_noise_resample_chunked, McConfig};
use crate::numeric::{compensated_sum, log_space};
use crate::response::response_from_rho;
use crate::seeds::{derive_seed, fill_chunked};
use crate::stats::ecf;

/// Relative tolerance on the equal-mean precondition.
pub const MEAN_TOLERANCE: f64 = 1e-6;

/// Input distances at or below this are treated as zero by [`contraction_ratio`].
pub const ZERO_DISTANCE: f64 = 1e-10;

/// A law on `[0, inf)` with computable characteristic function.
pub trait CharFn: Sync {
    fn cf(&self, s: f64) -> Complex64;
    fn mean(&self) -> f64;
    /// `E X^2`, possibly infinite.
    fn second_moment(&self) -> f64;
}

impl CharFn for AtomicDistribution {
    fn cf(&self, s: f64) -> Complex64 {
        let (mut re, mut im) = (
            Vec::with_capacity(self.len()),
            Vec::with_capacity(self.len()),
        );
        for a in self.atoms() {
            let (sin, cos) = (s * a.location).sin_cos();
            re.push(a.weight * cos);
            im.push(a.weight * sin);
        }
        Complex64::new(compensated_sum(re), compensated_sum(im))
    }

    fn mean(&self) -> f64 {
        AtomicDistribution::mean(self)
    }

    fn second_moment(&self) -> f64 {
        self.moment(2.0)
    }
}

impl CharFn for EmpiricalSample {
    fn cf(&self, s: f64) -> Complex64 {
        ecf(self.values(), s)
    }

    fn mean(&self) -> f64 {
        EmpiricalSample::mean(self)
    }

    fn second_moment(&self) -> f64 {
        self.moment(2.0)
    }
}

impl CharFn for Exponential {
    fn cf(&self, s: f64) -> Complex64 {
        1.0 / Complex64::new(1.0, -s * self.mean)
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn second_moment(&self) -> f64 {
        2.0 * self.mean * self.mean
    }
}

/// The exact image of `theta` under one step of the perpetuity map:
/// `log phi(t) = sum_j (w_j / a_j) (phi_theta(a_j t) - 1)`.
pub struct ShotNoiseImage<'a, T: CharFn + ?Sized> {
    pub rho: &'a AtomicDistribution,
    pub theta: &'a T,
}

impl<T: CharFn + ?Sized> CharFn for ShotNoiseImage<'_, T> {
    fn cf(&self, t: f64) -> Complex64 {
        let (mut re, mut im) = (
            Vec::with_capacity(self.rho.len()),
            Vec::with_capacity(self.rho.len()),
        );
        for a in self.rho.atoms() {
            let z = (self.theta.cf(a.location * t) - 1.0) * (a.weight / a.location);
            re.push(z.re);
            im.push(z.im);
        }
        Complex64::new(compensated_sum(re), compensated_sum(im)).exp()
    }

    fn mean(&self) -> f64 {
        self.theta.mean()
    }

    fn second_moment(&self) -> f64 {
        let m = self.theta.mean();
        self.rho.mean() * self.theta.second_moment() + m * m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RDeltaConfig {
    pub delta: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub quad_points: usize,
}

impl Default for RDeltaConfig {
    fn default() -> Self {
        Self {
            delta: 1.5,
            s_lo: 1e-4,
            s_hi: 1e4,
            quad_points: 2048,
        }
    }
}

impl RDeltaConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 1.0 && self.delta < 2.0) {
            return Err(Error::DeltaOutOfRange(self.delta));
        }
        if !(self.s_lo > 0.0 && self.s_hi > self.s_lo && self.s_hi.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < s_lo < s_hi, got [{}, {}]",
                self.s_lo, self.s_hi
            )));
        }
        if self.quad_points < 2 {
            return Err(Error::InvalidGrid(
                "need at least two quadrature points".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RDeltaReport {
    pub value: f64,
    /// Bound on the mass below `s_lo`, from second moments.
    pub truncation_low: f64,
    /// Bound on the mass above `s_hi`.
    pub truncation_high: f64,
    /// `|r(2N - 1 points) - r(N points)| / r(2N - 1 points)`, zero when both vanish.
    pub doubling_error: f64,
}

fn check_means(m1: f64, m2: f64) -> Result<()> {
    if (m1 - m2).abs() > MEAN_TOLERANCE * m1.abs().max(m2.abs()) {
        return Err(Error::MeanMismatch(m1, m2));
    }
    Ok(())
}

fn trapezoid(u_step: f64, f: &[f64]) -> f64 {
    let n = f.len();
    u_step * (compensated_sum(f.iter().copied()) - 0.5 * (f[0] + f[n - 1]))
}

/// `r_Delta(nu1, nu2)` by the trapezoid rule in `log s`.
pub fn r_delta<A: CharFn + ?Sized, B: CharFn + ?Sized>(
    nu1: &A,
    nu2: &B,
    cfg: &RDeltaConfig,
) -> Result<RDeltaReport> {
    cfg.validate()?;
    check_means(nu1.mean(), nu2.mean())?;
    let d = cfg.delta;
    let n = cfg.quad_points;
    let fine = log_space(cfg.s_lo, cfg.s_hi, 2 * n - 1);
    // in u = log s the integrand is s^-Delta |phi_1 - phi_2|
    let f: Vec<f64> = fine
        .par_iter()
        .map(|&s| s.powf(-d) * (nu1.cf(s) - nu2.cf(s)).norm())
        .collect();
    let h_fine = (cfg.s_hi.ln() - cfg.s_lo.ln()) / (2 * n - 2) as f64;
    let coarse: Vec<f64> = f.iter().step_by(2).copied().collect();
    let value = trapezoid(2.0 * h_fine, &coarse);
    let refined = trapezoid(h_fine, &f);
    let doubling_error = if refined == 0.0 {
        (value - refined).abs()
    } else {
        (value - refined).abs() / refined
    };
    let m2 = nu1.second_moment() + nu2.second_moment();
    Ok(RDeltaReport {
        value,
        truncation_low: 0.5 * m2 * cfg.s_lo.powf(2.0 - d) / (2.0 - d),
        truncation_high: 2.0 * cfg.s_hi.powf(-d) / d,
        doubling_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub q: f64,
    pub r_before: f64,
    /// Distance between the exact images.
    pub r_after: f64,
    pub ratio: f64,
    /// `E A^(q-1) = lambda int h^q`, the contraction modulus.
    pub bound_g: f64,
    pub doubling_error: f64,
    /// The inputs are at distance at most [`ZERO_DISTANCE`]; `ratio` is set to zero.
    pub zero_distance: bool,
    /// Distance between resampled images, when a Monte Carlo config is given.
    pub r_after_mc: Option<f64>,
    pub ratio_mc: Option<f64>,
}

/// The `index`-th random law with one to four atoms and mean exactly `m`,
/// reproducible from `seed`.
pub fn random_law_with_mean(seed: u64, index: u64, m: f64) -> AtomicDistribution {
    let mut rng = crate::seeds::stream(seed, "random_law", index, 0);
    let k = rng.random_range(1..=4);
    let raw: Vec<(f64, f64)> = (0..k)
        .map(|_| (rng.random_range(0.1..3.0), rng.random_range(0.05..1.0)))
        .collect();
    let total: f64 = raw.iter().map(|p| p.1).sum();
    let mean: f64 = raw.iter().map(|p| p.0 * p.1 / total).sum();
    let pairs: Vec<(f64, f64)> = raw
        .iter()
        .map(|&(x, w)| (x * m / mean, w / total))
        .collect();
    AtomicDistribution::from_pairs(&pairs).expect("positive atoms")
}

/// Draw both laws by inversion from shared uniforms, push both through one
/// shot-noise step with the same seed, and rescale each to mean `m`.
fn coupled_images(
    rho: &AtomicDistribution,
    theta1: &AtomicDistribution,
    theta2: &AtomicDistribution,
    mc: &McConfig,
) -> Result<(EmpiricalSample, EmpiricalSample)> {
    let u = fill_chunked(
        mc.n_samples,
        mc.chunk_size,
        mc.master_seed,
        "contraction_uniforms",
        0,
        |rng, _, out| {
            for v in out.iter_mut() {
                *v = rng.random::<f64>();
            }
        },
    );
    let h = response_from_rho(rho, 1.0)?;
    let seed = derive_seed(mc.master_seed, "contraction_shot_noise", 0, 0);
    let image = |theta: &AtomicDistribution| -> Result<EmpiricalSample> {
        let xs = EmpiricalSample::new(
            u.iter().map(|&v| theta.quantile(v)).collect(),
            mc.master_seed,
            "coupled",
        )?;
        let out = shot_noise_resample_chunked(&xs, &h, seed, mc.n_samples, mc.chunk_size)?;
        let mean = out.mean();
        Ok(if mean > 0.0 {
            out.scaled(theta.mean() / mean)
        } else {
            out
        })
    };
    Ok((image(theta1)?, image(theta2)?))
}

/// One-step contraction of `r_q` under the perpetuity map.
pub fn contraction_ratio(
    rho: &AtomicDistribution,
    theta1: &AtomicDistribution,
    theta2: &AtomicDistribution,
    q: f64,
    cfg: &RDeltaConfig,
    mc: Option<&McConfig>,
) -> Result<ContractionReport> {
    if !(q > 1.0 && q < 2.0) {
        return Err(Error::DeltaOutOfRange(q));
    }
    check_means(theta1.mean(), theta2.mean())?;
    let bound_g = rho.mellin(q - 1.0);
    if !(bound_g < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "E A^(q-1) = {bound_g} is not below 1"
        )));
    }
    let cfg = RDeltaConfig { delta: q, ..*cfg };
    let before = r_delta(theta1, theta2, &cfg)?;
    let after = r_delta(
        &ShotNoiseImage { rho, theta: theta1 },
        &ShotNoiseImage { rho, theta: theta2 },
        &cfg,
    )?;
    let zero_distance = before.value <= ZERO_DISTANCE;
    let ratio_of = |r: f64| if zero_distance { 0.0 } else { r / before.value };
    let r_after_mc = match mc {
        Some(mc) => {
            let (a, b) = coupled_images(rho, theta1, theta2, mc)?;
            Some(r_delta(&a, &b, &cfg)?.value)
        }
        None => None,
    };
    Ok(ContractionReport {
        q,
        r_before: before.value,
        r_after: after.value,
        ratio: ratio_of(after.value),
        bound_g,
        doubling_error: before.doubling_error.max(after.doubling_error),
        zero_distance,
        r_after_mc,
        ratio_mc: r_after_mc.map(ratio_of),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{quantize_family, QuantizeSource};
    use proptest::prelude::*;

    fn d(pairs: &[(f64, f64)]) -> AtomicDistribution {
        AtomicDistribution::from_pairs(pairs).unwrap()
    }

    fn small() -> RDeltaConfig {
        RDeltaConfig {
            quad_points: 512,
            ..RDeltaConfig::default()
        }
    }

    /// Random law with mean exactly 1: atoms rescaled by their mean.
    fn arb_mean_one() -> impl Strategy<Value = AtomicDistribution> {
        prop::collection::vec((0.1f64..3.0, 0.05f64..1.0), 1..5).prop_map(|v| {
            let total: f64 = v.iter().map(|p| p.1).sum();
            let mean: f64 = v.iter().map(|p| p.0 * p.1 / total).sum();
            let pairs: Vec<(f64, f64)> = v.iter().map(|&(x, w)| (x / mean, w / total)).collect();
            AtomicDistribution::from_pairs(&pairs).unwrap()
        })
    }

    #[test]
    fn identity_is_zero() {
        let nu = d(&[(0.5, 0.5), (1.5, 0.5)]);
        assert_eq!(r_delta(&nu, &nu, &small()).unwrap().value, 0.0);
    }

    #[test]
    fn preconditions() {
        let a = d(&[(1.0, 1.0)]);
        assert!(matches!(
            r_delta(&a, &d(&[(2.0, 1.0)]), &small()),
            Err(Error::MeanMismatch(..))
        ));
        let bad = RDeltaConfig {
            delta: 2.0,
            ..small()
        };
        assert!(matches!(
            r_delta(&a, &a, &bad),
            Err(Error::DeltaOutOfRange(_))
        ));
        let half = d(&[(0.5, 1.0)]);
        assert!(contraction_ratio(&half, &a, &a, 2.5, &small(), None).is_err());
        assert!(contraction_ratio(&d(&[(1.5, 1.0)]), &a, &a, 1.5, &small(), None).is_err());
    }

    #[test]
    fn point_mass_against_exponential_is_stable() {
        let r = r_delta(
            &d(&[(1.0, 1.0)]),
            &Exponential { mean: 1.0 },
            &RDeltaConfig::default(),
        )
        .unwrap();
        assert!(r.value > 0.0);
        assert!(r.doubling_error < 1e-3, "{r:?}");
        assert!(r.truncation_low < 5e-2 && r.truncation_high < 1e-5);
    }

    #[test]
    fn image_of_exponential_under_uniform_is_itself() {
        // the exact family maps Exp(1) to itself; the quantized one nearly so
        let rho = quantize_family(&QuantizeSource::Uniform01, 4096).unwrap();
        let e = Exponential { mean: 1.0 };
        let img = ShotNoiseImage {
            rho: &rho,
            theta: &e,
        };
        for &s in &[0.1, 1.0, 10.0] {
            assert!((img.cf(s) - e.cf(s)).norm() < 1e-3, "s={s}");
        }
        assert!((img.second_moment() - 2.0).abs() < 1e-3);
    }

    #[test]
    fn random_laws_have_requested_mean() {
        for i in 0..20 {
            let l = random_law_with_mean(5, i, 2.5);
            assert!((l.mean() - 2.5).abs() < 1e-12);
            assert_eq!(l, random_law_with_mean(5, i, 2.5));
        }
    }

    #[test]
    fn zero_distance_is_flagged() {
        let rho = d(&[(0.5, 1.0)]);
        let t = d(&[(1.0, 1.0)]);
        let r = contraction_ratio(&rho, &t, &t, 1.5, &small(), None).unwrap();
        assert!(r.zero_distance);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn contraction_on_reference_pair() {
        let rho = quantize_family(&QuantizeSource::Uniform01, 512).unwrap();
        let t1 = d(&[(1.0, 1.0)]);
        let t2 = d(&[(0.5, 0.5), (1.5, 0.5)]);
        let mc = McConfig {
            n_samples: 10_000,
            ..McConfig::new(7)
        };
        let r = contraction_ratio(&rho, &t1, &t2, 1.5, &small(), Some(&mc)).unwrap();
        assert!((r.bound_g - 2.0 / 3.0).abs() < 1e-3);
        assert!(r.ratio <= r.bound_g, "{r:?}");
        assert!(r.ratio_mc.unwrap() <= r.bound_g + 0.05, "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn metric_axioms(a in arb_mean_one(), b in arb_mean_one(), c in arb_mean_one()) {
            let cfg = small();
            let ab = r_delta(&a, &b, &cfg).unwrap().value;
            let ba = r_delta(&b, &a, &cfg).unwrap().value;
            let bc = r_delta(&b, &c, &cfg).unwrap().value;
            let ac = r_delta(&a, &c, &cfg).unwrap().value;
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1e-300));
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn half_contracts(a in arb_mean_one(), b in arb_mean_one()) {
            let rho = d(&[(0.5, 1.0)]);
            let r = contraction_ratio(&rho, &a, &b, 1.5, &small(), None).unwrap();
            prop_assert!(r.zero_distance || r.ratio <= r.bound_g + 1e-9, "{:?}", r);
        }
    }
}
