//! Probability laws on the positive half-line.
//!
//! [`AtomicDistribution`] carries the multiplier law of `A` (and any trial law
//! used by the metric code) as finitely many weighted atoms in `(0, inf)`.
//! Continuous multiplier laws enter through [`quantize_family`], which tags
//! the result with the exact [`Family`] it approximates so diagnostics can
//! report both the atomic and the family-level answer.
//!
//! [`EmpiricalSample`] is the Monte Carlo carrier: a seeded array of
//! nonnegative reals plus a provenance label.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::seeds::{fill_chunked, DEFAULT_CHUNK_SIZE};

/// Tolerance within which weights are silently renormalized.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(location: f64, weight: f64) -> Self {
        Self { location, weight }
    }
}

/// Exact continuous multiplier families that have closed-form functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Uniform law on `(0, 1]`; the solution is exponential.
    Uniform01,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform01 => "uniform01",
        }
    }

    /// Exact response function `h(u)` dual to the family.
    pub fn response(&self, u: f64) -> f64 {
        match self {
            Family::Uniform01 => (-u).exp(),
        }
    }

    /// Exact generalized inverse of [`Family::response`].
    pub fn response_inverse(&self, z: f64) -> f64 {
        match self {
            Family::Uniform01 => {
                if z >= 1.0 {
                    0.0
                } else {
                    -z.ln()
                }
            }
        }
    }

    /// Whether `x^-1 rho(dx)` is integrable at zero.
    pub fn compound_poisson(&self) -> bool {
        match self {
            Family::Uniform01 => false,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" => Ok(Family::Uniform01),
            other => Err(Error::Parse(format!("unknown family '{other}'"))),
        }
    }
}

/// The functionals of a multiplier law that the solver and moment code read.
pub trait MultiplierLaw {
    /// `g(p) = E A^p`.
    fn mellin(&self, p: f64) -> f64;
    /// `E log A`.
    fn log_moment(&self) -> f64;
    /// Largest point of the support.
    fn ess_sup(&self) -> f64;
    /// `E[1/A]`, possibly infinite.
    fn inverse_mean(&self) -> f64;
}

impl MultiplierLaw for Family {
    fn mellin(&self, p: f64) -> f64 {
        match self {
            Family::Uniform01 => {
                if p > -1.0 {
                    1.0 / (p + 1.0)
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    fn log_moment(&self) -> f64 {
        match self {
            Family::Uniform01 => -1.0,
        }
    }

    fn ess_sup(&self) -> f64 {
        match self {
            Family::Uniform01 => 1.0,
        }
    }

    fn inverse_mean(&self) -> f64 {
        match self {
            Family::Uniform01 => f64::INFINITY,
        }
    }
}

/// Finitely many weighted atoms on `(0, inf)`, sorted by location.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicDistribution {
    atoms: Vec<Atom>,
    family: Option<Family>,
}

impl AtomicDistribution {
    /// Validate and canonicalize a raw atom list: sort, merge duplicate
    /// locations, renormalize weights that are within
    /// [`WEIGHT_SUM_TOLERANCE`] of summing to one.
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for a in &atoms {
            if !(a.location.is_finite() && a.location > 0.0) {
                return Err(Error::NonPositiveLocation(a.location));
            }
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(Error::NonPositiveWeight(a.weight));
            }
        }
        let sum = compensated_sum(atoms.iter().map(|a| a.weight));
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::WeightSum {
                sum,
                tolerance: WEIGHT_SUM_TOLERANCE,
            });
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        if sum != 1.0 {
            for a in &mut merged {
                a.weight /= sum;
            }
        }
        Ok(Self {
            atoms: merged,
            family: None,
        })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(x, w)| Atom::new(x, w)).collect())
    }

    pub fn point_mass(location: f64) -> Result<Self> {
        Self::new(vec![Atom::new(location, 1.0)])
    }

    pub fn with_family(mut self, family: Option<Family>) -> Self {
        self.family = family;
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The exact family this law was quantized from, if any.
    pub fn family(&self) -> Option<Family> {
        self.family
    }

    pub fn ess_inf(&self) -> f64 {
        self.atoms[0].location
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight * a.location))
    }

    /// `E A^p` for any real `p`; `p` need not be an integer.
    pub fn moment(&self, p: f64) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight * a.location.powf(p)))
    }

    /// Size-biased law `m^-1 x nu(dx)`: same atoms, weights `w a / m`.
    pub fn size_bias(&self) -> Self {
        let m = self.mean();
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom::new(a.location, a.weight * a.location / m))
            .collect();
        Self {
            atoms,
            family: None,
        }
    }

    /// Smallest atom location `x` with `F(x) >= u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.weight;
            if u < acc {
                return a.location;
            }
        }
        self.atoms[self.atoms.len() - 1].location
    }

    /// `n` i.i.d. draws by inversion, chunked under the seeding contract.
    pub fn sample(&self, n: usize, seed: u64, chunk_size: usize) -> EmpiricalSample {
        let cum = cumulative(&self.atoms);
        let values = fill_chunked(n, chunk_size, seed, "atomic_sample", 0, |rng, _, out| {
            for v in out.iter_mut() {
                *v = invert(&cum, &self.atoms, rng.random::<f64>());
            }
        });
        EmpiricalSample {
            values,
            seed,
            provenance: format!("atomic_sample(n={n},chunk={chunk_size})"),
        }
    }

    /// Restrict to atoms satisfying `keep` and renormalize.
    pub fn restrict<F: Fn(f64) -> bool>(&self, keep: F) -> Result<Self> {
        let kept: Vec<Atom> = self
            .atoms
            .iter()
            .copied()
            .filter(|a| keep(a.location))
            .collect();
        let total: f64 = kept.iter().map(|a| a.weight).sum();
        if kept.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        Self::new(
            kept.into_iter()
                .map(|a| Atom::new(a.location, a.weight / total))
                .collect(),
        )
    }
}

impl MultiplierLaw for AtomicDistribution {
    fn mellin(&self, p: f64) -> f64 {
        self.moment(p)
    }

    fn log_moment(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight * a.location.ln()))
    }

    fn ess_sup(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].location
    }

    fn inverse_mean(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight / a.location))
    }
}

fn cumulative(atoms: &[Atom]) -> Vec<f64> {
    let mut acc = 0.0;
    atoms
        .iter()
        .map(|a| {
            acc += a.weight;
            acc
        })
        .collect()
}

fn invert(cum: &[f64], atoms: &[Atom], u: f64) -> f64 {
    let i = cum.partition_point(|&c| c <= u).min(atoms.len() - 1);
    atoms[i].location
}

/// Source for [`quantize_family`].
#[derive(Debug, Clone, PartialEq)]
pub enum QuantizeSource {
    Uniform01,
    /// `n` quantile values in `(0, inf)`, nondecreasing.
    QuantileTable(Vec<f64>),
}

/// Atomic approximation of a continuous multiplier law with `n` equal-weight atoms.
pub fn quantize_family(source: &QuantizeSource, n: usize) -> Result<AtomicDistribution> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 atoms, got {n}"
        )));
    }
    let w = 1.0 / n as f64;
    match source {
        QuantizeSource::Uniform01 => {
            let atoms = (1..=n)
                .map(|k| Atom::new((2 * k - 1) as f64 / (2 * n) as f64, w))
                .collect();
            Ok(AtomicDistribution::new(atoms)?.with_family(Some(Family::Uniform01)))
        }
        QuantizeSource::QuantileTable(q) => {
            if q.len() != n {
                return Err(Error::QuantileTable(format!(
                    "expected {n} entries, got {}",
                    q.len()
                )));
            }
            if let Some(bad) = q.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                return Err(Error::QuantileTable(format!("nonpositive quantile {bad}")));
            }
            if q.windows(2).any(|p| p[1] < p[0]) {
                return Err(Error::QuantileTable("quantiles are decreasing".into()));
            }
            AtomicDistribution::new(q.iter().map(|&x| Atom::new(x, w)).collect())
        }
    }
}

/// A seeded sample of nonnegative reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    pub seed: u64,
    pub provenance: String,
}

impl EmpiricalSample {
    pub fn new(values: Vec<f64>, seed: u64, provenance: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidSampleValue(bad));
        }
        Ok(Self {
            values,
            seed,
            provenance: provenance.into(),
        })
    }

    pub(crate) fn from_parts(values: Vec<f64>, seed: u64, provenance: String) -> Self {
        debug_assert!(!values.is_empty());
        Self {
            values,
            seed,
            provenance,
        }
    }

    pub fn constant(value: f64, n: usize) -> Result<Self> {
        Self::new(vec![value; n], 0, format!("constant({value})"))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// Raw sample moment `n^-1 sum x_i^p`.
    pub fn moment(&self, p: f64) -> f64 {
        compensated_sum(self.values.iter().map(|x| x.powf(p))) / self.values.len() as f64
    }

    /// Sample standard deviation of `f(x_i)`.
    pub fn std_of<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let n = self.values.len() as f64;
        let mean = compensated_sum(self.values.iter().map(|&x| f(x))) / n;
        let var = compensated_sum(self.values.iter().map(|&x| (f(x) - mean).powi(2)))
            / (n - 1.0).max(1.0);
        var.sqrt()
    }

    /// Multiply every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| x * factor).collect(),
            seed: self.seed,
            provenance: format!("{}*{factor}", self.provenance),
        }
    }
}

/// Draw `n_out` values from `sample` with probability proportional to value.
pub fn size_bias_resample(
    sample: &EmpiricalSample,
    n_out: usize,
    seed: u64,
) -> Result<EmpiricalSample> {
    size_bias_resample_chunked(sample, n_out, seed, DEFAULT_CHUNK_SIZE)
}

pub fn size_bias_resample_chunked(
    sample: &EmpiricalSample,
    n_out: usize,
    seed: u64,
    chunk_size: usize,
) -> Result<EmpiricalSample> {
    if n_out == 0 {
        return Err(Error::InvalidArgument("n_out must be positive".into()));
    }
    if sample.values.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroMass);
    }
    let table = WeightedAliasIndex::new(sample.values.clone())
        .map_err(|e| Error::InvalidArgument(format!("alias table: {e}")))?;
    let values = fill_chunked(
        n_out,
        chunk_size,
        seed,
        "size_bias_resample",
        0,
        |rng, _, out| {
            for v in out.iter_mut() {
                *v = sample.values[table.sample(rng)];
            }
        },
    );
    Ok(EmpiricalSample::from_parts(
        values,
        seed,
        format!("size_bias_resample(n={n_out},chunk={chunk_size})"),
    ))
}

/// Uniform resampling with replacement.
pub fn resample(
    sample: &EmpiricalSample,
    n_out: usize,
    seed: u64,
    chunk_size: usize,
) -> EmpiricalSample {
    let n = sample.values.len();
    let values = fill_chunked(n_out, chunk_size, seed, "resample", 0, |rng, _, out| {
        for v in out.iter_mut() {
            *v = sample.values[rng.random_range(0..n)];
        }
    });
    EmpiricalSample::from_parts(
        values,
        seed,
        format!("resample(n={n_out},chunk={chunk_size})"),
    )
}

/// Exponential law with the given mean; the exact solution for the uniform family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    pub mean: f64,
}

impl Exponential {
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x / self.mean).exp_m1()
        }
    }

    /// CDF of the size-biased law, Gamma(2, mean).
    pub fn size_biased_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            let y = x / self.mean;
            1.0 - (1.0 + y) * (-y).exp()
        }
    }

    /// Laplace transform `1 / (1 + mean s)`.
    pub fn lst(&self, s: f64) -> f64 {
        1.0 / (1.0 + self.mean * s)
    }

    pub fn sample(&self, n: usize, seed: u64) -> EmpiricalSample {
        let exp = rand_distr::Exp::new(1.0 / self.mean).expect("positive mean");
        let values = fill_chunked(
            n,
            DEFAULT_CHUNK_SIZE,
            seed,
            "exponential_sample",
            0,
            |rng, _, out| {
                for v in out.iter_mut() {
                    *v = exp.sample(rng);
                }
            },
        );
        EmpiricalSample {
            values,
            seed,
            provenance: format!("exponential(mean={},n={n})", self.mean),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_point() -> AtomicDistribution {
        AtomicDistribution::from_pairs(&[(0.5, 0.8), (1.5, 0.2)]).unwrap()
    }

    #[test]
    fn validate_examples() {
        let d = AtomicDistribution::from_pairs(&[(0.5, 1.0)]).unwrap();
        assert_eq!(d.atoms(), &[Atom::new(0.5, 1.0)]);
        let d = AtomicDistribution::from_pairs(&[(0.5, 0.5), (0.5, 0.5)]).unwrap();
        assert_eq!(d.atoms(), &[Atom::new(0.5, 1.0)]);
        assert_eq!(
            AtomicDistribution::from_pairs(&[(0.0, 1.0)]),
            Err(Error::NonPositiveLocation(0.0))
        );
        assert_eq!(
            AtomicDistribution::new(vec![]),
            Err(Error::EmptyDistribution)
        );
        assert!(matches!(
            AtomicDistribution::from_pairs(&[(1.0, 0.5), (2.0, 0.4)]),
            Err(Error::WeightSum { .. })
        ));
        assert!(matches!(
            AtomicDistribution::from_pairs(&[(1.0, 1.5), (2.0, -0.5)]),
            Err(Error::NonPositiveWeight(_))
        ));
    }

    #[test]
    fn validate_sorts_and_renormalizes() {
        let d = AtomicDistribution::from_pairs(&[(2.0, 0.5 + 4e-10), (1.0, 0.5)]).unwrap();
        assert_eq!(d.atoms()[0].location, 1.0);
        let total: f64 = d.atoms().iter().map(|a| a.weight).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_examples() {
        assert_eq!(AtomicDistribution::point_mass(3.0).unwrap().mean(), 3.0);
        assert!((two_point().mean() - 0.7).abs() < 1e-15);
        let u = quantize_family(&QuantizeSource::Uniform01, 512).unwrap();
        assert!((u.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn size_bias_examples() {
        let d = AtomicDistribution::point_mass(2.5).unwrap();
        assert_eq!(d.size_bias().atoms(), d.atoms());
        let d = AtomicDistribution::from_pairs(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let sb = d.size_bias();
        assert!((sb.atoms()[0].weight - 0.25).abs() < 1e-15);
        assert!((sb.atoms()[1].weight - 0.75).abs() < 1e-15);
        // twice = bias by x^2
        let twice = d.size_bias().size_bias();
        let m2 = d.moment(2.0);
        for (a, orig) in twice.atoms().iter().zip(d.atoms()) {
            assert!((a.weight - orig.weight * orig.location.powi(2) / m2).abs() < 1e-15);
        }
    }

    #[test]
    fn mellin_examples() {
        assert_eq!(two_point().mellin(0.0), 1.0);
        assert!((two_point().mellin(4.0) - 1.0625).abs() < 1e-14);
        assert!((Family::Uniform01.mellin(0.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn log_moment_examples() {
        let half = AtomicDistribution::point_mass(0.5).unwrap();
        assert!((half.log_moment() + std::f64::consts::LN_2).abs() < 1e-15);
        let expected = 0.8 * 0.5f64.ln() + 0.2 * 1.5f64.ln();
        assert!((two_point().log_moment() - expected).abs() < 1e-15);
        assert!((expected + 0.47343).abs() < 1e-5);
        assert!(AtomicDistribution::point_mass(2.0).unwrap().log_moment() > 0.0);
    }

    #[test]
    fn quantize_examples() {
        let u2 = quantize_family(&QuantizeSource::Uniform01, 2).unwrap();
        assert_eq!(u2.atoms(), &[Atom::new(0.25, 0.5), Atom::new(0.75, 0.5)]);
        assert_eq!(u2.family(), Some(Family::Uniform01));
        let u = quantize_family(&QuantizeSource::Uniform01, 512).unwrap();
        assert!((u.log_moment() + 1.0).abs() < 1e-3);
        let t = quantize_family(&QuantizeSource::QuantileTable(vec![0.5, 0.5]), 2).unwrap();
        assert_eq!(t.atoms(), &[Atom::new(0.5, 1.0)]);
        assert!(quantize_family(&QuantizeSource::QuantileTable(vec![0.5, 0.0]), 2).is_err());
        assert!(quantize_family(&QuantizeSource::QuantileTable(vec![0.7, 0.5]), 2).is_err());
        assert!(quantize_family(&QuantizeSource::Uniform01, 1).is_err());
    }

    #[test]
    fn quantized_uniform_mellin_converges_at_midpoint_rate() {
        for &p in &[0.5, 1.0, 2.0, 3.0] {
            let exact = 1.0 / (p + 1.0);
            let e64 = (quantize_family(&QuantizeSource::Uniform01, 64)
                .unwrap()
                .mellin(p)
                - exact)
                .abs();
            let e512 = (quantize_family(&QuantizeSource::Uniform01, 512)
                .unwrap()
                .mellin(p)
                - exact)
                .abs();
            // midpoint rule: error ~ C n^-2 (p = 1 is exact)
            assert!(e64 < 1e-3 && e512 < 2e-5, "p={p}: {e64} {e512}");
            if p != 1.0 {
                assert!(e512 < e64 / 20.0);
            }
        }
    }

    #[test]
    fn resample_examples() {
        let c = EmpiricalSample::constant(2.0, 100).unwrap();
        let out = size_bias_resample(&c, 50, 1).unwrap();
        assert!(out.values().iter().all(|&v| v == 2.0));
        let s = EmpiricalSample::new(vec![0.0, 1.0], 0, "t").unwrap();
        let out = size_bias_resample(&s, 1000, 2).unwrap();
        assert!(out.values().iter().all(|&v| v == 1.0));
        let z = EmpiricalSample::new(vec![0.0, 0.0], 0, "t").unwrap();
        assert_eq!(size_bias_resample(&z, 10, 2), Err(Error::ZeroMass));
    }

    #[test]
    fn size_bias_of_exponential_has_gamma2_mean() {
        let exp = Exponential { mean: 1.0 };
        // inversion sampling of Exp(1) through a fixed quantile grid
        let n = 100_000;
        let values: Vec<f64> = (0..n)
            .map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln())
            .collect();
        let s = EmpiricalSample::new(values, 0, "exp-grid").unwrap();
        let out = size_bias_resample(&s, n, 11).unwrap();
        // Gamma(2,1): mean 2, sd sqrt(2)
        let se = 2f64.sqrt() / (n as f64).sqrt();
        assert!((out.mean() - 2.0).abs() < 3.0 * se, "{}", out.mean());
        assert!((exp.size_biased_cdf(1.0) - (1.0 - 2.0 / std::f64::consts::E)).abs() < 1e-15);
    }

    #[test]
    fn resample_is_seed_deterministic() {
        let s = EmpiricalSample::new((1..=50).map(f64::from).collect(), 0, "t").unwrap();
        assert_eq!(
            size_bias_resample(&s, 500, 9).unwrap(),
            size_bias_resample(&s, 500, 9).unwrap()
        );
        assert_ne!(
            size_bias_resample(&s, 500, 9).unwrap(),
            size_bias_resample(&s, 500, 10).unwrap()
        );
    }

    #[test]
    fn empirical_sample_rejects_bad_values() {
        assert_eq!(EmpiricalSample::new(vec![], 0, ""), Err(Error::EmptySample));
        assert!(EmpiricalSample::new(vec![1.0, -1.0], 0, "").is_err());
        assert!(EmpiricalSample::new(vec![f64::NAN], 0, "").is_err());
    }

    fn arb_atomic() -> impl Strategy<Value = AtomicDistribution> {
        prop::collection::vec((0.01f64..5.0, 0.01f64..1.0), 1..8).prop_map(|v| {
            let total: f64 = v.iter().map(|p| p.1).sum();
            let pairs: Vec<(f64, f64)> = v.iter().map(|&(x, w)| (x, w / total)).collect();
            AtomicDistribution::from_pairs(&pairs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn size_bias_keeps_atoms_and_maps_mean(d in arb_atomic()) {
            let sb = d.size_bias();
            let locs: Vec<f64> = d.atoms().iter().map(|a| a.location).collect();
            let sb_locs: Vec<f64> = sb.atoms().iter().map(|a| a.location).collect();
            prop_assert_eq!(locs, sb_locs);
            let expected = d.moment(2.0) / d.mean();
            prop_assert!((sb.mean() - expected).abs() <= 1e-12 * expected);
        }

        #[test]
        fn mellin_is_log_convex(d in arb_atomic(), p1 in 0.01f64..4.0, dp in 0.01f64..4.0) {
            let p2 = p1 + dp;
            let mid = d.mellin(0.5 * (p1 + p2));
            prop_assert!(mid * mid <= d.mellin(p1) * d.mellin(p2) * (1.0 + 1e-12));
        }

        #[test]
        fn size_bias_resample_mean_tends_to_ratio(values in prop::collection::vec(0.0f64..10.0, 2..40), seed in any::<u64>()) {
            prop_assume!(values.iter().any(|&v| v > 0.1));
            let s = EmpiricalSample::new(values.clone(), 0, "p").unwrap();
            let n = 40_000;
            let out = size_bias_resample(&s, n, seed).unwrap();
            let sum: f64 = values.iter().sum();
            let target = values.iter().map(|v| v * v).sum::<f64>() / sum;
            let var = values.iter().map(|v| v / sum * (v - target).powi(2)).sum::<f64>();
            let se = (var / n as f64).sqrt();
            prop_assert!((out.mean() - target).abs() <= 4.0 * se + 1e-12);
        }
    }
}
