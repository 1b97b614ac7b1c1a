//! Deterministic solution of the Laplace fixed-point equation.
//!
//! The unknown is the Laplace exponent `psi = -log phi` of the solution on a
//! log-spaced grid. Starting from `psi_0(s) = m s` (the point mass at `m`),
//! each sweep applies
//!
//! ```text
//! psi_{n+1}(s) = sum_j (w_j / a_j) (1 - exp(-psi_n(s a_j)))
//! ```
//!
//! Off-grid values `psi_n(s a_j)` come from linear interpolation in `log s`.
//! Below the grid the exact first-order law `psi(s) = m s` is used; above it,
//! `psi` is continued with its last slope in `log s` and the grid is flagged.
//! The iterates decrease monotonically to the fixed point.

use serde::{Deserialize, Serialize};

use crate::distributions::{AtomicDistribution, MultiplierLaw};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            s_min: 1e-3,
            s_max: 1e3,
            points: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            tol: 1e-13,
            max_iter: 100_000,
        }
    }
}

/// Laplace exponent sampled on a log grid, plus solver bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LstGrid {
    s: Vec<f64>,
    psi: Vec<f64>,
    log_s_min: f64,
    log_step: f64,
    pub mean_target: f64,
    pub atom_at_zero: f64,
    pub iterations: usize,
    /// Sup-norm of the last update.
    pub residual: f64,
    pub converged: bool,
    /// Set when some update read `psi` beyond `s_max`.
    pub extrapolated: bool,
}

impl LstGrid {
    pub fn s_points(&self) -> &[f64] {
        &self.s
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn phi(&self) -> Vec<f64> {
        self.psi.iter().map(|p| (-p).exp()).collect()
    }

    pub fn s_min(&self) -> f64 {
        self.s[0]
    }

    pub fn s_max(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    /// Position of `s` in grid units.
    fn position(&self, s: f64) -> f64 {
        (s.ln() - self.log_s_min) / self.log_step
    }

    /// `psi(s)` with the interpolation and extension rules of the solver.
    pub fn psi_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s < self.s[0] {
            return self.mean_target * s;
        }
        interpolate(&self.psi, self.position(s))
    }

    /// Whether `psi` is nonnegative, nondecreasing and concave in `s` on the
    /// grid. Chord slopes may increase by a relative `slope_tol`: log-linear
    /// interpolation puts small convex kinks at the nodes.
    pub fn shape_ok(&self, slope_tol: f64) -> bool {
        let n = self.s.len();
        if self.psi.iter().any(|&p| p < 0.0) || self.psi.windows(2).any(|w| w[1] < w[0]) {
            return false;
        }
        (1..n - 1).all(|i| {
            let left = (self.psi[i] - self.psi[i - 1]) / (self.s[i] - self.s[i - 1]);
            let right = (self.psi[i + 1] - self.psi[i]) / (self.s[i + 1] - self.s[i]);
            right <= left * (1.0 + slope_tol)
        })
    }

    /// `sup_s |psi(s) - (T psi)(s)|` at the log-midpoints between grid nodes,
    /// a measure of how far the interpolant is from solving the equation off
    /// the nodes.
    pub fn midpoint_defect(&self, rho: &AtomicDistribution) -> f64 {
        self.s
            .windows(2)
            .map(|w| {
                let s = (w[0] * w[1]).sqrt();
                (self.psi_at(s) - self.apply_at(rho, s)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// One application of the fixed-point map at an arbitrary point.
    pub fn apply_at(&self, rho: &AtomicDistribution, s: f64) -> f64 {
        rho.atoms()
            .iter()
            .map(|a| a.weight / a.location * -(-self.psi_at(s * a.location)).exp_m1())
            .sum()
    }
}

/// Linear interpolation at fractional index `t`; beyond the last node the
/// last segment is continued with its slope.
fn interpolate(psi: &[f64], t: f64) -> f64 {
    let last = psi.len() - 1;
    let k = (t.floor().max(0.0) as usize).min(last - 1);
    let frac = t - k as f64;
    psi[k] + frac * (psi[k + 1] - psi[k])
}

/// Starting grid `psi_0(s) = m s`.
pub fn init_grid(m: f64, spec: GridSpec) -> Result<LstGrid> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidArgument(format!("mean {m} must be positive")));
    }
    if !(spec.s_min > 0.0 && spec.s_max > spec.s_min && spec.s_max.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "need 0 < s_min < s_max, got [{}, {}]",
            spec.s_min, spec.s_max
        )));
    }
    if spec.points < 16 {
        return Err(Error::InvalidGrid(format!(
            "need at least 16 points, got {}",
            spec.points
        )));
    }
    let s = crate::numeric::log_space(spec.s_min, spec.s_max, spec.points);
    let psi = s.iter().map(|x| m * x).collect();
    Ok(LstGrid {
        s,
        psi,
        log_s_min: spec.s_min.ln(),
        log_step: (spec.s_max.ln() - spec.s_min.ln()) / (spec.points - 1) as f64,
        mean_target: m,
        atom_at_zero: 0.0,
        iterations: 0,
        residual: f64::INFINITY,
        converged: false,
        extrapolated: false,
    })
}

/// Precomputed per-atom interpolation offsets for a fixed grid.
///
/// On a uniform grid in `log s` the point `s_i a_j` sits at index
/// `i + log(a_j) / step`, so the integer shift and the interpolation weight
/// depend only on the atom. Terms that fall below `s_min` use `psi = m s` and
/// never change, so they are summed once into `base`.
struct Kernel {
    coef: Vec<f64>,
    shift: Vec<f64>,
    first: Vec<usize>,
    base: Vec<f64>,
    extrapolates: bool,
}

impl Kernel {
    fn new(grid: &LstGrid, rho: &AtomicDistribution) -> Self {
        let g = grid.s.len();
        let mut base = vec![0.0; g];
        let mut coef = Vec::with_capacity(rho.len());
        let mut shift = Vec::with_capacity(rho.len());
        let mut first = Vec::with_capacity(rho.len());
        let mut extrapolates = false;
        for a in rho.atoms() {
            let c = a.weight / a.location;
            let t = a.location.ln() / grid.log_step;
            for (i, b) in base.iter_mut().enumerate() {
                if grid.s[i] * a.location < grid.s[0] {
                    *b += c * -(-grid.mean_target * grid.s[i] * a.location).exp_m1();
                }
            }
            if t > 0.0 {
                extrapolates = true;
            }
            coef.push(c);
            shift.push(t);
            first.push(
                grid.s
                    .iter()
                    .position(|&s| s * a.location >= grid.s[0])
                    .unwrap_or(g),
            );
        }
        Self {
            coef,
            shift,
            first,
            base,
            extrapolates,
        }
    }

    fn apply(&self, grid: &LstGrid, out: &mut [f64]) {
        out.copy_from_slice(&self.base);
        for ((&c, &t), &first) in self.coef.iter().zip(&self.shift).zip(&self.first) {
            for (i, o) in out.iter_mut().enumerate().skip(first) {
                let p = interpolate(&grid.psi, i as f64 + t);
                *o += c * -(-p).exp_m1();
            }
        }
    }
}

/// One sweep of the fixed-point map.
pub fn iterate_once(grid: &LstGrid, rho: &AtomicDistribution) -> LstGrid {
    let kernel = Kernel::new(grid, rho);
    step(grid, &kernel)
}

fn step(grid: &LstGrid, kernel: &Kernel) -> LstGrid {
    let mut psi = vec![0.0; grid.psi.len()];
    kernel.apply(grid, &mut psi);
    let residual = psi
        .iter()
        .zip(&grid.psi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    LstGrid {
        psi,
        residual,
        iterations: grid.iterations + 1,
        extrapolated: grid.extrapolated || kernel.extrapolates,
        ..grid.clone()
    }
}

/// Iterate from `psi_0 = m s` until the sup-norm update drops below `tol`.
///
/// Hitting `max_iter` is not an error: the grid comes back with
/// `converged == false`.
pub fn solve(rho: &AtomicDistribution, m: f64, cfg: &SolverConfig) -> Result<LstGrid> {
    let (exists, e_log_a) = crate::diagnostics::existence_gate(rho);
    if !exists {
        return Err(Error::ExistenceGate { e_log_a });
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol {} must be positive",
            cfg.tol
        )));
    }
    let mut grid = init_grid(m, cfg.grid)?;
    grid.atom_at_zero = atom_at_zero(rho);
    let kernel = Kernel::new(&grid, rho);
    let mut next = grid.clone();
    let mut scratch = vec![0.0; grid.psi.len()];
    while grid.iterations < cfg.max_iter {
        kernel.apply(&grid, &mut scratch);
        let residual = scratch
            .iter()
            .zip(&grid.psi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut next.psi, &mut scratch);
        next.residual = residual;
        next.iterations = grid.iterations + 1;
        next.extrapolated = kernel.extrapolates;
        std::mem::swap(&mut grid, &mut next);
        if residual < cfg.tol {
            grid.converged = true;
            break;
        }
    }
    Ok(grid)
}

/// `phi(s) = exp(-psi(s))` read off a solved grid.
pub fn eval_lst(grid: &LstGrid, s: f64) -> f64 {
    (-grid.psi_at(s)).exp()
}

/// Mass of the solution at zero: the root in `[0, 1)` of
/// `c = exp(-K (1 - c))` with `K = E[1/A]`; zero when `K` is infinite.
pub fn atom_at_zero<L: MultiplierLaw + ?Sized>(rho: &L) -> f64 {
    let k = rho.inverse_mean();
    if !k.is_finite() {
        return 0.0;
    }
    assert!(k > 1.0, "E[1/A] = {k} must exceed 1 when E log A < 0");
    let f = |c: f64| c - (-k * (1.0 - c)).exp();
    let df = |c: f64| 1.0 - k * (-k * (1.0 - c)).exp();
    // f is concave with f(0) < 0 and a positive maximum at 1 - ln K / K.
    let (mut lo, mut hi) = (0.0, 1.0 - k.ln() / k);
    let mut c = 0.0;
    for _ in 0..200 {
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        let newton = c - fc / df(c);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - c).abs() <= 1e-16 * next.max(1e-300) {
            return next;
        }
        c = next;
    }
    c
}
