//! Integer moments of the solution from the binomial recursion obtained by
//! raising `eta_sb = A eta_sb + eta` to integer powers.

use serde::{Deserialize, Serialize};

use crate::diagnostics::existence_gate;
use crate::distributions::MultiplierLaw;
use crate::error::{Error, Result};
use crate::numeric::{binomial, CompensatedSum};

/// Largest order the recursion will compute.
pub const MAX_MOMENT_ORDER: u32 = 64;

/// Distance below 1 that `g(n)` must keep for the division to be trusted.
pub const MARGINAL_GAP: f64 = 1e-12;

/// Why the recursion stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentStop {
    /// All requested orders were computed.
    Requested,
    /// `g(order) >= 1`: the moment of order `order + 1` is infinite.
    Infinite { order: u32 },
    /// `g(order)` lies within [`MARGINAL_GAP`] below 1.
    Marginal { order: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub mean: f64,
    /// `moments[n] = E X^n` for `n = 0..=max_order`.
    pub moments: Vec<f64>,
    pub max_order: u32,
    pub stop: MomentStop,
}

impl MomentVector {
    pub fn marginal(&self) -> bool {
        matches!(self.stop, MomentStop::Marginal { .. })
    }

    /// Lyapunov: `m_n^2 <= m_(n-1) m_(n+1)` up to a relative `tol`.
    pub fn is_log_convex(&self, tol: f64) -> bool {
        self.moments
            .windows(3)
            .all(|w| w[1] * w[1] <= w[0] * w[2] * (1.0 + tol))
    }

    /// The same moments for mean `c * mean`.
    pub fn rescaled(&self, c: f64) -> Self {
        let moments = self
            .moments
            .iter()
            .zip(0..)
            .map(|(&v, n)| v * c.powi(n))
            .collect();
        Self {
            mean: self.mean * c,
            moments,
            ..self.clone()
        }
    }
}

fn g_table<L: MultiplierLaw + ?Sized>(rho: &L, upto: u32) -> Vec<f64> {
    (0..=upto)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                rho.mellin(f64::from(k))
            }
        })
        .collect()
}

/// Moments `E eta^n`, `n <= n_max`, of the solution with mean `m`.
///
/// `E eta^(n+1) = sum_{k<n} C(n,k) g(k) m_(k+1) m_(n-k) / (1 - g(n))`.
/// The recursion stops early at the first `n` with `g(n) >= 1 - MARGINAL_GAP`
/// and reports `max_order = n`.
pub fn eta_moments<L: MultiplierLaw + ?Sized>(rho: &L, m: f64, n_max: u32) -> Result<MomentVector> {
    let (ok, e_log_a) = existence_gate(rho);
    if !ok {
        return Err(Error::ExistenceGate { e_log_a });
    }
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidArgument(format!("mean {m} must be positive")));
    }
    if n_max > MAX_MOMENT_ORDER {
        return Err(Error::InvalidArgument(format!(
            "moment order {n_max} exceeds {MAX_MOMENT_ORDER}"
        )));
    }
    let g = g_table(rho, n_max);
    let mut mom = vec![1.0];
    if n_max >= 1 {
        mom.push(m);
    }
    let mut stop = MomentStop::Requested;
    for n in 1..n_max {
        let gn = g[n as usize];
        if gn >= 1.0 {
            stop = MomentStop::Infinite { order: n };
            break;
        }
        if gn >= 1.0 - MARGINAL_GAP {
            stop = MomentStop::Marginal { order: n };
            break;
        }
        let mut acc = CompensatedSum::new();
        for k in 0..n {
            let (k_, n_) = (k as usize, n as usize);
            acc.add(binomial(n, k) as f64 * g[k_] * mom[k_ + 1] * mom[n_ - k_]);
        }
        mom.push(acc.value() / (1.0 - gn));
    }
    let max_order = (mom.len() - 1) as u32;
    Ok(MomentVector {
        mean: m,
        moments: mom,
        max_order,
        stop,
    })
}

/// Moments of the size-biased law: `E eta_sb^n = E eta^(n+1) / m`.
pub fn sb_moments(eta: &MomentVector) -> Result<MomentVector> {
    if eta.max_order < 1 {
        return Err(Error::InvalidArgument("size-biasing needs the mean".into()));
    }
    let moments: Vec<f64> = eta.moments[1..].iter().map(|v| v / eta.mean).collect();
    let mean = moments.get(1).copied().unwrap_or(f64::NAN);
    Ok(MomentVector {
        mean,
        moments,
        max_order: eta.max_order - 1,
        stop: eta.stop,
    })
}

/// Largest relative defect of `E eta_sb^n = sum_k C(n,k) g(k) E eta_sb^k E eta^(n-k)`
/// over the orders available in `eta`.
pub fn perpetuity_defect<L: MultiplierLaw + ?Sized>(rho: &L, eta: &MomentVector) -> Result<f64> {
    let sb = sb_moments(eta)?;
    let g = g_table(rho, sb.max_order);
    let mut worst: f64 = 0.0;
    for n in 0..=sb.max_order {
        let mut acc = CompensatedSum::new();
        for k in 0..=n {
            acc.add(
                binomial(n, k) as f64
                    * g[k as usize]
                    * sb.moments[k as usize]
                    * eta.moments[(n - k) as usize],
            );
        }
        let lhs = sb.moments[n as usize];
        worst = worst.max((acc.value() - lhs).abs() / lhs);
    }
    Ok(worst)
}
