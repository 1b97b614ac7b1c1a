//! Shot-noise response functions dual to a multiplier law.
//!
//! For an atomic law `rho` the response `h` is a nonincreasing step function:
//! the atom at `a` contributes a step of height `a` and length `w / (lambda a)`,
//! steps ordered by decreasing height. Its generalized inverse is
//! `h_inv(x) = lambda^-1 * sum_{a > x} w / a`, i.e. the integral of `z^-1 rho(dz)`
//! over `(x, b]`, which makes it right-continuous.

use serde::{Deserialize, Serialize};

use crate::distributions::{Atom, AtomicDistribution};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub value: f64,
    pub duration: f64,
}

/// Right-continuous nonincreasing step function with Poisson intensity `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseFunction {
    steps: Vec<Step>,
    lambda: f64,
}

impl ResponseFunction {
    /// Checks shape only (strictly decreasing positive values, positive
    /// durations, positive `lambda`); normalization is checked by
    /// [`rho_from_response`]. An empty step list is the zero response.
    pub fn new(steps: Vec<Step>, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidResponse(format!(
                "lambda {lambda} must be positive"
            )));
        }
        for s in &steps {
            if !(s.value.is_finite() && s.value > 0.0) {
                return Err(Error::InvalidResponse(format!(
                    "step value {} must be positive",
                    s.value
                )));
            }
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::InvalidResponse(format!(
                    "duration {} must be positive",
                    s.duration
                )));
            }
        }
        if steps.windows(2).any(|p| p[1].value >= p[0].value) {
            return Err(Error::InvalidResponse(
                "step values must be strictly decreasing".into(),
            ));
        }
        Ok(Self { steps, lambda })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn support_end(&self) -> f64 {
        compensated_sum(self.steps.iter().map(|s| s.duration))
    }

    /// `h(u)`; zero for `u` past the support and for `u < 0`.
    pub fn eval(&self, u: f64) -> f64 {
        if u < 0.0 {
            return 0.0;
        }
        let mut end = 0.0;
        for s in &self.steps {
            end += s.duration;
            if u < end {
                return s.value;
            }
        }
        0.0
    }

    /// `lambda * int h^q du`; equals `E A^(q-1)` of the dual law.
    pub fn power_integral(&self, q: f64) -> f64 {
        self.lambda * compensated_sum(self.steps.iter().map(|s| s.value.powf(q) * s.duration))
    }

    /// `lambda * int h log h du`; equals `E log A` of the dual law.
    pub fn entropy_integral(&self) -> f64 {
        self.lambda
            * compensated_sum(
                self.steps
                    .iter()
                    .map(|s| s.value * s.value.ln() * s.duration),
            )
    }

    /// Generalized inverse `|{u : h(u) > z}|`: zero for `z >= h(0+)`,
    /// right-continuous and nonincreasing in `z`.
    pub fn generalized_inverse(&self, z: f64) -> f64 {
        compensated_sum(
            self.steps
                .iter()
                .take_while(|s| s.value > z)
                .map(|s| s.duration),
        )
    }

    /// Corner points `(u, h(u))` tracing the step graph, for plotting.
    pub fn curve_points(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(2 * self.steps.len() + 2);
        let mut u = 0.0;
        for s in &self.steps {
            pts.push((u, s.value));
            u += s.duration;
            pts.push((u, s.value));
        }
        pts.push((u, 0.0));
        pts
    }
}

/// The response dual to `rho` at intensity `lambda`.
pub fn response_from_rho(rho: &AtomicDistribution, lambda: f64) -> Result<ResponseFunction> {
    let steps = rho
        .atoms()
        .iter()
        .rev()
        .map(|a| Step {
            value: a.location,
            duration: a.weight / (lambda * a.location),
        })
        .collect();
    ResponseFunction::new(steps, lambda)
}

/// Recover `rho(dx) = -lambda x h_inv(dx)`: one atom per step with weight
/// `lambda * value * duration`.
pub fn rho_from_response(h: &ResponseFunction) -> Result<AtomicDistribution> {
    let atoms: Vec<Atom> = h
        .steps
        .iter()
        .map(|s| Atom::new(s.value, h.lambda * s.value * s.duration))
        .collect();
    if atoms.is_empty() {
        return Err(Error::WeightSum {
            sum: 0.0,
            tolerance: crate::distributions::WEIGHT_SUM_TOLERANCE,
        });
    }
    AtomicDistribution::new(atoms)
}
