//! Classification of a multiplier law before any solving.
//!
//! Everything here is a finite sum over the atoms plus exact comparisons of
//! the largest atom against 1. When the law was quantized from an exact
//! family, the family-level answers ride alongside the atomic ones: the
//! quantized uniform law has its largest atom below 1 and finite `E[1/A]`,
//! while the exact uniform law sits on the boundary `ess sup = 1` and is not
//! compound Poisson.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::distributions::{AtomicDistribution, Family, MultiplierLaw};

/// Default cap for [`max_integer_moment_order`].
pub const DEFAULT_MOMENT_CAP: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailClass {
    /// `ess sup > 1`: no exponential moment.
    NoExponentialMoment,
    /// `ess sup = 1`: some exponential moment, characteristic function not entire.
    ExponentialMomentNotEntire,
    /// `ess sup < 1`: entire characteristic function.
    EntireCharacteristicFunction,
}

impl TailClass {
    pub fn from_ess_sup(ess_sup: f64) -> Self {
        if ess_sup > 1.0 {
            TailClass::NoExponentialMoment
        } else if ess_sup == 1.0 {
            TailClass::ExponentialMomentNotEntire
        } else {
            TailClass::EntireCharacteristicFunction
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TailClass::NoExponentialMoment => "NoExponentialMoment",
            TailClass::ExponentialMomentNotEntire => "ExponentialMomentNotEntire",
            TailClass::EntireCharacteristicFunction => "EntireCharacteristicFunction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentOrder {
    Finite(u32),
    Unbounded,
}

impl std::fmt::Display for MomentOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MomentOrder::Finite(n) => write!(f, "{n}"),
            MomentOrder::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// `(E log A < 0, E log A)`. The boundary `E log A = 0` admits only the zero
/// solution and is rejected.
pub fn existence_gate<L: MultiplierLaw + ?Sized>(rho: &L) -> (bool, f64) {
    let e = rho.log_moment();
    (e < 0.0, e)
}

pub fn tail_class<L: MultiplierLaw + ?Sized>(rho: &L) -> TailClass {
    TailClass::from_ess_sup(rho.ess_sup())
}

/// Moment determinacy of the solution holds iff `rho` lives on `(0, 1]`.
pub fn determinate<L: MultiplierLaw + ?Sized>(rho: &L) -> bool {
    rho.ess_sup() <= 1.0
}

/// Largest integer `n <= n_cap` with `E A^n < 1`, so that `E eta^(n+1)` is
/// finite; [`MomentOrder::Unbounded`] when `ess sup <= 1`.
pub fn max_integer_moment_order<L: MultiplierLaw + ?Sized>(rho: &L, n_cap: u32) -> MomentOrder {
    if rho.ess_sup() <= 1.0 {
        return MomentOrder::Unbounded;
    }
    // g is log-convex with g(0) = 1, so {n >= 1 : g(n) < 1} is an initial run.
    let mut order = 0;
    for n in 1..=n_cap {
        if rho.mellin(f64::from(n)) < 1.0 {
            order = n;
        } else {
            break;
        }
    }
    MomentOrder::Finite(order)
}

/// Finite atomic laws bounded away from zero are always compound Poisson.
pub fn compound_poisson_check(rho: &AtomicDistribution) -> bool {
    rho.inverse_mean().is_finite()
}

/// The same classification evaluated on the exact family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDiagnostics {
    pub family: Family,
    pub e_log_a: f64,
    pub ess_sup: f64,
    pub tail_class: TailClass,
    pub determinate: bool,
    pub compound_poisson: bool,
    pub max_integer_moment_order: MomentOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub exists: bool,
    pub e_log_a: f64,
    pub ess_sup: f64,
    pub tail_class: TailClass,
    pub determinate: bool,
    /// `None` when no non-zero solution exists.
    pub max_integer_moment_order: Option<MomentOrder>,
    pub compound_poisson: bool,
    /// `E[1/A]`.
    pub inverse_mean: f64,
    pub family: Option<FamilyDiagnostics>,
}

pub fn diagnose(rho: &AtomicDistribution) -> DiagnosticsReport {
    let (exists, e_log_a) = existence_gate(rho);
    let family = rho.family().map(|f| FamilyDiagnostics {
        family: f,
        e_log_a: f.log_moment(),
        ess_sup: f.ess_sup(),
        tail_class: tail_class(&f),
        determinate: determinate(&f),
        compound_poisson: f.compound_poisson(),
        max_integer_moment_order: max_integer_moment_order(&f, DEFAULT_MOMENT_CAP),
    });
    DiagnosticsReport {
        exists,
        e_log_a,
        ess_sup: rho.ess_sup(),
        tail_class: tail_class(rho),
        determinate: determinate(rho),
        max_integer_moment_order: exists.then(|| max_integer_moment_order(rho, DEFAULT_MOMENT_CAP)),
        compound_poisson: compound_poisson_check(rho),
        inverse_mean: rho.inverse_mean(),
        family,
    }
}

impl DiagnosticsReport {
    /// Flat `key -> scalar` view; family answers carry a `family_` prefix.
    pub fn to_flat(&self) -> Vec<(String, Value)> {
        let order = |o: &Option<MomentOrder>| match o {
            Some(MomentOrder::Finite(n)) => json!(n),
            Some(MomentOrder::Unbounded) => json!("unbounded"),
            None => Value::Null,
        };
        let mut rows = vec![
            ("exists".to_string(), json!(self.exists)),
            ("e_log_a".into(), json!(self.e_log_a)),
            ("ess_sup".into(), json!(self.ess_sup)),
            ("tail_class".into(), json!(self.tail_class.name())),
            ("determinate".into(), json!(self.determinate)),
            (
                "max_integer_moment_order".into(),
                order(&self.max_integer_moment_order),
            ),
            ("compound_poisson".into(), json!(self.compound_poisson)),
            ("inverse_mean".into(), json!(self.inverse_mean)),
        ];
        if let Some(f) = &self.family {
            rows.extend([
                ("family".to_string(), json!(f.family.name())),
                ("family_e_log_a".into(), json!(f.e_log_a)),
                ("family_ess_sup".into(), json!(f.ess_sup)),
                ("family_tail_class".into(), json!(f.tail_class.name())),
                ("family_determinate".into(), json!(f.determinate)),
                ("family_compound_poisson".into(), json!(f.compound_poisson)),
                (
                    "family_max_integer_moment_order".into(),
                    order(&Some(f.max_integer_moment_order)),
                ),
            ]);
        }
        rows
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.to_flat().into_iter().collect::<Map<_, _>>())
    }

    pub fn to_table(&self) -> String {
        let rows = self.to_flat();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| {
                let v = match v {
                    Value::String(s) => s.clone(),
                    Value::Null => "-".into(),
                    other => other.to_string(),
                };
                format!("{k:<width$}  {v}\n")
            })
            .collect()
    }
}
