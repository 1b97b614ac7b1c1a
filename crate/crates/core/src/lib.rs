//! Size-biased perpetuities `eta_sb = A eta_sb + eta`.
//!
//! Given the law of the multiplier `A` as finitely many atoms, this crate
//! decides whether a non-zero solution exists, computes it two independent
//! ways (a Laplace-exponent fixed-point iteration on a log grid, and exact
//! shot-noise resampling), and reports its moments, Levy structure, tail
//! class and the contraction behaviour of the underlying map.

pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod io;
pub mod levy;
pub mod lst;
pub mod metrics;
pub mod moments;
pub mod montecarlo;
pub mod numeric;
pub mod response;
pub mod seeds;
pub mod stats;

pub use diagnostics::{diagnose, DiagnosticsReport, MomentOrder, TailClass};
pub use distributions::{
    quantize_family, size_bias_resample, Atom, AtomicDistribution, EmpiricalSample, Exponential,
    Family, MultiplierLaw, QuantizeSource,
};
pub use error::{Error, Result};
pub use levy::{
    levy_from_solution, steutel_residual, CdfSource, EmpiricalCdf, LevyEstimate, SteutelReport,
};
pub use lst::{
    atom_at_zero, eval_lst, init_grid, iterate_once, solve, GridSpec, LstGrid, SolverConfig,
};
pub use metrics::{
    contraction_ratio, r_delta, random_law_with_mean, CharFn, ContractionReport, RDeltaConfig,
    RDeltaReport, ShotNoiseImage,
};
pub use moments::{eta_moments, sb_moments, MomentStop, MomentVector};
pub use montecarlo::{
    cross_oracle, empirical_lst, mc_fixed_point, perpetuity_residual, shot_noise_moment_check,
    shot_noise_resample, CrossOracleReport, McConfig, PerpetuityReport,
};
pub use response::{response_from_rho, rho_from_response, ResponseFunction, Step};
