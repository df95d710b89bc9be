//! Near-best polynomial approximation by perturbing the roots of Chebyshev polynomials.
//!
//! The critical points of the approximant are the roots of a perturbed
//! Chebyshev polynomial `T_n(x, y)`; the perturbation factors `y` are solved so
//! that the integral of `T_n(x, y)` tracks a target function at group scale.

pub mod cheb;
pub mod error;
pub mod function;
pub mod perturb;
pub mod pipeline;
pub mod quadrature;
pub mod solver;
pub mod verify;

pub use cheb::{build_grid, cheb_eval, ChebEval, ChebSeries, NodalGrid};
pub use error::{Error, Result};
pub use function::{FunctionKind, FunctionSpec};
pub use perturb::{
    distortion_2pt, distortion_3pt, eval_perturbed, perturbed_roots, solve_delta, to_series, PerturbationVector,
    PerturbedRoots, RescaleMap, ThreePoint,
};
pub use solver::{
    f_inverse_1d, f_map, group_averages, solve_targets, FMap, GroupResponse, SolveConfig, SolveReport, TargetAverages,
};
pub use pipeline::{approximate, divergence_stats, rate_study, weakstar_demo, ApproxConfig, ApproxResult};
pub use verify::{run_lemma_suite, CheckResult, Status, SuiteConfig};
