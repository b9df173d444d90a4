//! Successful transmission probability (STP) analysis for cache-enabled
//! cellular networks with base-station joint transmission.
//!
//! The crate has three layers:
//!
//! * analytic evaluation of the STP under non-coherent joint
//!   transmission and under an upper bound / tight approximation for the
//!   coherent scheme ([`analytic`], built on [`specfun`] and [`quad`]);
//! * a Poisson-network Monte Carlo simulator providing ground truth for
//!   both schemes, including the exact coherent one ([`simulator`]);
//! * placement optimization over the capped simplex of per-file caching
//!   probabilities ([`optimizer`]), with content popularity and caching
//!   policies in [`catalog`].
//!
//! The math kernels are generic over the scalar type through [`Real`];
//! the aliases below fix `f64`, which is what the simulator and the CLI
//! use.

pub mod analytic;
pub mod catalog;
pub mod optimizer;
pub mod quad;
pub mod real;
pub mod simulator;
pub mod specfun;

pub use real::Real;

pub use analytic::{
    coefficient_table, edge_serving_term, edge_silenced_term, fallback_stp, file_stp, total_stp,
    AnalyticError, Scheme,
};
pub use catalog::{baseline_iidc, sample_cache_graphical, CacheRealization, CatalogError};
pub use optimizer::{
    concavity_condition, grid_search, optimize_placement, project_capped_simplex, solve_kkt,
    solve_local, OptError, SolveMethod,
};
pub use simulator::{
    classify_and_serve, estimate_fallback_stp, estimate_stp, estimate_stp_traced,
    estimate_stp_with_law, sample_ppp, sir, CacheLaw, Realization, RequestMode, ServiceAssignment,
    SimConfig, SimError, StpEstimate,
};
pub use specfun::{
    alzer_beta, gamma_lower_regularized, hypergeometric_factor, interference_exponent, SpecFunError,
};

/// Default-precision aliases for the generic core types.
pub type Catalog = catalog::Catalog<f64>;
pub type PlacementVector = catalog::PlacementVector<f64>;
pub type PathLossExponent = specfun::PathLossExponent<f64>;
pub type NetworkConfig = analytic::NetworkConfig<f64>;
pub type QuadratureSpec = analytic::QuadratureSpec;
pub type CoefficientTable = analytic::CoefficientTable<f64>;
pub type StpEvaluator = analytic::StpEvaluator<f64>;
pub type OptimizerResult = optimizer::OptimizerResult<f64>;
