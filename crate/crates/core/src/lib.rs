//! Simulation of self-similar stochastic processes and independent
//! estimation of their Hurst (H), Joseph (J), latent (L) and Moses (M)
//! scaling exponents.

pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod fitting;
pub mod generators;
pub mod grid;
pub mod io;
pub mod market;
pub mod quantile;
pub mod rng;

pub use ensemble::{partial_sums, PartialSums, PathEnsemble};
pub use error::{Error, Exponent, Result};
pub use generators::{generate, ProcessSpec};
pub use grid::{make_time_grid, TimeGrid};
pub use quantile::quantile;
pub use rng::RngStream;
pub use estimators::{
    estimate_exponents, ExponentReport, FitOptions, StatisticKind, StatisticSeries,
};
pub use fitting::{convergence_timescale, fit_ftc_free, fit_ftc_known, FitResult};
