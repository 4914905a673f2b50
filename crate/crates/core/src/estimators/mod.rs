//! Ensemble statistics and exponent estimation.

mod profile;
mod report;
mod series;
mod stats;

pub use profile::{autocorrelation, mean_abs_increment_profile, Transform};
pub use report::{
    analyze_exponents, estimate_exponents, failed_exponent, Estimate, ExponentAnalysis, ExponentReport,
    FitOptions, FittedSeries, ReportFlag, DEFAULT_BOOTSTRAP, DEFAULT_K_SIGMA,
};
pub use series::{StatisticKind, StatisticSeries};
pub use stats::{PathStatistics, ResamplingIndex};

pub(crate) use profile::step_means;

use crate::ensemble::PathEnsemble;
use crate::error::Result;
use crate::grid::TimeGrid;

fn single(ensemble: &PathEnsemble, grid: &TimeGrid, kind: StatisticKind) -> Result<StatisticSeries> {
    PathStatistics::compute(ensemble, grid)?.series(kind)
}

/// `E[R_t / S_t]` over paths with `S_t > 0`.
pub fn rs_series(ensemble: &PathEnsemble, grid: &TimeGrid) -> Result<StatisticSeries> {
    single(ensemble, grid, StatisticKind::RsMean)
}

/// Interquartile range of `X_t` across paths.
pub fn width_series(ensemble: &PathEnsemble, grid: &TimeGrid) -> Result<StatisticSeries> {
    single(ensemble, grid, StatisticKind::WidthIqr)
}

pub fn median_y_series(ensemble: &PathEnsemble, grid: &TimeGrid) -> Result<StatisticSeries> {
    single(ensemble, grid, StatisticKind::MedianY)
}

pub fn median_z_series(ensemble: &PathEnsemble, grid: &TimeGrid) -> Result<StatisticSeries> {
    single(ensemble, grid, StatisticKind::MedianZ)
}
