//! Per-step statistics of the increments themselves.

use serde::{Deserialize, Serialize};

use super::series::{StatisticKind, StatisticSeries};
use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Per-step ensemble means of the increments, with Neumaier-compensated
/// sums taken in path order.
pub(crate) fn step_means(ensemble: &PathEnsemble) -> Vec<f64> {
    let n_steps = ensemble.n_steps();
    let mut sum = vec![0.0; n_steps];
    let mut comp = vec![0.0; n_steps];
    for path in ensemble.paths() {
        for ((s, c), &d) in sum.iter_mut().zip(comp.iter_mut()).zip(path) {
            let t = *s + d;
            *c += if s.abs() >= d.abs() { (*s - t) + d } else { (d - t) + *s };
            *s = t;
        }
    }
    let n = ensemble.n_paths() as f64;
    sum.iter().zip(&comp).map(|(s, c)| (s + c) / n).collect()
}

/// `E|δ_t - E δ_t|` at every step `t = 1..=n_steps`, where step `t` holds
/// the increment from `X_(t-1)` to `X_t`.
pub fn mean_abs_increment_profile(ensemble: &PathEnsemble) -> Result<StatisticSeries> {
    if ensemble.n_paths() < 2 {
        return Err(Error::TooFewPaths {
            needed: 2,
            got: ensemble.n_paths(),
        });
    }
    let mean = step_means(ensemble);
    let mut acc = vec![0.0; ensemble.n_steps()];
    for path in ensemble.paths() {
        for ((a, d), m) in acc.iter_mut().zip(path).zip(&mean) {
            *a += (d - m).abs();
        }
    }
    let n = ensemble.n_paths() as f64;
    let values = acc.into_iter().map(|a| a / n).collect();
    StatisticSeries::new(
        StatisticKind::MeanAbsIncrement,
        TimeGrid::dense(ensemble.n_steps())?,
        values,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Absolute,
    Square,
}

impl Transform {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Absolute => v.abs(),
            Transform::Square => v * v,
        }
    }
}

impl std::str::FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Transform::Identity),
            "absolute" | "abs" => Ok(Transform::Absolute),
            "square" => Ok(Transform::Square),
            other => Err(Error::Format(format!("unknown transform {other:?}"))),
        }
    }
}

/// Autocorrelation of transformed increments at lags `0..=max_lag`, using a
/// single mean and variance pooled over all paths and steps.
pub fn autocorrelation(ensemble: &PathEnsemble, max_lag: usize, transform: Transform) -> Result<Vec<f64>> {
    let n = ensemble.n_steps();
    if max_lag >= n {
        return Err(Error::InvalidRange(format!(
            "max_lag {max_lag} must be below n_steps {n}"
        )));
    }
    let count = (ensemble.n_paths() * n) as f64;
    let mean = ensemble
        .increments()
        .iter()
        .map(|&v| transform.apply(v))
        .sum::<f64>()
        / count;
    let mut cov = vec![0.0; max_lag + 1];
    let mut pairs = vec![0usize; max_lag + 1];
    let mut centred = vec![0.0; n];
    for path in ensemble.paths() {
        for (c, &v) in centred.iter_mut().zip(path) {
            *c = transform.apply(v) - mean;
        }
        for (lag, (acc, np)) in cov.iter_mut().zip(pairs.iter_mut()).enumerate() {
            *acc += centred[..n - lag]
                .iter()
                .zip(&centred[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>();
            *np += n - lag;
        }
    }
    let var = cov[0] / pairs[0] as f64;
    if !(var > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(cov
        .iter()
        .zip(&pairs)
        .map(|(c, &np)| c / np as f64 / var)
        .collect())
}
