//! Resampling paths with replacement to get per-point variances and
//! parameter standard errors.

use rayon::prelude::*;

use super::{fit_model, fit_weights, FitResult, FtcModel, ParamErrors, SolverSettings};
use crate::quantile::iqr;
use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::estimators::{PathStatistics, ResamplingIndex, StatisticKind, StatisticSeries};
use crate::grid::TimeGrid;
use crate::rng::RngStream;

/// Replicate `r` draws from stream `RESERVED_STREAM_BASE + r`, disjoint from
/// the per-path generator streams.
pub const RESERVED_STREAM_BASE: u64 = 1 << 63;

/// Largest tolerated fraction of failed replicates.
const MAX_FAILED_FRACTION: f64 = 0.2;

/// IQR of the standard normal distribution.
const NORMAL_IQR: f64 = 1.348_979_500_392_163_5;

/// Resampled series for several statistics, sharing one set of resamples.
#[derive(Debug, Clone)]
pub struct BootstrapReplicates {
    kinds: Vec<StatisticKind>,
    /// `values[k][r]` is replicate `r` of statistic `kinds[k]`; `None` marks
    /// a degenerate resample.
    values: Vec<Vec<Option<Vec<f64>>>>,
}

/// Multiplicities of each path in replicate `r`.
pub(crate) fn resample_counts(n_paths: usize, seed: u64, r: usize) -> Vec<u32> {
    let mut stream = RngStream::new(seed, RESERVED_STREAM_BASE + r as u64);
    let mut counts = vec![0u32; n_paths];
    for _ in 0..n_paths {
        counts[stream.index(n_paths)] += 1;
    }
    counts
}

pub fn bootstrap_replicates(
    index: &ResamplingIndex<'_>,
    kinds: &[StatisticKind],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapReplicates> {
    if replicates < 2 {
        return Err(Error::InvalidRange(format!(
            "bootstrap needs at least 2 replicates, got {replicates}"
        )));
    }
    let n = index.stats().n_paths();
    let per_replicate: Vec<Vec<Option<Vec<f64>>>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let counts = resample_counts(n, seed, r);
            kinds.iter().map(|&k| index.series_values(k, &counts)).collect()
        })
        .collect();
    let values = (0..kinds.len())
        .map(|k| per_replicate.iter().map(|rep| rep[k].clone()).collect())
        .collect();
    Ok(BootstrapReplicates {
        kinds: kinds.to_vec(),
        values,
    })
}

impl BootstrapReplicates {
    pub fn replicates(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    fn of(&self, kind: StatisticKind) -> Result<&[Option<Vec<f64>>]> {
        self.kinds
            .iter()
            .position(|&k| k == kind)
            .map(|i| self.values[i].as_slice())
            .ok_or_else(|| Error::Format(format!("no replicates for {}", kind.name())))
    }

    /// Sample variance over the non-degenerate replicates at each grid point.
    pub fn variances(&self, kind: StatisticKind) -> Result<Vec<f64>> {
        let reps: Vec<&Vec<f64>> = self.of(kind)?.iter().flatten().collect();
        if reps.len() < 2 {
            return Err(Error::BootstrapFailures {
                failed: self.replicates() - reps.len(),
                total: self.replicates(),
            });
        }
        let m = reps.len() as f64;
        let points = reps[0].len();
        Ok((0..points)
            .map(|g| {
                let mean = reps.iter().map(|r| r[g]).sum::<f64>() / m;
                reps.iter().map(|r| (r[g] - mean).powi(2)).sum::<f64>() / (m - 1.0)
            })
            .collect())
    }
}

/// A weighted fit with bootstrap standard errors.
#[derive(Debug, Clone)]
pub struct BootstrapFit {
    pub series: StatisticSeries,
    pub fit: FitResult,
    pub replicates: usize,
    pub failed: usize,
}

/// Attaches bootstrap variances to `series`, fits it, and refits every
/// replicate with the same weights to get parameter standard errors.
pub fn fit_with_bootstrap(
    series: &StatisticSeries,
    reps: &BootstrapReplicates,
    model: FtcModel,
    settings: &SolverSettings,
) -> Result<BootstrapFit> {
    let kind = series.kind();
    let series = series.clone().with_variances(reps.variances(kind)?)?;
    let weights = fit_weights(&series);
    let mut fit = fit_model(series.times(), series.values(), &weights, model, settings)?;
    let fits: Vec<Option<FitResult>> = reps
        .of(kind)?
        .par_iter()
        .map(|rep| {
            rep.as_ref()
                .and_then(|v| fit_model(series.times(), v, &weights, model, settings).ok())
        })
        .collect();
    let ok: Vec<&FitResult> = fits.iter().flatten().collect();
    let total = fits.len();
    let failed = total - ok.len();
    if failed as f64 > MAX_FAILED_FRACTION * total as f64 || ok.len() < 2 {
        return Err(Error::BootstrapFailures { failed, total });
    }
    // spread of the replicate estimates as IQR / 1.349, the standard
    // deviation for normal scatter, so a few replicates that land on a
    // different local minimum do not dominate
    let sd = |f: fn(&FitResult) -> f64| {
        let v: Vec<f64> = ok.iter().map(|r| f(r)).collect();
        iqr(&v).map_or(f64::NAN, |w| w / NORMAL_IQR)
    };
    fit.stderr = Some(ParamErrors {
        omega: sd(|r| r.omega),
        a: sd(|r| r.a),
        b: sd(|r| r.b),
        c: sd(|r| r.c),
    });
    Ok(BootstrapFit {
        series,
        fit,
        replicates: total,
        failed,
    })
}

/// Free-model fit of one statistic with `replicates` bootstrap resamples.
pub fn bootstrap_stderr(
    ensemble: &PathEnsemble,
    kind: StatisticKind,
    grid: &TimeGrid,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapFit> {
    let stats = PathStatistics::compute(ensemble, grid)?;
    let series = stats.series(kind)?;
    let index = ResamplingIndex::new(&stats, &[kind])?;
    let reps = bootstrap_replicates(&index, &[kind], replicates, seed)?;
    fit_with_bootstrap(&series, &reps, FtcModel::Free, &SolverSettings::default())
}
