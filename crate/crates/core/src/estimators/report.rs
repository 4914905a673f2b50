//! Combining the four fitted series into exponent estimates.

use serde::{Deserialize, Serialize};

use super::series::{StatisticKind, StatisticSeries};
use super::stats::{PathStatistics, ResamplingIndex};
use crate::ensemble::PathEnsemble;
use crate::error::{Error, Exponent, Result};
use crate::fitting::{bootstrap_replicates, fit_with_bootstrap, FitResult, FtcModel, SolverSettings, DEFAULT_MIN_DECAY};
use crate::generators::ProcessSpec;
use crate::grid::TimeGrid;

pub const DEFAULT_BOOTSTRAP: usize = 200;
pub const DEFAULT_K_SIGMA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Estimate { value, stderr }
    }
}

impl std::fmt::Display for Estimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4}({:.4})", self.value, self.stderr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFlag {
    /// The ensemble comes from a fractional Lévy process with `J < ½`, where
    /// the R/S statistic does not measure `J`.
    RsUnreliable,
}

/// Estimated `(J, L, M, H)`; the sum rule check is derived on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ReportJson", from = "ReportJson")]
pub struct ExponentReport {
    pub joseph: Estimate,
    pub latent: Estimate,
    pub moses: Estimate,
    pub hurst: Estimate,
    pub k_sigma: f64,
    pub flags: Vec<ReportFlag>,
}

impl ExponentReport {
    /// `J + L + M - 1`, with errors added in quadrature.
    pub fn sum_check(&self) -> Estimate {
        Estimate::new(
            self.joseph.value + self.latent.value + self.moses.value - 1.0,
            (self.joseph.stderr.powi(2) + self.latent.stderr.powi(2) + self.moses.stderr.powi(2)).sqrt(),
        )
    }

    /// Combined standard error of `H - (J + L + M - 1)`.
    pub fn combined_stderr(&self) -> f64 {
        (self.hurst.stderr.powi(2) + self.sum_check().stderr.powi(2)).sqrt()
    }

    pub fn consistent(&self) -> bool {
        (self.hurst.value - self.sum_check().value).abs() <= self.k_sigma * self.combined_stderr()
    }

    pub fn get(&self, exponent: Exponent) -> Estimate {
        match exponent {
            Exponent::Joseph => self.joseph,
            Exponent::Latent => self.latent,
            Exponent::Moses => self.moses,
            Exponent::Hurst => self.hurst,
        }
    }

    pub fn has_flag(&self, flag: ReportFlag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    #[serde(rename = "J")]
    joseph: Estimate,
    #[serde(rename = "L")]
    latent: Estimate,
    #[serde(rename = "M")]
    moses: Estimate,
    #[serde(rename = "H")]
    hurst: Estimate,
    #[serde(default)]
    sum_check: Option<Estimate>,
    #[serde(default)]
    consistent: Option<bool>,
    k_sigma: f64,
    #[serde(default)]
    flags: Vec<ReportFlag>,
}

impl From<ExponentReport> for ReportJson {
    fn from(r: ExponentReport) -> Self {
        ReportJson {
            sum_check: Some(r.sum_check()),
            consistent: Some(r.consistent()),
            joseph: r.joseph,
            latent: r.latent,
            moses: r.moses,
            hurst: r.hurst,
            k_sigma: r.k_sigma,
            flags: r.flags,
        }
    }
}

impl From<ReportJson> for ExponentReport {
    fn from(j: ReportJson) -> Self {
        ExponentReport {
            joseph: j.joseph,
            latent: j.latent,
            moses: j.moses,
            hurst: j.hurst,
            k_sigma: j.k_sigma,
            flags: j.flags,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Bootstrap replicates, at least 2.
    pub bootstrap: usize,
    /// Master seed for the bootstrap resamples.
    pub seed: u64,
    pub k_sigma: f64,
    /// See [`SolverSettings::min_decay`].
    pub min_decay: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            bootstrap: DEFAULT_BOOTSTRAP,
            seed: 0,
            k_sigma: DEFAULT_K_SIGMA,
            min_decay: DEFAULT_MIN_DECAY,
        }
    }
}

/// One fitted statistic: the weighted series and its fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSeries {
    pub series: StatisticSeries,
    pub fit: FitResult,
    pub failed_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentAnalysis {
    pub report: ExponentReport,
    pub fits: Vec<FittedSeries>,
}

impl ExponentAnalysis {
    pub fn fit(&self, kind: StatisticKind) -> Option<&FittedSeries> {
        self.fits.iter().find(|f| f.series.kind() == kind)
    }
}

fn exponent_of(kind: StatisticKind) -> Exponent {
    match kind {
        StatisticKind::RsMean => Exponent::Joseph,
        StatisticKind::MedianZ => Exponent::Latent,
        StatisticKind::MedianY => Exponent::Moses,
        _ => Exponent::Hurst,
    }
}

/// All four statistics, bootstrap-weighted free fits, and the report.
pub fn analyze_exponents(ensemble: &PathEnsemble, grid: &TimeGrid, options: &FitOptions) -> Result<ExponentAnalysis> {
    let stats = PathStatistics::compute(ensemble, grid)?;
    let mut series = Vec::with_capacity(4);
    for kind in StatisticKind::SCALING {
        series.push(stats.series(kind).map_err(|e| e.during(exponent_of(kind)))?);
    }
    let index = ResamplingIndex::new(&stats, &StatisticKind::SCALING)?;
    let reps = bootstrap_replicates(&index, &StatisticKind::SCALING, options.bootstrap, options.seed)?;
    drop(index);
    drop(stats);
    let settings = SolverSettings {
        min_decay: options.min_decay,
    };
    let mut fits = Vec::with_capacity(4);
    for s in &series {
        let kind = s.kind();
        let b = fit_with_bootstrap(s, &reps, FtcModel::Free, &settings).map_err(|e| e.during(exponent_of(kind)))?;
        fits.push(FittedSeries {
            series: b.series,
            fit: b.fit,
            failed_replicates: b.failed,
        });
    }
    let omega = |k: StatisticKind| {
        let f = &fits.iter().find(|f| f.series.kind() == k).expect("fitted").fit;
        Estimate::new(f.omega, f.stderr.map_or(f64::NAN, |e| e.omega))
    };
    let joseph = omega(StatisticKind::RsMean);
    let y = omega(StatisticKind::MedianY);
    let z = omega(StatisticKind::MedianZ);
    let hurst = omega(StatisticKind::WidthIqr);
    let moses = Estimate::new(y.value - 0.5, y.stderr);
    let latent = Estimate::new(
        (z.value - 2.0 * moses.value + 1.0) / 2.0,
        (z.stderr.powi(2) / 4.0 + moses.stderr.powi(2)).sqrt(),
    );
    let mut flags = Vec::new();
    if ProcessSpec::from_descriptor(ensemble.descriptor()).is_some_and(|s| s.rs_unreliable()) {
        flags.push(ReportFlag::RsUnreliable);
    }
    Ok(ExponentAnalysis {
        report: ExponentReport {
            joseph,
            latent,
            moses,
            hurst,
            k_sigma: options.k_sigma,
            flags,
        },
        fits,
    })
}

pub fn estimate_exponents(ensemble: &PathEnsemble, grid: &TimeGrid, options: &FitOptions) -> Result<ExponentReport> {
    analyze_exponents(ensemble, grid, options).map(|a| a.report)
}

/// Error helper for callers that only need to know which stage failed.
pub fn failed_exponent(err: &Error) -> Option<Exponent> {
    match err {
        Error::Estimation { exponent, .. } => Some(*exponent),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generate;
    use crate::grid::make_time_grid;

    fn report(j: f64, l: f64, m: f64, h: f64, se: f64) -> ExponentReport {
        ExponentReport {
            joseph: Estimate::new(j, se),
            latent: Estimate::new(l, se),
            moses: Estimate::new(m, se),
            hurst: Estimate::new(h, se),
            k_sigma: 3.0,
            flags: vec![],
        }
    }

    #[test]
    fn sum_check_and_verdict() {
        let r = report(0.5, 0.503, 0.29, 0.298, 0.002);
        assert!((r.sum_check().value - 0.293).abs() < 1e-12);
        assert!((r.sum_check().stderr - 0.002 * 3f64.sqrt()).abs() < 1e-12);
        assert!(r.consistent());
        assert!(!report(0.5, 0.5, 0.5, 0.7, 0.01).consistent());
    }

    #[test]
    fn json_carries_derived_fields() {
        let r = report(0.5, 0.5, 0.5, 0.5, 0.01);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["consistent"], true);
        assert!((v["sum_check"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(v["J"]["stderr"], 0.01);
        let back: ExponentReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn deterministic_ensemble_fails_at_joseph() {
        let e = PathEnsemble::new(8, 200, vec![1.0; 1600], "", 0).unwrap();
        let grid = make_time_grid(10, 200, 20).unwrap();
        let err = estimate_exponents(&e, &grid, &FitOptions::default()).unwrap_err();
        assert_eq!(failed_exponent(&err), Some(Exponent::Joseph));
    }

    #[test]
    fn small_bm_run() {
        let e = generate(&ProcessSpec::Bm, 1000, 2000, 21).unwrap();
        let grid = make_time_grid(20, 2000, 60).unwrap();
        let opts = FitOptions { bootstrap: 40, seed: 1, ..Default::default() };
        let a = analyze_exponents(&e, &grid, &opts).unwrap();
        let r = &a.report;
        for x in [r.joseph, r.latent, r.moses, r.hurst] {
            assert!((x.value - 0.5).abs() < 0.06, "{r:?}");
            assert!(x.stderr > 0.0);
        }
        assert_eq!(a.fits.len(), 4);
        assert_eq!(analyze_exponents(&e, &grid, &opts).unwrap(), a);
    }

    #[test]
    fn flm_with_low_joseph_is_flagged() {
        let spec = ProcessSpec::flm(0.4, 0.6, 500);
        let e = generate(&spec, 200, 500, 2).unwrap();
        let grid = make_time_grid(10, 500, 30).unwrap();
        let r = estimate_exponents(&e, &grid, &FitOptions { bootstrap: 10, ..Default::default() }).unwrap();
        assert!(r.has_flag(ReportFlag::RsUnreliable));
    }
}
