//! Minute-bar ingestion and the intraday analysis pipeline.
//!
//! Each trading day is one path. Prices become log returns, the
//! across-days mean return of every minute is removed, and the exponents
//! are estimated inside user-chosen intraday intervals, with time measured
//! from the start of each interval.

mod ingest;

pub use ingest::{ingest_prices, write_minute_bars, ColumnMap, SessionMatrix, SessionSpec};

use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::estimators::{analyze_exponents, mean_abs_increment_profile, step_means, ExponentAnalysis, FitOptions, StatisticKind, StatisticSeries};
use crate::generators::{DiffusionProfile, VdpGenerator, DEFAULT_VDP_EPSILON, DEFAULT_VDP_SUBSTEPS};
use crate::grid::{make_time_grid, TimeGrid};
use crate::rng::RngStream;

pub const DEFAULT_INTERVAL_T_MIN: usize = 10;
pub const DEFAULT_INTERVAL_GRID: usize = 60;

/// Log returns `ln(P_(k+1) / P_k)`; a day of `n_minutes` prices gives a path
/// of `n_minutes - 1` increments, with `X = 0` at the first minute.
pub fn to_return_ensemble(sessions: &SessionMatrix) -> Result<PathEnsemble> {
    let n = sessions.n_minutes();
    let mut increments = Vec::with_capacity(sessions.n_days() * (n - 1));
    for d in 0..sessions.n_days() {
        let day = sessions.day(d);
        if let Some((minute, &price)) = day.iter().enumerate().find(|(_, p)| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::NonPositivePrice { day: d, minute, price });
        }
        increments.extend(day.windows(2).map(|w| ((w[1] - w[0]) / w[0]).ln_1p()));
    }
    let descriptor = serde_json::json!({ "source": "market", "symbol": sessions.symbol() }).to_string();
    PathEnsemble::new(sessions.n_days(), n - 1, increments, descriptor, 0)
}

/// Subtracts the across-paths mean increment at every step.
pub fn detrend(ensemble: &PathEnsemble) -> Result<PathEnsemble> {
    if ensemble.n_paths() < 2 {
        return Err(Error::TooFewPaths {
            needed: 2,
            got: ensemble.n_paths(),
        });
    }
    let mean = step_means(ensemble);
    let mut out = ensemble.increments().to_vec();
    for path in out.chunks_exact_mut(ensemble.n_steps()) {
        for (d, m) in path.iter_mut().zip(&mean) {
            *d -= m;
        }
    }
    PathEnsemble::new(
        ensemble.n_paths(),
        ensemble.n_steps(),
        out,
        ensemble.descriptor(),
        ensemble.master_seed(),
    )
}

/// An intraday window `[start, end)` in minutes after the open, with the
/// analysis grid used inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub start: usize,
    pub end: usize,
    pub t_min: usize,
    pub grid_count: usize,
}

impl IntervalSpec {
    pub fn new(start: usize, end: usize) -> Self {
        IntervalSpec {
            start,
            end,
            t_min: DEFAULT_INTERVAL_T_MIN,
            grid_count: DEFAULT_INTERVAL_GRID,
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        if self.start >= self.end || self.t_min >= self.len() {
            return Err(Error::InvalidRange(format!(
                "interval {self} with t_min {} needs start < end and t_min < end - start",
                self.t_min
            )));
        }
        make_time_grid(self.t_min, self.len(), self.grid_count)
    }
}

impl fmt::Display for IntervalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

/// Parses `start:end`, taking the default `t_min` and grid size.
impl FromStr for IntervalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRange(format!("interval {s:?} is not start:end"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = b.trim().parse().map_err(|_| bad())?;
        Ok(IntervalSpec::new(start, end))
    }
}

/// Increments `start..end` of every path, so positions restart at zero at
/// the interval start, together with the interval's analysis grid.
pub fn extract_interval(ensemble: &PathEnsemble, spec: &IntervalSpec) -> Result<(PathEnsemble, TimeGrid)> {
    if spec.end > ensemble.n_steps() || spec.start >= spec.end {
        return Err(Error::IntervalOutOfRange {
            start: spec.start,
            end: spec.end,
            n_steps: ensemble.n_steps(),
        });
    }
    let grid = spec.grid()?;
    let mut out = Vec::with_capacity(ensemble.n_paths() * spec.len());
    for path in ensemble.paths() {
        out.extend_from_slice(&path[spec.start..spec.end]);
    }
    let e = PathEnsemble::new(
        ensemble.n_paths(),
        spec.len(),
        out,
        ensemble.descriptor(),
        ensemble.master_seed(),
    )?;
    Ok((e, grid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAnalysis {
    pub interval: IntervalSpec,
    pub analysis: ExponentAnalysis,
}

impl IntervalAnalysis {
    /// `τ` of the R/S fit, when defined.
    pub fn rs_timescale(&self) -> Option<f64> {
        self.analysis.fit(StatisticKind::RsMean).and_then(|f| f.fit.tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketAnalysis {
    pub symbol: String,
    pub n_days: usize,
    /// `E|δ_t|` of the detrended returns at every minute of the day.
    pub profile: StatisticSeries,
    pub intervals: Vec<IntervalAnalysis>,
}

/// Returns, detrending, the intraday profile and one exponent analysis per
/// interval.
pub fn analyze_sessions(sessions: &SessionMatrix, intervals: &[IntervalSpec], options: &FitOptions) -> Result<MarketAnalysis> {
    let returns = detrend(&to_return_ensemble(sessions)?)?;
    let profile = mean_abs_increment_profile(&returns)?;
    let intervals = intervals
        .iter()
        .map(|spec| {
            let (e, grid) = extract_interval(&returns, spec)?;
            Ok(IntervalAnalysis {
                interval: *spec,
                analysis: analyze_exponents(&e, &grid, options)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarketAnalysis {
        symbol: sessions.symbol().to_string(),
        n_days: sessions.n_days(),
        profile,
        intervals,
    })
}

/// [`ingest_prices`] followed by [`analyze_sessions`].
pub fn analyze_market<R: Read>(
    source: R,
    session: &SessionSpec,
    symbol: &str,
    intervals: &[IntervalSpec],
    options: &FitOptions,
) -> Result<MarketAnalysis> {
    analyze_sessions(&ingest_prices(source, session, symbol)?, intervals, options)
}

/// Synthetic trading days whose log price follows a variable diffusion
/// process started `warmup` minutes after the open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDays {
    pub hurst: f64,
    pub epsilon: f64,
    pub substeps: usize,
    pub n_days: usize,
    pub n_minutes: usize,
    /// Minutes of small independent noise before the process starts.
    pub warmup: usize,
    /// Log-price units per unit of the process.
    pub scale: f64,
    pub open_price: f64,
    pub seed: u64,
}

impl SyntheticDays {
    pub fn vdp(hurst: f64, n_days: usize, seed: u64) -> Self {
        SyntheticDays {
            hurst,
            epsilon: DEFAULT_VDP_EPSILON,
            substeps: DEFAULT_VDP_SUBSTEPS,
            n_days,
            n_minutes: 390,
            warmup: 20,
            scale: 1e-3,
            open_price: 100.0,
            seed,
        }
    }

    /// Day `d` uses stream `(seed, d)` for the process and
    /// `(seed, 2^62 + d)` for the warm-up noise.
    pub fn sessions(&self) -> Result<SessionMatrix> {
        if self.n_days == 0 {
            return Err(Error::NoDays);
        }
        if self.warmup + 2 > self.n_minutes {
            return Err(Error::InvalidRange(format!(
                "warm-up of {} minutes leaves no process in a {}-minute day",
                self.warmup, self.n_minutes
            )));
        }
        if !(self.scale > 0.0 && self.open_price > 0.0) {
            return Err(Error::domain("scale", self.scale.min(self.open_price), "scale > 0 and open_price > 0"));
        }
        let steps = self.n_minutes - 1 - self.warmup;
        let generator = VdpGenerator::new(
            self.hurst,
            DiffusionProfile::BiExponential { epsilon: self.epsilon },
            steps,
            self.substeps,
        )?;
        let mut close = Vec::with_capacity(self.n_days * self.n_minutes);
        let mut moves = vec![0.0; steps];
        for d in 0..self.n_days as u64 {
            let mut noise = RngStream::new(self.seed, (1 << 62) + d);
            let mut log_p = self.open_price.ln();
            close.push(self.open_price);
            for _ in 0..self.warmup {
                log_p += 0.1 * self.scale * noise.gaussian();
                close.push(log_p.exp());
            }
            generator.sample_into(&mut RngStream::new(self.seed, d), &mut moves);
            for m in &moves {
                log_p += self.scale * m;
                close.push(log_p.exp());
            }
        }
        SessionMatrix::new("SYNTH", business_days(self.n_days), self.n_minutes, close)
    }
}

/// `n` consecutive weekdays from 2000-01-03, as ISO dates.
fn business_days(n: usize) -> Vec<String> {
    let mut day = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(day.format("%Y-%m-%d").to_string());
        }
        day += Duration::days(1);
    }
    out
}
