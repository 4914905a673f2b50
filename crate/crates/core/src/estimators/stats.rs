//! Per-path statistics on a time grid, computed in one pass per path.

use rayon::prelude::*;

use super::series::{StatisticKind, StatisticSeries};
use crate::ensemble::{PartialSums, PathEnsemble};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quantile::{interpolate, quantile_sorted, rank_position};

/// `X_t, Y_t, Z_t` and `R_t/S_t` for every path at every grid time.
///
/// Columns are stored per grid point (`[g * n_paths + p]`). `R_t/S_t` is NaN
/// where `S_t = 0`.
#[derive(Debug, Clone)]
pub struct PathStatistics {
    grid: TimeGrid,
    n_paths: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    rs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Point {
    s: f64,
    x: f64,
}

/// Upper and lower convex hulls of the points `(s, X_s)` seen so far.
///
/// `max_s [X_s - c·s]` is attained on the upper hull and the minimum on the
/// lower hull, which makes each range query `O(log t)`.
#[derive(Debug, Default)]
pub(crate) struct RangeHull {
    upper: Vec<Point>,
    lower: Vec<Point>,
}

#[inline]
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.s - o.s) * (b.x - o.x) - (a.x - o.x) * (b.s - o.s)
}

impl RangeHull {
    pub(crate) fn clear(&mut self) {
        self.upper.clear();
        self.lower.clear();
    }

    /// Points must arrive with strictly increasing `s`.
    #[inline]
    pub(crate) fn push(&mut self, s: f64, x: f64) {
        let p = Point { s, x };
        while self.upper.len() >= 2
            && cross(self.upper[self.upper.len() - 2], self.upper[self.upper.len() - 1], p) >= 0.0
        {
            self.upper.pop();
        }
        self.upper.push(p);
        while self.lower.len() >= 2
            && cross(self.lower[self.lower.len() - 2], self.lower[self.lower.len() - 1], p) <= 0.0
        {
            self.lower.pop();
        }
        self.lower.push(p);
    }

    /// `max_s [X_s - (s/t)·X_t] - min_s [X_s - (s/t)·X_t]` over the points seen.
    pub(crate) fn range(&self, t: f64, x_t: f64) -> f64 {
        let bracket = |p: &Point| p.x - (p.s / t) * x_t;
        let slope = x_t / t;
        let up = &self.upper;
        let j = up.partition_point_edges(|a, b| (b.x - a.x) > slope * (b.s - a.s));
        let hi = neighbourhood(up.len(), j)
            .map(|i| bracket(&up[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        let lo_hull = &self.lower;
        let k = lo_hull.partition_point_edges(|a, b| (b.x - a.x) < slope * (b.s - a.s));
        let lo = neighbourhood(lo_hull.len(), k)
            .map(|i| bracket(&lo_hull[i]))
            .fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

fn neighbourhood(len: usize, j: usize) -> impl Iterator<Item = usize> {
    j.saturating_sub(1)..(j + 2).min(len)
}

trait EdgeSearch {
    /// Number of leading hull edges satisfying `pred`, assuming the edges
    /// that satisfy it form a prefix.
    fn partition_point_edges(&self, pred: impl Fn(&Point, &Point) -> bool) -> usize;
}

impl EdgeSearch for Vec<Point> {
    fn partition_point_edges(&self, pred: impl Fn(&Point, &Point) -> bool) -> usize {
        let (mut lo, mut hi) = (0, self.len().saturating_sub(1));
        while lo < hi {
            let mid = (lo + hi) / 2;
            if pred(&self[mid], &self[mid + 1]) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Running mean and sum of squared deviations of the increments (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, d: f64, count: f64) {
        let delta = d - self.mean;
        self.mean += delta / count;
        self.m2 += delta * (d - self.mean);
    }
}

/// `R_t / S_t` with `S_t` the population standard deviation of the first
/// `t` increments; NaN when `S_t` is at the level of rounding noise
/// relative to the increments' second moment.
#[inline]
fn rs_ratio(range: f64, moments: &Moments, second: f64, t: f64) -> f64 {
    let var = moments.m2 / t;
    if var > 16.0 * f64::EPSILON * second {
        range / var.sqrt()
    } else {
        f64::NAN
    }
}

/// Walks one path once, filling `(x, y, z, rs)` at each grid time.
pub(crate) fn scan_path(path: &[f64], times: &[usize], hull: &mut RangeHull, out: &mut [[f64; 4]]) {
    hull.clear();
    let mut sums = PartialSums::default();
    let mut moments = Moments::default();
    let mut next = 0;
    for (i, &d) in path.iter().enumerate() {
        if next == times.len() {
            break;
        }
        sums.push(d);
        let s = (i + 1) as f64;
        moments.push(d, s);
        hull.push(s, sums.x);
        if i + 1 == times[next] {
            let range = hull.range(s, sums.x);
            out[next] = [sums.x, sums.y, sums.z, rs_ratio(range, &moments, sums.z / s, s)];
            next += 1;
        }
    }
}

impl PathStatistics {
    pub fn compute(ensemble: &PathEnsemble, grid: &TimeGrid) -> Result<Self> {
        if grid.t_max() > ensemble.n_steps() {
            return Err(Error::OutOfRange {
                t: grid.t_max(),
                n_steps: ensemble.n_steps(),
            });
        }
        let times = grid.points();
        let g = times.len();
        let n = ensemble.n_paths();
        let mut rows = vec![[0.0f64; 4]; n * g];
        rows.par_chunks_mut(g)
            .zip(ensemble.paths().collect::<Vec<_>>().into_par_iter())
            .for_each_init(RangeHull::default, |hull, (out, path)| {
                scan_path(path, times, hull, out)
            });
        let mut x = vec![0.0; n * g];
        let mut y = vec![0.0; n * g];
        let mut z = vec![0.0; n * g];
        let mut rs = vec![0.0; n * g];
        for (p, row) in rows.chunks_exact(g).enumerate() {
            for (k, v) in row.iter().enumerate() {
                let at = k * n + p;
                x[at] = v[0];
                y[at] = v[1];
                z[at] = v[2];
                rs[at] = v[3];
            }
        }
        Ok(PathStatistics {
            grid: grid.clone(),
            n_paths: n,
            x,
            y,
            z,
            rs,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    fn column<'a>(&'a self, data: &'a [f64], g: usize) -> &'a [f64] {
        &data[g * self.n_paths..(g + 1) * self.n_paths]
    }

    pub fn x_at(&self, g: usize) -> &[f64] {
        self.column(&self.x, g)
    }

    pub fn y_at(&self, g: usize) -> &[f64] {
        self.column(&self.y, g)
    }

    pub fn z_at(&self, g: usize) -> &[f64] {
        self.column(&self.z, g)
    }

    /// `R_t/S_t` per path, NaN where `S_t = 0`.
    pub fn rs_at(&self, g: usize) -> &[f64] {
        self.column(&self.rs, g)
    }

    fn source(&self, kind: StatisticKind) -> Result<&[f64]> {
        Ok(match kind {
            StatisticKind::RsMean => &self.rs,
            StatisticKind::WidthIqr => &self.x,
            StatisticKind::MedianY => &self.y,
            StatisticKind::MedianZ => &self.z,
            StatisticKind::MeanAbsIncrement => {
                return Err(Error::Format(
                    "mean_abs_increment is a per-step profile, not a grid statistic".into(),
                ))
            }
        })
    }

    /// The full-ensemble series of `kind`.
    pub fn series(&self, kind: StatisticKind) -> Result<StatisticSeries> {
        if self.n_paths < kind.min_paths() {
            return Err(Error::TooFewPaths {
                needed: kind.min_paths(),
                got: self.n_paths,
            });
        }
        let data = self.source(kind)?;
        let values = (0..self.grid.len())
            .map(|g| {
                let col = self.column(data, g);
                match kind {
                    StatisticKind::RsMean => {
                        let reference = col.iter().copied().find(|v| !v.is_nan()).unwrap_or(0.0);
                        let (sum, valid) = col
                            .iter()
                            .filter(|v| !v.is_nan())
                            .fold((0.0, 0usize), |(s, c), v| (s + (v - reference), c + 1));
                        if valid < 2 {
                            return Err(Error::DegenerateEnsemble {
                                t: self.grid.points()[g],
                                valid,
                            });
                        }
                        Ok(reference + sum / valid as f64)
                    }
                    _ => {
                        let mut sorted = col.to_vec();
                        sorted.sort_unstable_by(f64::total_cmp);
                        Ok(order_statistic(kind, &sorted))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        StatisticSeries::new(kind, self.grid.clone(), values)
    }
}

fn order_statistic(kind: StatisticKind, sorted: &[f64]) -> f64 {
    match kind {
        StatisticKind::WidthIqr => quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25),
        _ => quantile_sorted(sorted, 0.5),
    }
}

/// Path orderings per grid point, so that statistics of a resampled ensemble
/// (given as per-path multiplicities) can be read off in linear time.
pub struct ResamplingIndex<'a> {
    stats: &'a PathStatistics,
    orders: Vec<(StatisticKind, Vec<u32>)>,
}

impl<'a> ResamplingIndex<'a> {
    pub fn new(stats: &'a PathStatistics, kinds: &[StatisticKind]) -> Result<Self> {
        let n = stats.n_paths;
        let mut orders = Vec::new();
        for &kind in kinds {
            let data = stats.source(kind)?;
            if kind == StatisticKind::RsMean {
                continue;
            }
            let order: Vec<u32> = (0..stats.grid.len())
                .into_par_iter()
                .flat_map_iter(|g| {
                    let col = stats.column(data, g);
                    let mut idx: Vec<u32> = (0..n as u32).collect();
                    idx.sort_unstable_by(|&a, &b| {
                        col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b))
                    });
                    idx
                })
                .collect();
            orders.push((kind, order));
        }
        Ok(ResamplingIndex { stats, orders })
    }

    pub fn stats(&self) -> &PathStatistics {
        self.stats
    }

    /// Series of `kind` for the ensemble in which path `p` appears
    /// `counts[p]` times. Returns `None` when the resample is degenerate.
    pub fn series_values(&self, kind: StatisticKind, counts: &[u32]) -> Option<Vec<f64>> {
        let n = self.stats.n_paths;
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if total < kind.min_paths() as u64 {
            return None;
        }
        let data = self.stats.source(kind).ok()?;
        let order = self
            .orders
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, o)| o.as_slice());
        let mut out = Vec::with_capacity(self.stats.grid.len());
        for g in 0..self.stats.grid.len() {
            let col = self.stats.column(data, g);
            let v = match (kind, order) {
                (StatisticKind::RsMean, _) => {
                    // same shifted summation as the full-sample mean
                    let reference = col.iter().copied().find(|v| !v.is_nan()).unwrap_or(0.0);
                    let (sum, valid) = col.iter().zip(counts).fold((0.0, 0u64), |(s, m), (v, &c)| {
                        if c == 0 || v.is_nan() {
                            (s, m)
                        } else {
                            (s + c as f64 * (v - reference), m + c as u64)
                        }
                    });
                    if valid < 2 {
                        return None;
                    }
                    reference + sum / valid as f64
                }
                (_, Some(order)) => {
                    let ord = &order[g * n..(g + 1) * n];
                    let q = |level: f64| {
                        let (lo, hi, frac) = rank_position(total as usize, level);
                        let (a, b) = ranks_from_counts(col, ord, counts, lo, hi);
                        interpolate(a, b, frac)
                    };
                    match kind {
                        StatisticKind::WidthIqr => q(0.75) - q(0.25),
                        _ => q(0.5),
                    }
                }
                _ => return None,
            };
            out.push(v);
        }
        Some(out)
    }
}

/// Values at 0-based ranks `lo <= hi` of the multiset described by `counts`.
fn ranks_from_counts(col: &[f64], order: &[u32], counts: &[u32], lo: usize, hi: usize) -> (f64, f64) {
    let mut seen = 0usize;
    let mut low = None;
    for &p in order {
        let c = counts[p as usize] as usize;
        if c == 0 {
            continue;
        }
        seen += c;
        let v = col[p as usize];
        if low.is_none() && seen > lo {
            low = Some(v);
        }
        if seen > hi {
            return (low.unwrap_or(v), v);
        }
    }
    unreachable!("ranks lie below the multiset size")
}
