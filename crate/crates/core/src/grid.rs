//! Log-spaced integer sample times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing integer sample times, approximately uniform in `ln t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_min: usize,
    t_max: usize,
    count: usize,
    points: Vec<usize>,
}

/// Builds the grid `round(t_min * (t_max / t_min)^(i / count))` for
/// `i = 1..=count`, with rounding collisions removed.
pub fn make_time_grid(t_min: usize, t_max: usize, count: usize) -> Result<TimeGrid> {
    if t_min < 1 || t_min >= t_max {
        return Err(Error::InvalidRange(format!(
            "need 1 <= t_min < t_max, got t_min = {t_min}, t_max = {t_max}"
        )));
    }
    if count < 1 {
        return Err(Error::InvalidRange("grid count must be at least 1".into()));
    }
    let ratio = t_max as f64 / t_min as f64;
    let mut points: Vec<usize> = (1..=count)
        .map(|i| (t_min as f64 * ratio.powf(i as f64 / count as f64)).round() as usize)
        .map(|p| p.clamp(t_min, t_max))
        .collect();
    // the exponent is exactly 1 at i = count, but powf may land an ulp short
    *points.last_mut().expect("count >= 1") = t_max;
    points.dedup();
    Ok(TimeGrid {
        t_min,
        t_max,
        count,
        points,
    })
}

impl TimeGrid {
    /// A grid over explicit, strictly increasing times `>= 1`.
    pub fn from_points(points: Vec<usize>) -> Result<Self> {
        let (&first, &last) = match (points.first(), points.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::EmptyInput),
        };
        if first < 1 {
            return Err(Error::InvalidRange("grid times must be >= 1".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidRange(
                "grid times must be strictly increasing".into(),
            ));
        }
        Ok(TimeGrid {
            t_min: first,
            t_max: last,
            count: points.len(),
            points,
        })
    }

    /// Every integer time `1..=n`.
    pub fn dense(n: usize) -> Result<Self> {
        Self::from_points((1..=n).collect())
    }

    pub fn t_min(&self) -> usize {
        self.t_min
    }

    pub fn t_max(&self) -> usize {
        self.t_max
    }

    /// The number of points requested, before deduplication.
    pub fn requested_count(&self) -> usize {
        self.count
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
