//! Order statistics with linear interpolation between closest ranks.

use crate::error::{Error, Result};

/// The `q`-quantile of `values`: the order statistic at fractional position
/// `q * (n - 1)` of the sorted data, interpolated linearly between neighbours.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_level(q)?;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

/// Interquartile range, `q(0.75) - q(0.25)`.
pub fn iqr(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25))
}

/// Same rule as [`quantile`] on data that is already sorted ascending.
///
/// Panics on an empty slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let (lo, hi, frac) = rank_position(sorted.len(), q);
    interpolate(sorted[lo], sorted[hi], frac)
}

/// Lower rank, upper rank and interpolation fraction for level `q` on `n`
/// sorted items.
pub(crate) fn rank_position(n: usize, q: f64) -> (usize, usize, f64) {
    assert!(n > 0, "rank position on empty data");
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    (lo, hi, pos - lo as f64)
}

pub(crate) fn interpolate(lo: f64, hi: f64, frac: f64) -> f64 {
    if frac == 0.0 {
        lo
    } else {
        lo + frac * (hi - lo)
    }
}

fn check_level(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::domain("q", q, "0 <= q <= 1"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_of_even_count() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
    }

    #[test]
    fn singleton() {
        assert_eq!(quantile(&[5.0], 0.75).unwrap(), 5.0);
    }

    #[test]
    fn interpolates_between_ranks() {
        assert_eq!(quantile(&[0.0, 10.0], 0.25).unwrap(), 2.5);
        assert_eq!(quantile(&[10.0, 0.0], 1.0).unwrap(), 10.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(quantile(&[], 0.5), Err(Error::EmptyInput)));
        assert!(quantile(&[1.0], 1.5).is_err());
    }

    proptest! {
        #[test]
        fn quantile_is_monotone_and_bounded(
            mut xs in prop::collection::vec(-1e6f64..1e6, 1..60),
            q1 in 0.0f64..=1.0,
            q2 in 0.0f64..=1.0,
        ) {
            let (a, b) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            let qa = quantile(&xs, a).unwrap();
            let qb = quantile(&xs, b).unwrap();
            prop_assert!(qa <= qb);
            xs.sort_by(f64::total_cmp);
            prop_assert!(qa >= xs[0] && qb <= xs[xs.len() - 1]);
        }
    }
}
