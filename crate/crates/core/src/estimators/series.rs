use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Which ensemble statistic a series holds, and which exponent combination
/// its growth measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// `E[R_t / S_t] ~ t^J`
    RsMean,
    /// `IQR(X_t) ~ t^H`
    WidthIqr,
    /// `median(Y_t) ~ t^(M + ½)`
    MedianY,
    /// `median(Z_t) ~ t^(2L + 2M - 1)`
    MedianZ,
    /// `E|δ_t - E δ_t| ~ t^(M - ½)`
    MeanAbsIncrement,
}

impl StatisticKind {
    pub const SCALING: [StatisticKind; 4] = [
        StatisticKind::RsMean,
        StatisticKind::MedianZ,
        StatisticKind::MedianY,
        StatisticKind::WidthIqr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::RsMean => "rs_mean",
            StatisticKind::WidthIqr => "width_iqr",
            StatisticKind::MedianY => "median_y",
            StatisticKind::MedianZ => "median_z",
            StatisticKind::MeanAbsIncrement => "mean_abs_increment",
        }
    }

    /// The exponent combination the series grows with.
    pub fn exponent_label(&self) -> &'static str {
        match self {
            StatisticKind::RsMean => "J",
            StatisticKind::WidthIqr => "H",
            StatisticKind::MedianY => "M+1/2",
            StatisticKind::MedianZ => "2L+2M-1",
            StatisticKind::MeanAbsIncrement => "M-1/2",
        }
    }

    pub(crate) fn min_paths(&self) -> usize {
        match self {
            StatisticKind::WidthIqr => 4,
            _ => 2,
        }
    }

    fn nonnegative(&self) -> bool {
        !matches!(self, StatisticKind::RsMean | StatisticKind::WidthIqr)
    }
}

impl std::str::FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rs_mean" => StatisticKind::RsMean,
            "width_iqr" => StatisticKind::WidthIqr,
            "median_y" => StatisticKind::MedianY,
            "median_z" => StatisticKind::MedianZ,
            "mean_abs_increment" => StatisticKind::MeanAbsIncrement,
            other => return Err(Error::Format(format!("unknown statistic {other:?}"))),
        })
    }
}

/// A statistic evaluated on a time grid, with optional per-point variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSeries {
    kind: StatisticKind,
    grid: TimeGrid,
    values: Vec<f64>,
    variances: Option<Vec<f64>>,
}

impl StatisticSeries {
    pub fn new(kind: StatisticKind, grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if kind.nonnegative() && values.iter().any(|v| *v < 0.0) {
            return Err(Error::Format(format!("{} values must be nonnegative", kind.name())));
        }
        Ok(StatisticSeries {
            kind,
            grid,
            values,
            variances: None,
        })
    }

    pub fn with_variances(mut self, variances: Vec<f64>) -> Result<Self> {
        if variances.len() != self.values.len() {
            return Err(Error::Format("variance count differs from value count".into()));
        }
        if variances.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Format("variances must be nonnegative".into()));
        }
        self.variances = Some(variances);
        Ok(self)
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[usize] {
        self.grid.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn variances(&self) -> Option<&[f64]> {
        self.variances.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Restriction to grid times in `[t_lo, t_hi]`.
    pub fn window(&self, t_lo: usize, t_hi: usize) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| (t_lo..=t_hi).contains(&self.times()[i]))
            .collect();
        let grid = TimeGrid::from_points(keep.iter().map(|&i| self.times()[i]).collect())?;
        Ok(StatisticSeries {
            kind: self.kind,
            grid,
            values: keep.iter().map(|&i| self.values[i]).collect(),
            variances: self
                .variances
                .as_ref()
                .map(|v| keep.iter().map(|&i| v[i]).collect()),
        })
    }

    /// CSV with columns `t,value,variance` (variance empty when absent).
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "value", "variance"])?;
        for (i, (&t, v)) in self.times().iter().zip(&self.values).enumerate() {
            let var = self
                .variances
                .as_ref()
                .map_or(String::new(), |vs| format!("{:e}", vs[i]));
            out.write_record([t.to_string(), format!("{v:e}"), var])?;
        }
        out.flush()?;
        Ok(())
    }
}
