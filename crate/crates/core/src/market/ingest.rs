//! Minute bars to a day-by-minute matrix of close prices.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{NaiveDate, NaiveTime, Timelike};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the fields of a bar live, as zero-based column indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub date: usize,
    pub time: usize,
    pub close: usize,
}

impl Default for ColumnMap {
    /// `date, time, open, high, low, close, volume`
    fn default() -> Self {
        ColumnMap {
            date: 0,
            time: 1,
            close: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    /// Minutes after midnight of the first bar of the session.
    pub open_minute: u32,
    pub n_minutes: usize,
    /// Only the most recent `max_days` complete days are kept.
    pub max_days: usize,
    /// Days whose last bar falls more than this many minutes before the
    /// close are treated as half-days and dropped.
    pub early_close_tolerance: usize,
    pub columns: ColumnMap,
    pub delimiter: u8,
    /// `None` detects a header from the first row.
    pub has_header: Option<bool>,
}

impl Default for SessionSpec {
    fn default() -> Self {
        SessionSpec {
            open_minute: 9 * 60 + 30,
            n_minutes: 390,
            max_days: 2500,
            early_close_tolerance: 30,
            columns: ColumnMap::default(),
            delimiter: b',',
            has_header: None,
        }
    }
}

/// Close prices, one row per trading day and one column per session minute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMatrix {
    symbol: String,
    calendar: Vec<String>,
    n_minutes: usize,
    close: Vec<f64>,
}

impl SessionMatrix {
    pub fn new(symbol: impl Into<String>, calendar: Vec<String>, n_minutes: usize, close: Vec<f64>) -> Result<Self> {
        if calendar.is_empty() {
            return Err(Error::NoDays);
        }
        if n_minutes < 2 || close.len() != calendar.len() * n_minutes {
            return Err(Error::Format(format!(
                "{} prices do not fill {} days of {n_minutes} minutes",
                close.len(),
                calendar.len()
            )));
        }
        Ok(SessionMatrix {
            symbol: symbol.into(),
            calendar,
            n_minutes,
            close,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn n_days(&self) -> usize {
        self.calendar.len()
    }

    pub fn n_minutes(&self) -> usize {
        self.n_minutes
    }

    /// ISO dates of the retained sessions, oldest first.
    pub fn calendar(&self) -> &[String] {
        &self.calendar
    }

    pub fn day(&self, d: usize) -> &[f64] {
        &self.close[d * self.n_minutes..(d + 1) * self.n_minutes]
    }

    pub fn close(&self) -> &[f64] {
        &self.close
    }
}

pub(crate) fn parse_date(s: &str) -> Option<NaiveDate> {
    ["%Y-%m-%d", "%Y%m%d", "%m/%d/%Y", "%Y/%m/%d"]
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
}

/// Minutes after midnight.
pub(crate) fn parse_time(s: &str) -> Option<u32> {
    let t = ["%H:%M:%S", "%H:%M", "%H%M%S", "%H%M"]
        .iter()
        .find_map(|f| NaiveTime::parse_from_str(s, f).ok())?;
    Some(t.hour() * 60 + t.minute())
}

fn malformed(line: u64, reason: impl Into<String>) -> Error {
    Error::MalformedRow {
        line,
        reason: reason.into(),
    }
}

/// Reads minute bars and aligns them on the session grid.
///
/// Bars outside the session are ignored. Missing minutes take the last
/// recorded price; minutes before a day's first bar take that first price.
pub fn ingest_prices<R: Read>(source: R, session: &SessionSpec, symbol: &str) -> Result<SessionMatrix> {
    let n = session.n_minutes;
    if n < 2 {
        return Err(Error::InvalidRange(format!("session of {n} minutes")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(session.delimiter)
        .comment(Some(b'#'))
        .from_reader(source);
    let cols = session.columns;
    let width = cols.date.max(cols.time).max(cols.close) + 1;
    let mut days: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    let mut first = true;
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line() + 1;
        if !reader.read_record(&mut record)? {
            break;
        }
        let line = record.position().map_or(line, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if std::mem::take(&mut first) {
            let header = match session.has_header {
                Some(h) => h,
                None => record.get(cols.close).is_none_or(|c| c.parse::<f64>().is_err()),
            };
            if header {
                continue;
            }
        }
        if record.len() < width {
            return Err(malformed(line, format!("expected at least {width} fields, found {}", record.len())));
        }
        let date = parse_date(&record[cols.date])
            .ok_or_else(|| malformed(line, format!("unrecognised date {:?}", &record[cols.date])))?;
        let minute = parse_time(&record[cols.time])
            .ok_or_else(|| malformed(line, format!("unrecognised time {:?}", &record[cols.time])))?;
        let close: f64 = record[cols.close]
            .parse()
            .map_err(|_| malformed(line, format!("unparsable close {:?}", &record[cols.close])))?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(malformed(line, format!("close price {close} is not positive")));
        }
        let Some(k) = minute.checked_sub(session.open_minute).map(|k| k as usize).filter(|&k| k < n) else {
            continue;
        };
        days.entry(date).or_insert_with(|| vec![f64::NAN; n])[k] = close;
    }

    let mut calendar = Vec::new();
    let mut close = Vec::new();
    for (date, mut prices) in days {
        let Some(first_bar) = prices.iter().position(|p| !p.is_nan()) else {
            warn!("{date}: no bars inside the session, dropped");
            continue;
        };
        let last_bar = prices.iter().rposition(|p| !p.is_nan()).unwrap_or(first_bar);
        if last_bar + 1 + session.early_close_tolerance < n {
            warn!("{date}: last bar at minute {last_bar}, dropped as a shortened session");
            continue;
        }
        let mut last = prices[first_bar];
        for p in prices.iter_mut() {
            if p.is_nan() {
                *p = last;
            } else {
                last = *p;
            }
        }
        calendar.push(date.format("%Y-%m-%d").to_string());
        close.extend_from_slice(&prices);
    }
    if calendar.is_empty() {
        return Err(Error::NoDays);
    }
    if calendar.len() > session.max_days {
        let skip = calendar.len() - session.max_days;
        calendar.drain(..skip);
        close.drain(..skip * n);
    }
    SessionMatrix::new(symbol, calendar, n, close)
}

/// Writes a session matrix as `date,time,open,high,low,close,volume` bars,
/// with every price field set to the close.
pub fn write_minute_bars<W: std::io::Write>(sessions: &SessionMatrix, open_minute: u32, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["date", "time", "open", "high", "low", "close", "volume"])?;
    for (d, date) in sessions.calendar().iter().enumerate() {
        for (k, p) in sessions.day(d).iter().enumerate() {
            let m = open_minute as usize + k;
            let price = format!("{p:e}");
            out.write_record([
                date.as_str(),
                &format!("{:02}:{:02}", m / 60, m % 60),
                &price,
                &price,
                &price,
                &price,
                "0",
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
