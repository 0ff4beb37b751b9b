//! Daily OHLCV bars: validation, min-max scaling, up/down labels, sliding
//! windows and event-horizon alignment.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use chrono::{Days, NaiveDate};

use crate::{Dated, Error, Result};

/// Number of features per bar, in [`FEATURE_ORDER`] order.
pub const FEATURES: usize = 5;
pub const FEATURE_ORDER: [&str; FEATURES] = ["open", "close", "high", "low", "volume"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl PriceBar {
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64, volume: f64) -> Result<Self> {
        let bar = PriceBar {
            date,
            open,
            high,
            low,
            close,
            volume,
        };
        bar.validate()?;
        Ok(bar)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.open, self.high, self.low, self.close, self.volume];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{}: non-finite field", self.date)));
        }
        if self.high < self.low {
            return Err(Error::invalid(format!(
                "{}: high {} < low {}",
                self.date, self.high, self.low
            )));
        }
        for (name, v) in [("open", self.open), ("close", self.close)] {
            if v < self.low || v > self.high {
                return Err(Error::invalid(format!(
                    "{}: {name} {v} outside [low {}, high {}]",
                    self.date, self.low, self.high
                )));
            }
        }
        if self.volume < 0.0 {
            return Err(Error::invalid(format!("{}: negative volume", self.date)));
        }
        Ok(())
    }

    /// Features in [`FEATURE_ORDER`].
    pub fn features(&self) -> [f64; FEATURES] {
        [self.open, self.close, self.high, self.low, self.volume]
    }
}

impl Dated for PriceBar {
    fn date(&self) -> NaiveDate {
        self.date
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub ticker: String,
    bars: Vec<PriceBar>,
}

impl PriceSeries {
    /// Bars must already be in strictly increasing date order.
    pub fn new(ticker: impl Into<String>, bars: Vec<PriceBar>) -> Result<Self> {
        for b in &bars {
            b.validate()?;
        }
        if let Some(w) = bars.windows(2).find(|w| w[1].date <= w[0].date) {
            return Err(Error::invalid(if w[1].date == w[0].date {
                format!("duplicate date {}", w[1].date)
            } else {
                format!("dates out of order at {}", w[1].date)
            }));
        }
        Ok(PriceSeries {
            ticker: ticker.into(),
            bars,
        })
    }

    pub fn bars(&self) -> &[PriceBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn get(&self, date: NaiveDate) -> Option<&PriceBar> {
        self.bars
            .binary_search_by_key(&date, |b| b.date)
            .ok()
            .map(|i| &self.bars[i])
    }

    /// Last bar dated on or before `date`.
    pub fn at_or_before(&self, date: NaiveDate) -> Option<&PriceBar> {
        let i = self.bars.partition_point(|b| b.date <= date);
        i.checked_sub(1).map(|i| &self.bars[i])
    }

    /// First bar dated on or after `date`.
    pub fn at_or_after(&self, date: NaiveDate) -> Option<&PriceBar> {
        let i = self.bars.partition_point(|b| b.date < date);
        self.bars.get(i)
    }

    /// First bar strictly after `date`.
    pub fn after(&self, date: NaiveDate) -> Option<&PriceBar> {
        let i = self.bars.partition_point(|b| b.date <= date);
        self.bars.get(i)
    }

    pub fn feature_rows(&self) -> Vec<[f64; FEATURES]> {
        self.bars.iter().map(PriceBar::features).collect()
    }
}

/// Per-column min-max statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxScaler<const N: usize> {
    pub min: [f64; N],
    pub max: [f64; N],
}

impl<const N: usize> MinMaxScaler<N> {
    pub fn fit(rows: &[[f64; N]]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("minmax_normalize"))?;
        let mut min = *first;
        let mut max = *first;
        for r in rows {
            for c in 0..N {
                min[c] = min[c].min(r[c]);
                max[c] = max[c].max(r[c]);
            }
        }
        Ok(MinMaxScaler { min, max })
    }

    /// `(x - min) / (max - min)` per column; a zero-range column maps to 0.
    /// Rows outside the fitted span may fall outside `[0, 1]`.
    pub fn transform(&self, row: &[f64; N]) -> [f64; N] {
        let mut out = [0.0; N];
        for c in 0..N {
            let range = self.max[c] - self.min[c];
            out[c] = if range > 0.0 {
                (row[c] - self.min[c]) / range
            } else {
                0.0
            };
        }
        out
    }

    pub fn inverse(&self, column: usize, value: f64) -> f64 {
        self.min[column] + value * (self.max[column] - self.min[column])
    }
}

/// Min-max normalize every column of the series over its full span.
pub fn minmax_normalize(series: &PriceSeries) -> Result<Vec<[f64; FEATURES]>> {
    let rows = series.feature_rows();
    let scaler = MinMaxScaler::fit(&rows)?;
    Ok(rows.iter().map(|r| scaler.transform(r)).collect())
}

/// Intraday label: 1 when the bar closed at or above its open.
pub fn label_updown(bar: &PriceBar) -> u8 {
    u8::from(bar.close >= bar.open)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWindow {
    /// `s` rows of features in [`FEATURE_ORDER`].
    pub rows: Vec<[f64; FEATURES]>,
    pub end_date: NaiveDate,
}

impl NormalizedWindow {
    pub fn flatten(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }
}

/// All overlapping `s`-row windows, scaled with statistics from the full
/// series.
pub fn windows(series: &PriceSeries, s: usize) -> Result<Vec<NormalizedWindow>> {
    if s == 0 {
        return Err(Error::invalid("window size must be at least 1"));
    }
    if series.len() < s {
        return Err(Error::invalid(format!(
            "series of {} bars shorter than window {s}",
            series.len()
        )));
    }
    let norm = minmax_normalize(series)?;
    Ok((0..=series.len() - s)
        .map(|start| NormalizedWindow {
            rows: norm[start..start + s].to_vec(),
            end_date: series.bars[start + s - 1].date,
        })
        .collect())
}

/// Day, week and month look-back lengths in calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lags {
    pub day: u64,
    pub week: u64,
    pub month: u64,
}

impl Default for Lags {
    fn default() -> Self {
        Lags {
            day: 1,
            week: 7,
            month: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Horizons<'a, T> {
    /// Events dated exactly on the day.
    pub day: &'a [T],
    /// Events in `[day - week, day - 1]`.
    pub week: &'a [T],
    /// Events in `[day - month, day - 1]`.
    pub month: &'a [T],
}

/// Bucket date-sorted `events` relative to `day`. Every bucket is a
/// contiguous slice of the input, so the week bucket is a suffix of the
/// month bucket.
pub fn align_event_horizons<T: Dated>(events: &[T], day: NaiveDate, lags: Lags) -> Horizons<'_, T> {
    let lower = |d: NaiveDate| events.partition_point(|e| e.date() < d);
    let start_of_day = lower(day);
    let end_of_day = events.partition_point(|e| e.date() <= day);
    let back = |n: u64| day.checked_sub_days(Days::new(n)).unwrap_or(NaiveDate::MIN);
    let week_start = lower(back(lags.week)).min(start_of_day);
    let month_start = lower(back(lags.month)).min(start_of_day);
    Horizons {
        day: &events[start_of_day..end_of_day],
        week: &events[week_start..start_of_day],
        month: &events[month_start..start_of_day],
    }
}

/// Next-day label: 1 when the close of the first bar after `day` is at or
/// above the close of the last bar on or before `day`. Weekend and holiday
/// gaps resolve to the next bar present; `None` when either side is missing.
pub fn next_day_label(series: &PriceSeries, day: NaiveDate) -> Option<u8> {
    let today = series.at_or_before(day)?;
    let next = series.after(day)?;
    Some(u8::from(next.close >= today.close))
}
