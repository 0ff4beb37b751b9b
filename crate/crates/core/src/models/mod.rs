//! Predictive models over event embeddings and price windows.

mod ebcnn;
mod lstm;
mod train;

pub use ebcnn::{EbcnnConfig, EbcnnParams, ShortTermConfig, ShortTermParams};
pub use lstm::{
    forecast_windows, forecast_windows_fitted, lstm_classify, train_forecaster, ForecastConfig, ForecastWindow,
    LstmClassifier, LstmForecaster, FORECAST_HIDDEN,
};
pub use train::{train_classifier, EpochMetrics, TrainConfig, TrainReport};

use alloc::vec::Vec;
use chrono::NaiveDate;

use crate::marketdata::{align_event_horizons, Lags};
use crate::nnkit::{Parameters, Tape, Tensor, Var};
use crate::ntn::EventEmbedding;
use crate::{Dated, Error, Result};

/// Sequence capacities matching the default week/month look-backs.
pub const WEEK_CAPACITY: usize = 7;
pub const MONTH_CAPACITY: usize = 30;

/// One training example: the day's event vector plus zero-padded week and
/// month histories.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSample {
    /// Zero when the day had no event.
    pub day: Vec<f64>,
    /// `[capacity, d]`, oldest first; rows at or past `week_valid` are zero.
    pub week: Tensor,
    pub week_valid: usize,
    pub month: Tensor,
    pub month_valid: usize,
    pub label: u8,
    pub date: NaiveDate,
}

impl Dated for AlignedSample {
    fn date(&self) -> NaiveDate {
        self.date
    }
}

pub trait Labeled {
    fn label(&self) -> u8;
}

impl Labeled for AlignedSample {
    fn label(&self) -> u8 {
        self.label
    }
}

fn padded(rows: &[Vec<f64>], capacity: usize, dim: usize) -> Result<(Tensor, usize)> {
    if rows.len() > capacity {
        return Err(Error::invalid(alloc::format!(
            "{} rows exceed capacity {capacity}",
            rows.len()
        )));
    }
    let mut t = Tensor::zeros(&[capacity, dim]);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::shape("aligned sample", &[dim], &[row.len()]));
        }
        t.data_mut()[r * dim..(r + 1) * dim].copy_from_slice(row);
    }
    Ok((t, rows.len()))
}

impl AlignedSample {
    pub fn new(
        day: Vec<f64>,
        week: &[Vec<f64>],
        month: &[Vec<f64>],
        label: u8,
        date: NaiveDate,
        capacities: (usize, usize),
    ) -> Result<Self> {
        let d = day.len();
        if d == 0 {
            return Err(Error::Empty("aligned sample day embedding"));
        }
        let (week, week_valid) = padded(week, capacities.0, d)?;
        let (month, month_valid) = padded(month, capacities.1, d)?;
        Ok(AlignedSample {
            day,
            week,
            week_valid,
            month,
            month_valid,
            label,
            date,
        })
    }

    pub fn dim(&self) -> usize {
        self.day.len()
    }

    fn rows(t: &Tensor, valid: usize) -> impl Iterator<Item = &[f64]> {
        let d = t.shape()[1];
        t.data().chunks(d).take(valid)
    }

    pub fn week_rows(&self) -> impl Iterator<Item = &[f64]> {
        Self::rows(&self.week, self.week_valid)
    }

    pub fn month_rows(&self) -> impl Iterator<Item = &[f64]> {
        Self::rows(&self.month, self.month_valid)
    }

    /// Month history followed by the day vector, in date order.
    pub fn event_sequence(&self) -> Vec<Vec<f64>> {
        let mut seq: Vec<Vec<f64>> = self.month_rows().map(<[f64]>::to_vec).collect();
        seq.push(self.day.clone());
        seq
    }
}

fn mean_vector(items: &[EventEmbedding], dim: usize) -> Vec<f64> {
    let mut acc = alloc::vec![0.0; dim];
    for e in items {
        acc.iter_mut().zip(&e.u).for_each(|(a, x)| *a += x);
    }
    if items.len() > 1 {
        acc.iter_mut().for_each(|a| *a /= items.len() as f64);
    }
    acc
}

/// One mean vector per calendar day, oldest first.
fn daily_means(items: &[EventEmbedding], dim: usize) -> Vec<Vec<f64>> {
    items
        .chunk_by(|a, b| a.date == b.date)
        .map(|day| mean_vector(day, dim))
        .collect()
}

/// Build the sample for `day` from date-sorted event embeddings.
///
/// Same-day events are averaged into the day vector. Week and month
/// histories hold one averaged vector per calendar day that had events, so
/// a 7/30-day look-back never exceeds capacities 7/30.
pub fn build_sample(
    events: &[EventEmbedding],
    day: NaiveDate,
    label: u8,
    lags: Lags,
    dim: usize,
) -> Result<AlignedSample> {
    if events.iter().any(|e| e.u.len() != dim) {
        return Err(Error::shape("build_sample", &[dim], &[]));
    }
    let h = align_event_horizons(events, day, lags);
    let day_vec = mean_vector(h.day, dim);
    let week = daily_means(h.week, dim);
    let month = daily_means(h.month, dim);
    AlignedSample::new(
        day_vec,
        &week,
        &month,
        label,
        day,
        (lags.week as usize, lags.month as usize),
    )
}

/// A model emitting a `[p_down, p_up]` distribution.
pub trait Classifier: Parameters {
    type Input: Labeled;

    /// Distribution node given the model's parameter handles (from
    /// [`Parameters::bind`]).
    fn distribution(&self, tape: &mut Tape, vars: &[Var], input: &Self::Input) -> Result<Var>;

    fn predict_proba(&self, input: &Self::Input) -> Result<[f64; 2]> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let y = self.distribution(&mut tape, &vars, input)?;
        let d = tape.value(y).data();
        Ok([d[0], d[1]])
    }

    /// Hard label: 1 when `p_up >= 0.5`.
    fn predict(&self, input: &Self::Input) -> Result<u8> {
        Ok(u8::from(self.predict_proba(input)?[1] >= 0.5))
    }
}

/// Cross-entropy of the model's distribution against the input's label.
pub fn cross_entropy_on_tape<C: Classifier>(model: &C, tape: &mut Tape, vars: &[Var], input: &C::Input) -> Result<Var> {
    let y = model.distribution(tape, vars, input)?;
    tape.neg_log_pick(y, usize::from(input.label()))
}
