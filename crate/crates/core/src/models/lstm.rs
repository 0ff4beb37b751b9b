use alloc::vec::Vec;
use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AlignedSample, Classifier};
use crate::marketdata::{MinMaxScaler, PriceSeries, FEATURES};
use crate::nnkit::{Adam, AdamConfig, LstmCell, LstmVars, Parameters, Tape, Tensor, Var};
use crate::{Error, Result};

pub const FORECAST_HIDDEN: usize = 8;
const CLOSE: usize = 1;

/// Run `cell` over `inputs` from zero state; returns the final hidden node.
fn encode(tape: &mut Tape, cell: &LstmCell, vars: &[Var], inputs: &[&[f64]]) -> Result<Var> {
    if inputs.is_empty() {
        return Err(Error::Empty("lstm sequence"));
    }
    let lv = LstmVars::from_slice(vars);
    let n = cell.hidden_size();
    let mut h = tape.leaf(Tensor::zeros(&[n]));
    let mut c = tape.leaf(Tensor::zeros(&[n]));
    for x in inputs {
        let x = tape.leaf(Tensor::vector(x.to_vec()));
        (h, c) = cell.step(tape, &lv, x, h, c)?;
    }
    Ok(h)
}

/// LSTM over event embeddings with a sigmoid head on the last hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmClassifier {
    pub cell: LstmCell,
    /// `[1, hidden]`
    pub head_w: Tensor,
    pub head_b: Tensor,
}

impl LstmClassifier {
    pub const DEFAULT_HIDDEN: usize = 16;

    pub fn zeros(dim: usize, hidden: usize) -> Self {
        LstmClassifier {
            cell: LstmCell::zeros(dim, hidden),
            head_w: Tensor::zeros(&[1, hidden]),
            head_b: Tensor::zeros(&[1]),
        }
    }

    pub fn new<R: Rng + ?Sized>(dim: usize, hidden: usize, rng: &mut R) -> Self {
        LstmClassifier {
            cell: LstmCell::new(dim, hidden, rng),
            head_w: Tensor::glorot(&[1, hidden], hidden, 1, rng),
            head_b: Tensor::zeros(&[1]),
        }
    }

    fn p_up_on_tape(&self, tape: &mut Tape, vars: &[Var], seq: &[&[f64]]) -> Result<Var> {
        let h = encode(tape, &self.cell, vars, seq)?;
        let z = tape.matvec(vars[12], h)?;
        let z = tape.add(z, vars[13])?;
        Ok(tape.sigmoid(z))
    }
}

/// Probability of an up move after reading `sequence` in order.
pub fn lstm_classify(sequence: &[Vec<f64>], params: &LstmClassifier) -> Result<f64> {
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let seq: Vec<&[f64]> = sequence.iter().map(Vec::as_slice).collect();
    let p = params.p_up_on_tape(&mut tape, &vars, &seq)?;
    Ok(tape.scalar(p))
}

impl Parameters for LstmClassifier {
    fn parameters(&self) -> Vec<&Tensor> {
        let mut v = self.cell.parameters();
        v.push(&self.head_w);
        v.push(&self.head_b);
        v
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.cell.parameters_mut();
        v.push(&mut self.head_w);
        v.push(&mut self.head_b);
        v
    }
}

impl Classifier for LstmClassifier {
    type Input = AlignedSample;

    /// Reads [`AlignedSample::event_sequence`].
    fn distribution(&self, tape: &mut Tape, vars: &[Var], input: &AlignedSample) -> Result<Var> {
        let seq = input.event_sequence();
        let seq: Vec<&[f64]> = seq.iter().map(Vec::as_slice).collect();
        let p = self.p_up_on_tape(tape, vars, &seq)?;
        let q = tape.scale(p, -1.0);
        let q = tape.add_scalar(q, 1.0);
        tape.concat(&[q, p])
    }
}

/// `s` normalized feature rows and the next `k` normalized closes.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastWindow {
    pub rows: Vec<[f64; FEATURES]>,
    pub targets: Vec<f64>,
    pub end_date: NaiveDate,
}

impl ForecastWindow {
    pub fn horizon(&self) -> usize {
        self.targets.len()
    }
}

/// Every length-`s` window with `k` following closes, normalized over the
/// whole series.
pub fn forecast_windows(series: &PriceSeries, s: usize, k: usize) -> Result<Vec<ForecastWindow>> {
    forecast_windows_fitted(series, s, k, series.len())
}

/// Like [`forecast_windows`], but the scaler is fitted on the first
/// `fit_bars` bars only, so later windows may leave `[0, 1]`.
pub fn forecast_windows_fitted(
    series: &PriceSeries,
    s: usize,
    k: usize,
    fit_bars: usize,
) -> Result<Vec<ForecastWindow>> {
    if s == 0 || k == 0 {
        return Err(Error::invalid("window length and horizon must be positive"));
    }
    let rows = series.feature_rows();
    let scaler = MinMaxScaler::fit(&rows[..fit_bars.min(rows.len())])?;
    let norm: Vec<[f64; FEATURES]> = rows.iter().map(|r| scaler.transform(r)).collect();
    let bars = series.bars();
    if bars.len() < s + k {
        return Ok(Vec::new());
    }
    Ok((0..=bars.len() - s - k)
        .map(|i| ForecastWindow {
            rows: norm[i..i + s].to_vec(),
            targets: norm[i + s..i + s + k].iter().map(|r| r[CLOSE]).collect(),
            end_date: bars[i + s - 1].date,
        })
        .collect())
}

/// 8-unit LSTM over price windows with a direct `k`-output linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmForecaster {
    pub cell: LstmCell,
    /// `[k, hidden]`
    pub head_w: Tensor,
    pub head_b: Tensor,
}

impl LstmForecaster {
    pub fn zeros(k: usize, hidden: usize) -> Result<Self> {
        if k == 0 || hidden == 0 {
            return Err(Error::invalid("horizon and hidden size must be positive"));
        }
        Ok(LstmForecaster {
            cell: LstmCell::zeros(FEATURES, hidden),
            head_w: Tensor::zeros(&[k, hidden]),
            head_b: Tensor::zeros(&[k]),
        })
    }

    pub fn new<R: Rng + ?Sized>(k: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        let mut f = Self::zeros(k, hidden)?;
        f.cell = LstmCell::new(FEATURES, hidden, rng);
        f.head_w = Tensor::glorot(&[k, hidden], hidden, k, rng);
        Ok(f)
    }

    pub fn horizon(&self) -> usize {
        self.head_b.len()
    }

    pub fn forward_on_tape(&self, tape: &mut Tape, vars: &[Var], rows: &[[f64; FEATURES]]) -> Result<Var> {
        let inputs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let h = encode(tape, &self.cell, vars, &inputs)?;
        let y = tape.matvec(vars[12], h)?;
        tape.add(y, vars[13])
    }

    /// Squared error averaged over the horizon.
    pub fn mse_on_tape(&self, tape: &mut Tape, vars: &[Var], w: &ForecastWindow) -> Result<Var> {
        if w.horizon() != self.horizon() {
            return Err(Error::shape("lstm_forecast", &[self.horizon()], &[w.horizon()]));
        }
        let y = self.forward_on_tape(tape, vars, &w.rows)?;
        let t = tape.leaf(Tensor::vector(w.targets.clone()));
        let e = tape.sub(y, t)?;
        let sq = tape.sum_squares(e);
        Ok(tape.scale(sq, 1.0 / w.horizon() as f64))
    }

    pub fn lstm_forecast(&self, rows: &[[f64; FEATURES]]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let vars = self.bind(&mut tape);
        let y = self.forward_on_tape(&mut tape, &vars, rows)?;
        Ok(tape.value(y).data().to_vec())
    }

    /// Mean per-window MSE.
    pub fn mse(&self, windows: &[ForecastWindow]) -> Result<f64> {
        if windows.is_empty() {
            return Err(Error::Empty("forecast windows"));
        }
        let mut total = 0.0;
        for w in windows {
            let mut tape = Tape::new();
            let vars = self.bind(&mut tape);
            let l = self.mse_on_tape(&mut tape, &vars, w)?;
            total += tape.scalar(l);
        }
        Ok(total / windows.len() as f64)
    }
}

impl Parameters for LstmForecaster {
    fn parameters(&self) -> Vec<&Tensor> {
        let mut v = self.cell.parameters();
        v.push(&self.head_w);
        v.push(&self.head_b);
        v
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.cell.parameters_mut();
        v.push(&mut self.head_w);
        v.push(&mut self.head_b);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            epochs: 5,
            batch_size: 1,
            learning_rate: 0.001,
            shuffle: false,
            seed: 0,
        }
    }
}

/// Minimise MSE with Adam; returns the mean training MSE of each epoch.
pub fn train_forecaster(
    model: &mut LstmForecaster,
    windows: &[ForecastWindow],
    config: &ForecastConfig,
) -> Result<Vec<f64>> {
    if windows.is_empty() {
        return Err(Error::Empty("forecaster training set"));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be positive"));
    }
    let mut adam = Adam::new(
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        &model.parameters(),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut tape = Tape::new();
            let vars = model.bind(&mut tape);
            let mut total: Option<Var> = None;
            for &i in batch {
                let l = model.mse_on_tape(&mut tape, &vars, &windows[i])?;
                total = Some(match total {
                    None => l,
                    Some(acc) => tape.add(acc, l)?,
                });
            }
            let total = total.expect("non-empty batch");
            let value = tape.scalar(total);
            if !value.is_finite() {
                return Err(Error::NonFinite(alloc::format!("forecaster loss at epoch {epoch}")));
            }
            sum += value;
            let mean = tape.scale(total, 1.0 / batch.len() as f64);
            tape.backward(mean);
            let grads = super::train::collect_grads(&tape, &vars, &model.parameters());
            adam.step(&mut model.parameters_mut(), &grads)?;
        }
        losses.push(sum / windows.len() as f64);
    }
    Ok(losses)
}
