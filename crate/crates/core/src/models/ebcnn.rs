//! Event-based convolutional network and its day-only ablation.
//!
//! ```text
//! V_l = maxpool(conv(E_l))     for l in {month, week}
//! V   = [V_month, V_week, V_day]
//! H   = σ(W1 V + b1)
//! O   = σ(W2 H + b2)
//! y   = softmax(O)             (p_down, p_up)
//! ```

use alloc::vec::Vec;
use rand::Rng;

use super::{AlignedSample, Classifier};
use crate::nnkit::{conv_valid_positions, Parameters, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EbcnnConfig {
    pub dim: usize,
    pub window: usize,
    pub month_channels: usize,
    pub week_channels: usize,
    pub hidden: usize,
}

impl EbcnnConfig {
    pub fn new(dim: usize) -> Self {
        EbcnnConfig {
            dim,
            window: 3,
            month_channels: 40,
            week_channels: 20,
            hidden: 200,
        }
    }

    fn feature_len(&self) -> usize {
        self.month_channels + self.week_channels + self.dim
    }

    fn validate(&self) -> Result<()> {
        if [
            self.dim,
            self.window,
            self.month_channels,
            self.week_channels,
            self.hidden,
        ]
        .contains(&0)
        {
            return Err(Error::invalid("EB-CNN sizes must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbcnnParams {
    config: EbcnnConfig,
    /// `[window, d, month_channels]`
    pub month_kernel: Tensor,
    pub month_bias: Tensor,
    /// `[window, d, week_channels]`
    pub week_kernel: Tensor,
    pub week_bias: Tensor,
    /// `[hidden, month_channels + week_channels + d]`
    pub w1: Tensor,
    pub b1: Tensor,
    /// `[2, hidden]`
    pub w2: Tensor,
    pub b2: Tensor,
}

impl EbcnnParams {
    pub fn zeros(config: EbcnnConfig) -> Result<Self> {
        config.validate()?;
        let EbcnnConfig {
            dim: d,
            window: w,
            month_channels: mc,
            week_channels: wc,
            hidden: h,
        } = config;
        Ok(EbcnnParams {
            config,
            month_kernel: Tensor::zeros(&[w, d, mc]),
            month_bias: Tensor::zeros(&[mc]),
            week_kernel: Tensor::zeros(&[w, d, wc]),
            week_bias: Tensor::zeros(&[wc]),
            w1: Tensor::zeros(&[h, config.feature_len()]),
            b1: Tensor::zeros(&[h]),
            w2: Tensor::zeros(&[2, h]),
            b2: Tensor::zeros(&[2]),
        })
    }

    pub fn new<R: Rng + ?Sized>(config: EbcnnConfig, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let EbcnnConfig {
            dim: d,
            window: w,
            month_channels: mc,
            week_channels: wc,
            hidden: h,
        } = config;
        p.month_kernel = Tensor::glorot(&[w, d, mc], w * d, mc, rng);
        p.week_kernel = Tensor::glorot(&[w, d, wc], w * d, wc, rng);
        p.w1 = Tensor::glorot(&[h, config.feature_len()], config.feature_len(), h, rng);
        p.w2 = Tensor::glorot(&[2, h], h, 2, rng);
        Ok(p)
    }

    pub fn config(&self) -> EbcnnConfig {
        self.config
    }

    /// Pooled feature vector `V` on the tape.
    pub fn features_on_tape(&self, tape: &mut Tape, vars: &[Var], s: &AlignedSample) -> Result<Var> {
        let d = self.config.dim;
        if s.dim() != d {
            return Err(Error::shape("ebcnn", &[d], &[s.dim()]));
        }
        let w = self.config.window;
        let pooled = |tape: &mut Tape, seq: &Tensor, valid: usize, k: Var, b: Var| -> Result<Var> {
            let seq = tape.leaf(seq.clone());
            let conv = tape.conv1d(seq, k, b, valid)?;
            tape.maxpool_time(conv, conv_valid_positions(valid, w))
        };
        let vm = pooled(tape, &s.month, s.month_valid, vars[0], vars[1])?;
        let vw = pooled(tape, &s.week, s.week_valid, vars[2], vars[3])?;
        let vd = tape.leaf(Tensor::vector(s.day.clone()));
        tape.concat(&[vm, vw, vd])
    }
}

impl Parameters for EbcnnParams {
    fn parameters(&self) -> Vec<&Tensor> {
        alloc::vec![
            &self.month_kernel,
            &self.month_bias,
            &self.week_kernel,
            &self.week_bias,
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
        ]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        alloc::vec![
            &mut self.month_kernel,
            &mut self.month_bias,
            &mut self.week_kernel,
            &mut self.week_bias,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ]
    }
}

fn head(tape: &mut Tape, v: Var, w1: Var, b1: Var, w2: Var, b2: Var) -> Result<Var> {
    let h = tape.matvec(w1, v)?;
    let h = tape.add(h, b1)?;
    let h = tape.sigmoid(h);
    let o = tape.matvec(w2, h)?;
    let o = tape.add(o, b2)?;
    let o = tape.sigmoid(o);
    tape.softmax(o)
}

impl Classifier for EbcnnParams {
    type Input = AlignedSample;

    fn distribution(&self, tape: &mut Tape, vars: &[Var], input: &AlignedSample) -> Result<Var> {
        let v = self.features_on_tape(tape, vars, input)?;
        head(tape, v, vars[4], vars[5], vars[6], vars[7])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShortTermConfig {
    pub dim: usize,
    pub hidden: usize,
}

impl ShortTermConfig {
    pub fn new(dim: usize) -> Self {
        ShortTermConfig { dim, hidden: 150 }
    }
}

/// Same head as [`EbcnnParams`] fed with the day vector alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortTermParams {
    config: ShortTermConfig,
    /// `[hidden, d]`
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

impl ShortTermParams {
    pub fn zeros(config: ShortTermConfig) -> Result<Self> {
        if config.dim == 0 || config.hidden == 0 {
            return Err(Error::invalid("short-term sizes must be positive"));
        }
        Ok(ShortTermParams {
            config,
            w1: Tensor::zeros(&[config.hidden, config.dim]),
            b1: Tensor::zeros(&[config.hidden]),
            w2: Tensor::zeros(&[2, config.hidden]),
            b2: Tensor::zeros(&[2]),
        })
    }

    pub fn new<R: Rng + ?Sized>(config: ShortTermConfig, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let (d, h) = (config.dim, config.hidden);
        p.w1 = Tensor::glorot(&[h, d], d, h, rng);
        p.w2 = Tensor::glorot(&[2, h], h, 2, rng);
        Ok(p)
    }

    pub fn config(&self) -> ShortTermConfig {
        self.config
    }
}

impl Parameters for ShortTermParams {
    fn parameters(&self) -> Vec<&Tensor> {
        alloc::vec![&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        alloc::vec![&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

impl Classifier for ShortTermParams {
    type Input = AlignedSample;

    fn distribution(&self, tape: &mut Tape, vars: &[Var], input: &AlignedSample) -> Result<Var> {
        if input.dim() != self.config.dim {
            return Err(Error::shape("short-term", &[self.config.dim], &[input.dim()]));
        }
        let v = tape.leaf(Tensor::vector(input.day.clone()));
        head(tape, v, vars[0], vars[1], vars[2], vars[3])
    }
}
