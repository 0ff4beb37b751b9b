use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{cross_entropy_on_tape, Classifier, Labeled};
use crate::nnkit::{Adam, AdamConfig, Tape, Tensor, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Reshuffle the training set every epoch; otherwise visit it in order.
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 50,
            learning_rate: 0.001,
            shuffle: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean cross-entropy over the epoch's batches.
    pub loss: f64,
    pub train_acc: f64,
    /// `None` when no test samples were given.
    pub test_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub curve: Vec<EpochMetrics>,
    /// Training-set indices in the order they were visited, per epoch.
    pub visit_order: Vec<Vec<usize>>,
}

pub(crate) fn collect_grads(tape: &Tape, vars: &[Var], params: &[&Tensor]) -> Vec<Vec<f64>> {
    params
        .iter()
        .zip(vars)
        .map(|(p, v)| match tape.grad(*v) {
            Some(g) => g.to_vec(),
            None => vec![0.0; p.len()],
        })
        .collect()
}

fn accuracy_of<C: Classifier>(model: &C, samples: &[C::Input]) -> Result<f64> {
    let mut hits = 0usize;
    for s in samples {
        if model.predict(s)? == s.label() {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Mini-batch Adam on mean cross-entropy, recording accuracy after every
/// epoch.
pub fn train_classifier<C: Classifier>(
    model: &mut C,
    train: &[C::Input],
    test: &[C::Input],
    config: &TrainConfig,
) -> Result<TrainReport> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
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
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = TrainReport {
        curve: Vec::with_capacity(config.epochs),
        visit_order: Vec::with_capacity(config.epochs),
    };

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mut tape = Tape::new();
            let vars = model.bind(&mut tape);
            let mut total: Option<Var> = None;
            for &i in batch {
                let ce = cross_entropy_on_tape(model, &mut tape, &vars, &train[i])?;
                total = Some(match total {
                    None => ce,
                    Some(acc) => tape.add(acc, ce)?,
                });
            }
            let mean = tape.scale(total.expect("non-empty batch"), 1.0 / batch.len() as f64);
            let value = tape.scalar(mean);
            if !value.is_finite() {
                return Err(Error::NonFinite(alloc::format!("classifier loss at epoch {epoch}")));
            }
            loss_sum += value;
            batches += 1;
            tape.backward(mean);
            let grads = collect_grads(&tape, &vars, &model.parameters());
            adam.step(&mut model.parameters_mut(), &grads)?;
        }
        report.visit_order.push(order.clone());
        report.curve.push(EpochMetrics {
            epoch: epoch + 1,
            loss: loss_sum / batches as f64,
            train_acc: accuracy_of(model, train)?,
            test_acc: if test.is_empty() {
                None
            } else {
                Some(accuracy_of(model, test)?)
            },
        });
    }
    Ok(report)
}
