//! Training loops: per-event stochastic descent and full-batch BFGS.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bfgs::{minimize, BfgsOptions};
use super::gradient::backprop_gradient;
use super::{MlpError, MlpNetwork};

/// One training or evaluation sample: an input vector (normalized features
/// or codebook entries) and its target value, hadron = 0, gamma = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub input: Vec<f64>,
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMethod {
    Stochastic,
    Bfgs,
}

impl std::fmt::Display for TrainMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainMethod::Stochastic => write!(f, "stochastic"),
            TrainMethod::Bfgs => write!(f, "bfgs"),
        }
    }
}

/// Training knobs. `runs` bounds both trainers: stochastic always performs
/// exactly `runs` passes; BFGS may stop earlier at a stationary point or
/// when the line search gives out.
#[derive(Debug, Clone)]
pub struct MlpTrainConfig {
    pub method: TrainMethod,
    pub runs: usize,
    /// Stochastic base learning rate.
    pub eta0: f64,
    /// Robbins-Monro decay: the step for global update `t` (counted from 0)
    /// is `eta0 / (1 + eta_decay·t)`.
    pub eta_decay: f64,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    pub seed: u64,
}

impl Default for MlpTrainConfig {
    fn default() -> Self {
        MlpTrainConfig {
            method: TrainMethod::Bfgs,
            runs: 1000,
            eta0: 0.1,
            eta_decay: 1e-4,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            seed: 0,
        }
    }
}

/// Train/test error after one run (stochastic pass or BFGS iteration).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecordMlp {
    /// 1-based run number.
    pub run_index: usize,
    pub train_error: f64,
    pub test_error: f64,
}

/// Trains `net` on `train`, logging train/test error once per run.
/// Dispatches on `cfg.method`; both paths are deterministic per seed.
pub fn train(
    net: &MlpNetwork,
    train: &[LabeledSample],
    test: &[LabeledSample],
    cfg: &MlpTrainConfig,
) -> Result<(MlpNetwork, Vec<TrainRecordMlp>), MlpError> {
    if train.is_empty() {
        return Err(MlpError::EmptyTrainSet);
    }
    if test.is_empty() {
        return Err(MlpError::EmptyTestSet);
    }
    match cfg.method {
        TrainMethod::Stochastic => Ok(train_stochastic(net, train, test, cfg)),
        TrainMethod::Bfgs => Ok(train_bfgs(net, train, test, cfg)),
    }
}

/// Robbins-Monro style per-event descent: each run visits every training
/// event in a fresh seeded shuffle and steps by `−η_t · ∇err` where
/// `η_t = eta0/(1 + eta_decay·t)` and `t` counts updates globally across
/// runs (first update uses `t = 0`, i.e. the full `eta0`).
fn train_stochastic(
    net: &MlpNetwork,
    train: &[LabeledSample],
    test: &[LabeledSample],
    cfg: &MlpTrainConfig,
) -> (MlpNetwork, Vec<TrainRecordMlp>) {
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut t: u64 = 0;
    let mut records = Vec::with_capacity(cfg.runs);

    for run in 1..=cfg.runs {
        order.shuffle(&mut rng);
        for &idx in &order {
            let sample = &train[idx];
            let grad = backprop_gradient(&net, &sample.input, sample.target);
            let eta = cfg.eta0 / (1.0 + cfg.eta_decay * t as f64);
            apply_step(&mut net, &grad, -eta);
            t += 1;
        }
        records.push(TrainRecordMlp {
            run_index: run,
            train_error: net.dataset_error(train),
            test_error: net.dataset_error(test),
        });
    }
    (net, records)
}

/// Adds `scale · step` to the network parameters in flatten order.
fn apply_step(net: &mut MlpNetwork, step: &[f64], scale: f64) {
    let mut offset = 0;
    for layer in &mut net.layers {
        for w in &mut layer.weights {
            *w += scale * step[offset];
            offset += 1;
        }
        for b in &mut layer.biases {
            *b += scale * step[offset];
            offset += 1;
        }
    }
    debug_assert_eq!(offset, step.len());
}

/// Full-batch quasi-Newton descent on the mean event error. One record per
/// accepted iteration; the error sequence is non-increasing by the Armijo
/// condition. Stops early (fewer than `cfg.runs` records) at a stationary
/// point or after 60 failed backtracks, returning the best point so far.
fn train_bfgs(
    net: &MlpNetwork,
    train: &[LabeledSample],
    test: &[LabeledSample],
    cfg: &MlpTrainConfig,
) -> (MlpNetwork, Vec<TrainRecordMlp>) {
    let objective = |params: &[f64]| net.with_params(params).dataset_error(train);
    let gradient = |params: &[f64]| {
        let candidate = net.with_params(params);
        let mut sum = vec![0.0; params.len()];
        for sample in train {
            let g = backprop_gradient(&candidate, &sample.input, sample.target);
            for (acc, gi) in sum.iter_mut().zip(&g) {
                *acc += gi;
            }
        }
        let scale = 1.0 / train.len() as f64;
        for gi in &mut sum {
            *gi *= scale;
        }
        sum
    };

    let options = BfgsOptions {
        max_iters: cfg.runs,
        armijo_c: cfg.armijo_c,
        armijo_shrink: cfg.armijo_shrink,
        ..BfgsOptions::default()
    };
    let mut records = Vec::new();
    let outcome = minimize(&net.params(), objective, gradient, &options, |iter, x, fx| {
        records.push(TrainRecordMlp {
            run_index: iter,
            train_error: fx,
            test_error: net.with_params(x).dataset_error(test),
        });
    });
    (net.with_params(&outcome.x), records)
}

/// Writes an error curve as CSV with header `run,train_error,test_error`.
pub fn write_error_curve_csv<W: Write>(w: &mut W, records: &[TrainRecordMlp]) -> io::Result<()> {
    writeln!(w, "run,train_error,test_error")?;
    for r in records {
        writeln!(w, "{},{},{}", r.run_index, r.train_error, r.test_error)?;
    }
    Ok(())
}
