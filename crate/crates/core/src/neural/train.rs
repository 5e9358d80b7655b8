use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cells::Cache;
use super::NeuralModel;
use crate::error::{Error, Result};
use crate::predictor::PredictionBatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub shuffle_seed: u64,
    /// Stop after this many epochs without a new best validation loss.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 2048,
            learning_rate: 1e-3,
            shuffle_seed: 0,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be finite and non-negative".into()));
        }
        if self.patience == Some(0) {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        Ok(())
    }
}

/// Flat rows of inputs and targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSet {
    pub input_len: usize,
    pub output_len: usize,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

impl TrainSet {
    pub fn new(input_len: usize, output_len: usize) -> Self {
        Self {
            input_len,
            output_len,
            ..Self::default()
        }
    }

    /// Rows of `batch` with targets at the given horizons.
    pub fn from_batch(batch: &PredictionBatch, horizons: &[usize]) -> Self {
        let mut set = Self::new(batch.input_len, horizons.len());
        set.append_batch(batch, horizons);
        set
    }

    pub fn append_batch(&mut self, batch: &PredictionBatch, horizons: &[usize]) {
        assert_eq!(batch.input_len, self.input_len);
        assert_eq!(horizons.len(), self.output_len);
        for r in 0..batch.len() {
            self.inputs.extend_from_slice(batch.input(r));
            self.targets.extend(horizons.iter().map(|&h| batch.target_at(r, h)));
        }
    }

    pub fn len(&self) -> usize {
        if self.input_len == 0 {
            0
        } else {
            self.inputs.len() / self.input_len
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Adaptive-moment optimizer.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.learning_rate * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub epochs: Vec<EpochLoss>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl LossHistory {
    pub fn best_val_loss(&self) -> f64 {
        self.epochs[self.best_epoch - 1].val_loss
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["epoch", "train_loss", "val_loss"])?;
        for e in &self.epochs {
            wtr.write_record([e.epoch.to_string(), e.train_loss.to_string(), e.val_loss.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Minimizes the mean squared error with minibatch Adam and returns the
/// parameters with the lowest validation loss.
pub fn train(
    model: &NeuralModel,
    train_set: &TrainSet,
    val_set: &TrainSet,
    config: &TrainConfig,
) -> Result<(NeuralModel, LossHistory)> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config("training and validation sets must be non-empty".into()));
    }
    for set in [train_set, val_set] {
        if set.input_len != model.input_len() || set.output_len != model.output_len() {
            return Err(Error::Domain("training set shape does not match the model".into()));
        }
    }
    let (p, out) = (model.input_len(), model.output_len());
    let mut current = model.clone();
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut history = LossHistory::default();
    let mut adam = Adam::new(current.params().len(), config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grad = vec![0.0; current.params().len()];
    let mut cache = Cache::default();
    let mut xb = Vec::with_capacity(config.batch_size * p);
    let mut yb = Vec::with_capacity(config.batch_size * out);
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(config.batch_size) {
            xb.clear();
            yb.clear();
            for &s in chunk {
                xb.extend_from_slice(&train_set.inputs[s * p..(s + 1) * p]);
                yb.extend_from_slice(&train_set.targets[s * out..(s + 1) * out]);
            }
            let loss = current
                .accumulate(&xb, &yb, &mut grad, &mut cache)
                .map_err(|e| Error::Training {
                    epoch,
                    detail: e.to_string(),
                })?;
            weighted += loss * chunk.len() as f64;
            adam.step(current.params_mut(), &grad);
        }
        let train_loss = weighted / train_set.len() as f64;
        let val_loss = current.evaluate(&val_set.inputs, &val_set.targets)?;
        if !val_loss.is_finite() || current.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::Training {
                epoch,
                detail: format!("validation loss became {val_loss}"),
            });
        }
        history.epochs.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
        if val_loss < best_val {
            best_val = val_loss;
            best.params_mut().copy_from_slice(current.params());
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if config.patience.is_some_and(|pat| stale >= pat) {
                log::info!("early stop at epoch {epoch}, best epoch {}", history.best_epoch);
                break;
            }
        }
    }
    Ok((best, history))
}
