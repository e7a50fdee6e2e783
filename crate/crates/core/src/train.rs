//! Mini-batch training loop with per-epoch logging and best-model retention.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::imaging::{augment, AugmentSpec};
use crate::nn::{Model, ModelError, OptimState, OptimizerKind, SampleOutcome};
use crate::rng::rng_from;
use crate::tensor::Tensor;

/// One normalized input with its class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Tensor,
    pub label: usize,
}

/// Runs independent per-item work. Implementations must return results in
/// index order; the caller reduces them sequentially, so the outcome does
/// not depend on how the work was scheduled.
pub trait Executor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub seed: u64,
    /// Applied to training batches only.
    pub augment: Option<AugmentSpec>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            optimizer: OptimizerKind::sgd(0.9),
            learning_rate: 0.01,
            seed: 0,
            augment: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    BadConfig(&'static str),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    DivergedLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    /// Parameters from the epoch with the highest validation accuracy
    /// (training accuracy when there is no validation set); earliest wins ties.
    pub best: Model,
    pub best_epoch: usize,
    pub logs: Vec<EpochLog>,
}

/// Mean loss and accuracy of `model` over `samples`, summed in order.
pub fn evaluate<E: Executor>(model: &Model, samples: &[Sample], exec: &E) -> Result<(f64, f64), ModelError> {
    if samples.is_empty() {
        return Ok((0.0, 0.0));
    }
    let outcomes = exec.map(samples.len(), |i| model.evaluate(&samples[i].input, samples[i].label));
    let (mut loss, mut correct) = (0.0, 0usize);
    for o in outcomes {
        let o = o?;
        loss += o.loss;
        correct += usize::from(o.correct);
    }
    let n = samples.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Batch-averaged cross-entropy gradient and mean loss for `batch`.
pub fn batch_gradients<E: Executor>(model: &Model, batch: &[&Sample], exec: &E) -> Result<(Vec<Tensor>, f64), ModelError> {
    let per_sample = exec.map(batch.len(), |i| {
        let mut g = model.zero_grads();
        model.accumulate_gradients(&batch[i].input, batch[i].label, &mut g).map(|o| (g, o))
    });
    let mut total = model.zero_grads();
    let mut loss = 0.0;
    for r in per_sample {
        let (g, SampleOutcome { loss: l, .. }) = r?;
        for (t, gi) in total.iter_mut().zip(&g) {
            t.axpy(1.0, gi);
        }
        loss += l;
    }
    let scale = 1.0 / batch.len() as f64;
    for t in &mut total {
        t.data_mut().iter_mut().for_each(|v| *v *= scale);
    }
    Ok((total, loss * scale))
}

/// Trains `model` on `train_set`, recording train/validation loss and
/// accuracy after every epoch. `on_epoch` sees each log as it is produced.
pub fn train<E: Executor>(
    mut model: Model,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
    exec: &E,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome, TrainError> {
    if cfg.epochs == 0 {
        return Err(TrainError::BadConfig("epochs must be at least 1"));
    }
    if cfg.batch_size == 0 {
        return Err(TrainError::BadConfig("batch size must be at least 1"));
    }
    if !cfg.learning_rate.is_finite() || cfg.learning_rate < 0.0 {
        return Err(TrainError::BadConfig("learning rate must be finite and non-negative"));
    }
    if let Some(spec) = &cfg.augment {
        spec.validate().map_err(|_| TrainError::BadConfig("augmentation spec out of range"))?;
    }
    if train_set.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }

    let mut opt = OptimState::new(cfg.optimizer, cfg.learning_rate, model.params());
    let mut logs = Vec::with_capacity(cfg.epochs);
    let mut best = model.clone();
    let (mut best_epoch, mut best_acc) = (0, f64::NEG_INFINITY);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng_from(cfg.seed, &[0xe70c, epoch as u64]));
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let augmented: Vec<Sample>;
            let batch: Vec<&Sample> = match &cfg.augment {
                Some(spec) => {
                    augmented = chunk
                        .iter()
                        .map(|&i| {
                            let mut rng = rng_from(spec.seed, &[epoch as u64, i as u64]);
                            Sample { input: augment(&train_set[i].input, spec, &mut rng), label: train_set[i].label }
                        })
                        .collect();
                    augmented.iter().collect()
                }
                None => chunk.iter().map(|&i| &train_set[i]).collect(),
            };
            let (grads, loss) = batch_gradients(&model, &batch, exec)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::DivergedLoss { epoch, batch: batch_no + 1 });
            }
            opt.apply_update(model.params_mut(), &grads);
        }

        let (train_loss, train_acc) = evaluate(&model, train_set, exec)?;
        let (val_loss, val_acc) = evaluate(&model, val_set, exec)?;
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(TrainError::DivergedLoss { epoch, batch: 0 });
        }
        let log = EpochLog { epoch, train_loss, train_acc, val_loss, val_acc };
        on_epoch(&log);
        logs.push(log);

        let score = if val_set.is_empty() { train_acc } else { val_acc };
        if score > best_acc {
            best_acc = score;
            best_epoch = epoch;
            best = model.clone();
        }
    }
    Ok(TrainOutcome { model, best, best_epoch, logs })
}
