use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::encode::{encode_board, Tokens};
use super::model::{ModelError, ModelParams};
use super::optim::OptimizerConfig;
use crate::chess::{Board, ChessError};
use crate::seed;
use crate::team::MemberId;

/// Examples per gradient work item. Partial sums are reduced in chunk
/// order, so results do not depend on thread count.
const GRAD_CHUNK: usize = 8;

/// A state labeled with the member whose move rolled out better, weighted
/// by how much better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub fen: String,
    pub label: MemberId,
    pub weight: f64,
}

impl TrainingExample {
    pub fn encode(&self) -> Result<EncodedExample, ChessError> {
        Ok(EncodedExample {
            tokens: encode_board(&Board::from_fen(&self.fen)?),
            label: self.label,
            weight: self.weight,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub tokens: Tokens,
    pub label: MemberId,
    pub weight: f64,
}

impl EncodedExample {
    pub fn new(board: &Board, label: MemberId, weight: f64) -> EncodedExample {
        EncodedExample {
            tokens: encode_board(board),
            label,
            weight,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    Empty,
    #[error("example weights must be positive and finite")]
    BadWeight,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("training diverged at epoch {epoch}, step {step}: {detail}")]
    Diverged {
        epoch: usize,
        step: usize,
        detail: String,
    },
    #[error("invalid training settings: {0}")]
    Config(String),
}

/// Weighted mean cross-entropy over `batch` and its gradient.
pub fn loss_and_grad(
    params: &ModelParams,
    batch: &[EncodedExample],
) -> Result<(f64, Vec<f64>), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::Empty);
    }
    if batch.iter().any(|e| !(e.weight > 0.0 && e.weight.is_finite())) {
        return Err(TrainError::BadWeight);
    }
    let total_weight: f64 = batch.iter().map(|e| e.weight).sum();
    let layout = params.layout();
    let partials: Vec<Result<(f64, Vec<f64>), ModelError>> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grad = vec![0.0; layout.total];
            let mut loss = 0.0;
            for ex in chunk {
                let coef = ex.weight / total_weight;
                let (ce, _) =
                    params.example_grad(&layout, &ex.tokens, ex.label.index(), coef, &mut grad)?;
                loss += coef * ce;
            }
            Ok((loss, grad))
        })
        .collect();
    let mut loss = 0.0;
    let mut grad = vec![0.0; layout.total];
    for part in partials {
        let (l, g) = part?;
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    if !loss.is_finite() {
        return Err(ModelError::NonFinite("loss".into()).into());
    }
    Ok((loss, grad))
}

/// Fraction of examples whose argmax matches the label; exact ties count
/// one half, the expected score of the coin flip.
pub fn accuracy(params: &ModelParams, examples: &[EncodedExample]) -> Result<f64, ModelError> {
    if examples.is_empty() {
        return Ok(f64::NAN);
    }
    let hits: Vec<Result<f64, ModelError>> = examples
        .par_iter()
        .map(|ex| {
            let l = params.logits(&ex.tokens)?;
            Ok(if l[0] == l[1] {
                0.5
            } else if (l[1] > l[0]) == (ex.label == MemberId::TWO) {
                1.0
            } else {
                0.0
            })
        })
        .collect();
    let mut sum = 0.0;
    for h in hits {
        sum += h?;
    }
    Ok(sum / examples.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            optimizer: OptimizerConfig::default(),
            clip_norm: Some(1.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err("epochs and batch_size must be positive".into());
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err("clip_norm must be positive".into());
            }
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub heldout_accuracy: Option<f64>,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

/// Minibatch training. Shuffles come from `seed`, so the trajectory is a
/// function of (initial params, data, config, seed).
pub fn train_epochs(
    params: &mut ModelParams,
    train: &[EncodedExample],
    heldout: &[EncodedExample],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainReport, TrainError> {
    cfg.validate().map_err(TrainError::Config)?;
    if train.is_empty() {
        return Err(TrainError::Empty);
    }
    let steps_per_epoch = train.len().div_ceil(cfg.batch_size);
    let mut opt = cfg
        .optimizer
        .build(params.data.len(), steps_per_epoch * cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut report = TrainReport::default();
    let total_weight: f64 = train.iter().map(|e| e.weight).sum();
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[epoch as u64]));
        order.shuffle(&mut rng);
        let learning_rate = opt.learning_rate();
        let mut weighted_loss = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<EncodedExample> = idx.iter().map(|&i| train[i].clone()).collect();
            let batch_weight: f64 = batch.iter().map(|e| e.weight).sum();
            let (loss, mut grad) = loss_and_grad(params, &batch).map_err(|e| match e {
                TrainError::Model(m) => TrainError::Diverged {
                    epoch,
                    step,
                    detail: m.to_string(),
                },
                other => other,
            })?;
            weighted_loss += loss * batch_weight;
            if let Some(max) = cfg.clip_norm {
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if norm > max {
                    let k = max / norm;
                    grad.iter_mut().for_each(|g| *g *= k);
                }
            }
            opt.step(&mut params.data, &grad);
            params.check_finite().map_err(|e| TrainError::Diverged {
                epoch,
                step,
                detail: format!("{e} after update (batch loss {loss})"),
            })?;
            step += 1;
        }
        let heldout_accuracy = if heldout.is_empty() {
            None
        } else {
            Some(accuracy(params, heldout)?)
        };
        report.epochs.push(EpochStats {
            epoch,
            train_loss: weighted_loss / total_weight,
            train_accuracy: accuracy(params, train)?,
            heldout_accuracy,
            learning_rate,
        });
    }
    Ok(report)
}
