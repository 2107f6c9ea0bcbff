use serde::{Deserialize, Serialize};

use super::model::{batch_loss, loss_and_grads_into, stack_frames};
use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::imaging::FrameTensor;
use crate::numerics::{adam_step, AdamConfig, AdamState};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Every `validation_stride`-th frame is held out; 0 disables validation.
    pub validation_stride: usize,
    /// Epochs without improvement before stopping; 0 never stops early.
    pub early_stop_patience: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            seed: 0,
            validation_stride: 10,
            early_stop_patience: 5,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.validation_stride == 1 {
            return bad("validation stride must be 0 or at least 2");
        }
        if !(self.adam.lr >= 0.0 && self.adam.lr.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        Ok(())
    }

    /// Frame positions held out for validation.
    pub fn is_validation(&self, position: usize) -> bool {
        self.validation_stride > 0 && (position + 1).is_multiple_of(self.validation_stride)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub train_frames: usize,
    pub val_frames: usize,
    /// Training-set loss of the initial parameters.
    pub initial_train_loss: f64,
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    /// Training-set loss of the returned parameters.
    pub final_train_loss: f64,
    pub stopped_early: bool,
}

/// Mean loss over `frames`, evaluated in chunks of `chunk`.
pub fn dataset_loss(
    params: &ModelParams<f32>,
    cfg: &ModelConfig,
    frames: &[&FrameTensor],
    chunk: usize,
) -> f64 {
    let mut sum = 0.0;
    for part in frames.chunks(chunk.max(1)) {
        let x: Vec<f32> = stack_frames(part);
        sum += batch_loss(params, cfg, &x) as f64 * part.len() as f64;
    }
    sum / frames.len() as f64
}

/// Trains an autoencoder from Glorot initialization and returns the
/// parameters with the lowest monitored loss (validation loss when a
/// validation split exists, otherwise the epoch training loss).
pub fn train(
    frames: &[FrameTensor],
    mcfg: &ModelConfig,
    tcfg: &TrainConfig,
) -> Result<(ModelParams<f32>, TrainLog)> {
    mcfg.validate()?;
    tcfg.validate()?;
    if frames.is_empty() {
        return Err(Error::InvalidConfig("no frames to train on".into()));
    }
    let [c, h, w] = mcfg.input_shape;
    if let Some(f) = frames.iter().find(|f| f.shape() != [c, h, w]) {
        return Err(Error::DimensionMismatch(format!(
            "frame {} has shape {:?}, model expects {:?}",
            f.source_index,
            f.shape(),
            mcfg.input_shape
        )));
    }

    let mut train_set: Vec<&FrameTensor> = Vec::new();
    let mut val: Vec<&FrameTensor> = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        if tcfg.is_validation(i) {
            val.push(f);
        } else {
            train_set.push(f);
        }
    }
    if train_set.is_empty() {
        return Err(Error::InvalidConfig(
            "validation split leaves no training frames".into(),
        ));
    }

    let root = Rng::new(tcfg.seed);
    let mut params = ModelParams::init(mcfg, &mut root.derive(0));
    let mut shuffle_rng = root.derive(1);
    let mut grads = ModelParams::zeros(mcfg);
    let mut moments: Vec<AdamState<f32>> = params
        .tensors()
        .iter()
        .map(|t| AdamState::new(t.shape(), tcfg.adam))
        .collect();

    let initial_train_loss = dataset_loss(&params, mcfg, &train_set, tcfg.batch_size);
    log::info!(
        "training on {} frames ({} held out), {} parameters, initial loss {initial_train_loss:.6}",
        train_set.len(),
        val.len(),
        params.parameter_count()
    );

    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut epochs = Vec::with_capacity(tcfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=tcfg.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut sum = 0.0;
        for chunk in order.chunks(tcfg.batch_size) {
            let batch: Vec<&FrameTensor> = chunk.iter().map(|&i| train_set[i]).collect();
            let x: Vec<f32> = stack_frames(&batch);
            let loss = loss_and_grads_into(&params, mcfg, &x, &mut grads);
            sum += loss as f64 * chunk.len() as f64;
            for ((p, g), st) in params
                .tensors_mut()
                .into_iter()
                .zip(grads.tensors())
                .zip(&mut moments)
            {
                adam_step(p, g, st);
            }
        }
        let train_loss = sum / train_set.len() as f64;
        if !train_loss.is_finite() || !params.is_finite() {
            return Err(Error::Internal(format!(
                "training diverged in epoch {epoch}"
            )));
        }
        let val_loss =
            (!val.is_empty()).then(|| dataset_loss(&params, mcfg, &val, tcfg.batch_size));
        log::info!(
            "epoch {epoch}: train {train_loss:.6}{}",
            val_loss.map_or(String::new(), |v| format!(", val {v:.6}"))
        );
        epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
        });

        let monitored = val_loss.unwrap_or(train_loss);
        if monitored < best_loss {
            best_loss = monitored;
            best_epoch = epoch;
            best.clone_from(&params);
            since_best = 0;
        } else {
            since_best += 1;
            if tcfg.early_stop_patience > 0 && since_best >= tcfg.early_stop_patience {
                log::info!("early stop after epoch {epoch}; best epoch {best_epoch}");
                stopped_early = true;
                break;
            }
        }
    }

    let final_train_loss = dataset_loss(&best, mcfg, &train_set, tcfg.batch_size);
    let log = TrainLog {
        train_frames: train_set.len(),
        val_frames: val.len(),
        initial_train_loss,
        epochs,
        best_epoch,
        final_train_loss,
        stopped_early,
    };
    Ok((best, log))
}
