//! Dense autoencoder with an attention-pooling bottleneck.

mod config;
mod gradcheck;
mod io;
mod model;
mod params;
mod train;

pub use config::ModelConfig;
pub use gradcheck::{finite_difference_grads, gradient_errors, relative_error};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, FORMAT_VERSION};
pub use model::{
    batch_loss, encode, encode_batch, forward, loss_and_grads, loss_and_grads_into, relu_margin,
    stack_frames, Forward, LatentFeature,
};
pub use params::{Attention, Dense, ModelParams};
pub use train::{dataset_loss, train, EpochLog, TrainConfig, TrainLog};
