//! Keyframe extraction: an attention-bottleneck autoencoder embeds frames,
//! k-means groups the embeddings, centroid-nearest frames become keyframe
//! candidates, and near-duplicates are dropped before scoring against
//! interval ground truth.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`). Training and
//! inference use `f32`; the `f64` path exists for gradient checking.

pub mod autoencoder;
pub mod clustering;
pub mod distances;
pub mod error;
pub mod evaluation;
pub mod imaging;
pub mod keyframe;
pub mod numerics;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use rng::Rng;
pub use scalar::Real;

pub type Tensor32 = numerics::Tensor<f32>;
pub type Tensor64 = numerics::Tensor<f64>;
pub type ModelParams32 = autoencoder::ModelParams<f32>;
pub type ModelParams64 = autoencoder::ModelParams<f64>;
pub type ClusterModel32 = clustering::ClusterModel<f32>;
pub type ClusterModel64 = clustering::ClusterModel<f64>;
