use super::ModelConfig;
use crate::numerics::{glorot_init, Tensor};
use crate::rng::Rng;
use crate::scalar::Real;

/// Fully connected layer, `y = x W + b` with `W` stored `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
}

impl<T: Real> Dense<T> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            w: Tensor::zeros(&[fan_in, fan_out]),
            b: Tensor::zeros(&[fan_out]),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.dims2().0
    }

    pub fn fan_out(&self) -> usize {
        self.w.dims2().1
    }
}

/// Additive attention scorer: `score(t) = v . tanh(t W + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention<T> {
    pub w: Tensor<T>,
    pub b: Tensor<T>,
    pub v: Tensor<T>,
}

/// Every trainable tensor of the autoencoder. Gradients share this layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub encoder: Vec<Dense<T>>,
    pub attention: Attention<T>,
    pub decoder: Vec<Dense<T>>,
}

impl<T: Real> ModelParams<T> {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let d = cfg.token_dim;
        Self {
            encoder: cfg
                .encoder_dims()
                .into_iter()
                .map(|(i, o)| Dense::zeros(i, o))
                .collect(),
            attention: Attention {
                w: Tensor::zeros(&[d, d]),
                b: Tensor::zeros(&[d]),
                v: Tensor::zeros(&[d]),
            },
            decoder: cfg
                .decoder_dims()
                .into_iter()
                .map(|(i, o)| Dense::zeros(i, o))
                .collect(),
        }
    }

    /// Glorot-uniform weights, zero biases. Draw order: encoder layers,
    /// attention `W`, attention `v` (as a `d x 1` matrix), decoder layers.
    pub fn init(cfg: &ModelConfig, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(cfg);
        for layer in &mut p.encoder {
            layer.w = glorot_init(layer.fan_in(), layer.fan_out(), rng);
        }
        let d = cfg.token_dim;
        p.attention.w = glorot_init(d, d, rng);
        let v: Tensor<T> = glorot_init(d, 1, rng);
        p.attention.v = Tensor::from_vec(&[d], v.into_data()).expect("same length");
        for layer in &mut p.decoder {
            layer.w = glorot_init(layer.fan_in(), layer.fan_out(), rng);
        }
        p
    }

    /// Tensors with their stable names, in serialization order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, l) in self.encoder.iter().enumerate() {
            out.push((format!("encoder.{i}.w"), &l.w));
            out.push((format!("encoder.{i}.b"), &l.b));
        }
        out.push(("attention.w".into(), &self.attention.w));
        out.push(("attention.b".into(), &self.attention.b));
        out.push(("attention.v".into(), &self.attention.v));
        for (i, l) in self.decoder.iter().enumerate() {
            out.push((format!("decoder.{i}.w"), &l.w));
            out.push((format!("decoder.{i}.b"), &l.b));
        }
        out
    }

    /// Mutable tensors in the same order as [`Self::named_tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for l in &mut self.encoder {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        out.push(&mut self.attention.w);
        out.push(&mut self.attention.b);
        out.push(&mut self.attention.v);
        for l in &mut self.decoder {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        out
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        self.named_tensors().into_iter().map(|(_, t)| t).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Converts every tensor to another precision.
    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let dense = |l: &Dense<T>| Dense {
            w: l.w.cast(),
            b: l.b.cast(),
        };
        ModelParams {
            encoder: self.encoder.iter().map(dense).collect(),
            attention: Attention {
                w: self.attention.w.cast(),
                b: self.attention.b.cast(),
                v: self.attention.v.cast(),
            },
            decoder: self.decoder.iter().map(dense).collect(),
        }
    }
}
