use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer layout of the autoencoder.
///
/// The encoder is a ReLU MLP whose last layer is read as `token_count` tokens
/// of `token_dim` values each; attention pooling collapses them to a latent
/// vector of `token_dim` values. The decoder mirrors back to the input size,
/// ReLU on hidden layers and a sigmoid on the output layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// `(channels, height, width)`.
    pub input_shape: [usize; 3],
    pub encoder_widths: Vec<usize>,
    pub token_count: usize,
    pub token_dim: usize,
    pub decoder_widths: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_shape: [3, 64, 64],
            encoder_widths: vec![2048, 1024],
            token_count: 16,
            token_dim: 64,
            decoder_widths: vec![1024, 2048],
        }
    }
}

impl ModelConfig {
    /// Reduced layout for gradient checks and fast tests: 3x4x4 input,
    /// encoder `[32, 16]`, 4 tokens of 4, decoder `[16, 32]`.
    pub fn small() -> Self {
        Self {
            input_shape: [3, 4, 4],
            encoder_widths: vec![32, 16],
            token_count: 4,
            token_dim: 4,
            decoder_widths: vec![16, 32],
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn latent_dim(&self) -> usize {
        self.token_dim
    }

    /// `(fan_in, fan_out)` of every encoder layer.
    pub fn encoder_dims(&self) -> Vec<(usize, usize)> {
        chain(self.input_len(), &self.encoder_widths)
    }

    /// `(fan_in, fan_out)` of every decoder layer, output layer included.
    pub fn decoder_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = self.decoder_widths.clone();
        widths.push(self.input_len());
        chain(self.latent_dim(), &widths)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.input_shape.contains(&0) {
            return bad(format!(
                "input shape {:?} has a zero dimension",
                self.input_shape
            ));
        }
        if self.encoder_widths.is_empty() {
            return bad("encoder needs at least one layer".into());
        }
        if self
            .encoder_widths
            .iter()
            .chain(&self.decoder_widths)
            .any(|&w| w == 0)
        {
            return bad("layer widths must be positive".into());
        }
        if self.token_count == 0 || self.token_dim == 0 {
            return bad("token count and dimension must be positive".into());
        }
        let last = *self.encoder_widths.last().expect("non-empty");
        if self.token_count * self.token_dim != last {
            return bad(format!(
                "token_count * token_dim = {} must equal the last encoder width {last}",
                self.token_count * self.token_dim
            ));
        }
        Ok(())
    }
}

fn chain(input: usize, widths: &[usize]) -> Vec<(usize, usize)> {
    let mut prev = input;
    widths
        .iter()
        .map(|&w| {
            let d = (prev, w);
            prev = w;
            d
        })
        .collect()
}
