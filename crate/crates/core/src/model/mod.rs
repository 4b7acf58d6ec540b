//! The classifier: five 1-D convolution layers (each followed by batch
//! normalization and ReLU), dropout, global max pooling over positions, the
//! six scalar features appended, then three fully connected layers ending in
//! two logits. Forward and backward passes are written out by hand.

mod backward;
mod checkpoint;
mod forward;
mod gemm;
mod metrics;
mod optim;
mod params;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SCALAR_DIM;

pub use backward::backward;
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
};
pub use forward::{argmax, cross_entropy, forward, mean_loss, softmax, ConvTrace, Mode, Trace};
pub use metrics::{evaluate, metrics_from_confusion, metrics_from_predictions, Metrics};
pub use optim::{optimizer_step, OptimizerState};
pub use params::{init_model, ConvLayer, DenseLayer, Gradients, ParameterSet};
pub use train::{predict_logits, train, EpochObserver, TrainOutcome, EVAL_CHUNK};

pub const CONV_LAYERS: usize = 5;
pub const FC_LAYERS: usize = 3;
pub const NUM_CLASSES: usize = 2;
pub const BN_EPS: f64 = 1e-5;
/// Running statistics keep this share of their previous value per batch.
pub const BN_MOMENTUM: f64 = 0.9;

fn default_conv_channels() -> Vec<usize> {
    vec![32, 32, 64, 64, 64]
}

fn default_kernel_size() -> usize {
    3
}

fn default_fc_dims() -> Vec<usize> {
    vec![128, 64, 2]
}

fn default_dropout() -> f64 {
    0.3
}

fn default_max_len() -> usize {
    64
}

fn default_input_dim() -> usize {
    16
}

fn default_scalar_dim() -> usize {
    SCALAR_DIM
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default = "default_conv_channels")]
    pub conv_channels: Vec<usize>,
    #[serde(default = "default_kernel_size")]
    pub kernel_size: usize,
    #[serde(default = "default_fc_dims")]
    pub fc_dims: Vec<usize>,
    #[serde(default = "default_dropout")]
    pub dropout_rate: f64,
    /// Mirrors the feature config.
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// Mirrors the embedding dimension.
    #[serde(default = "default_input_dim")]
    pub input_dim: usize,
    #[serde(default = "default_scalar_dim")]
    pub scalar_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            conv_channels: default_conv_channels(),
            kernel_size: default_kernel_size(),
            fc_dims: default_fc_dims(),
            dropout_rate: default_dropout(),
            max_len: default_max_len(),
            input_dim: default_input_dim(),
            scalar_dim: default_scalar_dim(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.conv_channels.len() != CONV_LAYERS {
            return Err(Error::config(format!(
                "exactly {CONV_LAYERS} conv layers required, got {}",
                self.conv_channels.len()
            )));
        }
        if self.fc_dims.len() != FC_LAYERS {
            return Err(Error::config(format!(
                "exactly {FC_LAYERS} fully connected layers required, got {}",
                self.fc_dims.len()
            )));
        }
        if self.fc_dims[FC_LAYERS - 1] != NUM_CLASSES {
            return Err(Error::config(
                "last fully connected layer must have width 2",
            ));
        }
        if self
            .conv_channels
            .iter()
            .chain(&self.fc_dims)
            .any(|&c| c == 0)
        {
            return Err(Error::config("layer widths must be >= 1"));
        }
        if self.kernel_size == 0 {
            return Err(Error::config("kernel_size must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("dropout_rate must lie in [0, 1)"));
        }
        if self.max_len == 0 || self.input_dim == 0 {
            return Err(Error::config("max_len and input_dim must be >= 1"));
        }
        if self.scalar_dim != SCALAR_DIM {
            return Err(Error::config(format!("scalar_dim must be {SCALAR_DIM}")));
        }
        Ok(())
    }

    /// Width of the first fully connected layer's input.
    pub fn pooled_dim(&self) -> usize {
        self.conv_channels[CONV_LAYERS - 1] + self.scalar_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

fn default_epochs() -> usize {
    5
}

fn default_batch_size() -> usize {
    32
}

fn default_learning_rate() -> f64 {
    1e-3
}

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}

fn default_shuffle() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            optimizer: default_optimizer(),
            seed: 0,
            shuffle: default_shuffle(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be > 0"));
        }
        Ok(())
    }
}
