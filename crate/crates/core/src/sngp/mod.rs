//! Spectral-normalized neural Gaussian process classifier.
//!
//! A residual MLP with spectrally normalized weights maps a spectrum to a
//! hidden vector `h`; a frozen random Fourier feature layer turns `h` into
//! `phi`; a Bayesian linear output layer `beta` with a per-class Laplace
//! posterior gives logits with mean and variance.

mod checkpoint;
mod model;
mod posterior;
mod predict;
mod spectral;
mod train;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use model::{Dense, ForwardCache, SngpModel};
pub use posterior::{invert_spd, precision_matrices, recompute_precision};
pub use predict::{
    dataset_variance, mc_prob_variance, mc_prob_variance_from_moments, mean_field_probs, predict, predict_batch,
    sample_seed, Prediction,
};
pub(crate) use predict::{argmax, logit_moments};
pub use spectral::{power_iteration, spectral_normalize};
pub use train::{loss_and_gradients, train_epochs, Gradients};

/// How per-class probability variances are reduced to one number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceAggregator {
    #[default]
    MeanOverClasses,
    MaxOverClasses,
    /// Variance of the class with the largest mean-field probability.
    PredictedClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SngpConfig {
    pub input_dim: usize,
    pub num_blocks: usize,
    pub hidden_dim: usize,
    pub rff_dim: usize,
    pub num_classes: usize,
    pub spectral_norm_bound: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub mean_field_lambda: f64,
    pub mc_samples: usize,
    pub init_power_iterations: usize,
    pub variance_aggregator: VarianceAggregator,
    pub seed: u64,
}

impl Default for SngpConfig {
    fn default() -> Self {
        Self {
            input_dim: crate::signal::FEATURE_LEN,
            num_blocks: 3,
            hidden_dim: 64,
            rff_dim: 256,
            num_classes: 3,
            spectral_norm_bound: 0.95,
            learning_rate: 0.005,
            batch_size: 64,
            mean_field_lambda: std::f64::consts::PI / 8.0,
            mc_samples: 100,
            init_power_iterations: 20,
            variance_aggregator: VarianceAggregator::MeanOverClasses,
            seed: 0,
        }
    }
}

impl SngpConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("input_dim", self.input_dim),
            ("hidden_dim", self.hidden_dim),
            ("rff_dim", self.rff_dim),
            ("num_classes", self.num_classes),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::config(name, "must be >= 1"));
            }
        }
        if !(self.spectral_norm_bound.is_finite() && self.spectral_norm_bound > 0.0) {
            return Err(Error::config("spectral_norm_bound", "must be > 0"));
        }
        if !(self.mean_field_lambda.is_finite() && self.mean_field_lambda > 0.0) {
            return Err(Error::config("mean_field_lambda", "must be > 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be a positive number"));
        }
        if self.mc_samples < 2 {
            return Err(Error::config("mc_samples", "must be >= 2"));
        }
        Ok(())
    }

    /// Number of trainable parameters.
    pub fn num_parameters(&self) -> usize {
        self.input_dim * self.hidden_dim
            + self.hidden_dim
            + self.num_blocks * (self.hidden_dim * self.hidden_dim + self.hidden_dim)
            + self.rff_dim * self.num_classes
    }
}

pub(crate) fn check_labels(labels: &[usize], classes: usize) -> Result<()> {
    match labels.iter().find(|&&l| l >= classes) {
        Some(&label) => Err(Error::Label { label, classes }),
        None => Ok(()),
    }
}
