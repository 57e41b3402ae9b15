//! Fixtures shared by the benchmarks.

use fedsngp_core::experiment::SyntheticSource;
use fedsngp_core::signal::synth_generate;
use fedsngp_core::sngp::train_epochs;
use fedsngp_core::{Dataset, SngpConfig, SngpModel};

/// Synthetic spectra of one operating condition.
pub fn condition_data(condition: usize, samples_per_class: usize, seed: u64) -> Dataset {
    let src = SyntheticSource {
        samples_per_class,
        ..SyntheticSource::default()
    };
    synth_generate(&src.condition_spec(condition, 3, seed).expect("built-in condition")).expect("valid spec")
}

/// A model with a Laplace posterior fitted on `train`.
pub fn fitted_model(train: &Dataset, rff_dim: usize, seed: u64) -> SngpModel {
    let cfg = SngpConfig {
        rff_dim,
        seed,
        ..SngpConfig::default()
    };
    let mut m = SngpModel::init(&cfg).expect("valid config");
    train_epochs(&mut m, train, 1, cfg.learning_rate, seed).expect("non-empty data");
    m
}
