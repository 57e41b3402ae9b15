//! Federated training of distance-aware fault classifiers with clients
//! grouped by cross-evaluated prediction uncertainty.
//!
//! Modules, bottom up:
//! - [`signal`]: vibration records to fixed-length spectra, synthetic spectra
//! - [`sngp`]: the local classifier and its uncertainty estimates
//! - [`clustering`]: affinity propagation over client similarities
//! - [`federation`]: communication rounds, aggregation strategies, OOD handling
//! - [`scenarios`]: client partitions and evaluation metrics
//! - [`experiment`]: experiment configuration and artifact output

pub mod clustering;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod rng;
pub mod scenarios;
pub mod signal;
pub mod sngp;

pub use clustering::{affinity_propagation, ApConfig, ClusterAssignment, Preference, SimilarityMatrix};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentOutcome};
pub use federation::{ClientState, RoundLog, StrategyConfig, StrategyKind};
pub use scenarios::{ClientData, Metrics, ScenarioSpec};
pub use signal::{Dataset, RawSignal, SpectrumSample};
pub use sngp::{Prediction, SngpConfig, SngpModel};
