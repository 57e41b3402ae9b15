//! Federated training strategies and the round loop.
//!
//! Clients train locally, the server groups them and averages parameters
//! within each group. Four strategies differ only in how groups are formed:
//! none (local only), one global group (FedAvg), affinity propagation over
//! parameter cosine similarity (FedCos), or over cross-client predictive
//! uncertainty (FedSNGP).

mod matrices;
mod ood;
mod pca;
mod round;
mod server;

use serde::{Deserialize, Serialize};

use crate::clustering::ApConfig;
use crate::signal::Dataset;
use crate::sngp::SngpModel;

pub use matrices::{
    build_cosine_similarity_matrix, build_uncertainty_matrix, cosine_matrix, cosine_similarity,
    similarity_from_uncertainty, uncertainty_row, weighted_average, UncertaintyMatrix,
};
pub use ood::{cluster_models, ood_resolve, ClusterModel, OodOutcome};
pub use pca::{pca_parameter_trajectories, PcaProjection};
pub use round::{parameter_digest, run_federation, run_round, FederationOutcome, RoundLog};
pub use server::{ClientUpload, Server};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    #[serde(alias = "local_only", alias = "local-only")]
    LocalOnly,
    FedAvg,
    FedCos,
    FedSngp,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [Self::LocalOnly, Self::FedAvg, Self::FedCos, Self::FedSngp];

    pub fn name(self) -> &'static str {
        match self {
            Self::LocalOnly => "localonly",
            Self::FedAvg => "fedavg",
            Self::FedCos => "fedcos",
            Self::FedSngp => "fedsngp",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "localonly" | "local" => Ok(Self::LocalOnly),
            "fedavg" => Ok(Self::FedAvg),
            "fedcos" => Ok(Self::FedCos),
            "fedsngp" => Ok(Self::FedSngp),
            _ => Err(format!("unknown strategy `{s}` (localonly, fedavg, fedcos, fedsngp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub rounds: usize,
    pub local_epochs: usize,
    pub learning_rate: f64,
    /// Epochs of the single training pass used by the local-only baseline.
    pub local_only_epochs: usize,
    pub ap: ApConfig,
    /// A test sample is in distribution for a model when its variance is
    /// below this factor times the model's training-population variance.
    pub ood_threshold_factor: f64,
    /// Skip clustering and put every client into one cluster.
    pub force_single_cluster: bool,
    /// Share of each client's training data set aside, never trained on,
    /// for scoring every client's model. Zero scores on the full training set.
    pub uncertainty_holdout: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            kind: StrategyKind::FedSngp,
            rounds: 50,
            local_epochs: 5,
            learning_rate: 0.005,
            local_only_epochs: 250,
            ap: ApConfig::default(),
            ood_threshold_factor: 10.0,
            force_single_cluster: false,
            uncertainty_holdout: 0.0,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("strategy.learning_rate", "must be positive"));
        }
        if self.local_epochs == 0 {
            return Err(Error::config("strategy.local_epochs", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.uncertainty_holdout) {
            return Err(Error::config("strategy.uncertainty_holdout", "must lie in [0, 1)"));
        }
        if !(self.ood_threshold_factor.is_finite() && self.ood_threshold_factor > 0.0) {
            return Err(Error::config("strategy.ood_threshold_factor", "must be positive"));
        }
        self.ap.validate().map_err(|e| Error::config("strategy.ap", e.to_string()))
    }
}

/// One participant: private data and its current model.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub id: usize,
    pub condition_id: usize,
    pub train: Dataset,
    pub test: Dataset,
    pub model: SngpModel,
    /// Held-out slice used in place of `train` when scoring models.
    pub probe: Option<Dataset>,
}

impl ClientState {
    pub fn num_train(&self) -> usize {
        self.train.len()
    }

    /// Data this client scores every model on for the uncertainty matrix.
    pub fn uncertainty_set(&self) -> &Dataset {
        self.probe.as_ref().unwrap_or(&self.train)
    }
}
