use serde::{Deserialize, Serialize};

use super::ClientState;
use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::signal::Dataset;
use crate::sngp::{dataset_variance, SngpModel};

/// A cluster's shared model and the variance it shows on its own members'
/// training data.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub cluster: usize,
    pub exemplar: usize,
    pub model: SngpModel,
    pub train_variance: f64,
}

/// One model per cluster, taken from the cluster's exemplar. The training
/// variance is the sample-weighted mean over members.
pub fn cluster_models(clients: &[ClientState], assignment: &ClusterAssignment, seed: u64) -> Result<Vec<ClusterModel>> {
    if assignment.len() != clients.len() {
        return Err(Error::shape(clients.len(), assignment.len()));
    }
    assignment
        .clusters
        .iter()
        .enumerate()
        .map(|(k, cl)| {
            let model = clients[cl.exemplar].model.clone();
            let mut total = 0.0;
            let mut n = 0;
            for &m in &cl.members {
                let c = &clients[m];
                total += dataset_variance(&model, &c.train, seed)? * c.num_train() as f64;
                n += c.num_train();
            }
            Ok(ClusterModel {
                cluster: k,
                exemplar: cl.exemplar,
                model,
                train_variance: total / n.max(1) as f64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum OodOutcome {
    /// The client's own model is confident enough.
    InDistribution { variance: f64 },
    /// Another cluster's model accepted the data with the lowest variance.
    Foreign { cluster: usize, variance: f64 },
    /// No model accepted the data; variances of the foreign models tried.
    Unresolved { variances: Vec<f64> },
}

/// Decide which model should serve `test`. A model accepts when its mean
/// variance on `test` is below `factor` times its training variance.
pub fn ood_resolve(
    own: &SngpModel,
    own_train_variance: f64,
    foreign: &[ClusterModel],
    test: &Dataset,
    factor: f64,
    seed: u64,
) -> Result<OodOutcome> {
    let v = dataset_variance(own, test, seed)?;
    if v <= factor * own_train_variance {
        return Ok(OodOutcome::InDistribution { variance: v });
    }
    let mut best: Option<(usize, f64)> = None;
    let mut variances = Vec::with_capacity(foreign.len());
    for cm in foreign {
        let fv = dataset_variance(&cm.model, test, seed)?;
        variances.push(fv);
        if fv <= factor * cm.train_variance && best.is_none_or(|(_, b)| fv < b) {
            best = Some((cm.cluster, fv));
        }
    }
    Ok(match best {
        Some((cluster, variance)) => OodOutcome::Foreign { cluster, variance },
        None => OodOutcome::Unresolved { variances },
    })
}
