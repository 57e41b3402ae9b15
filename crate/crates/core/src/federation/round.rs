use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrices::{uncertainty_row, UncertaintyMatrix};
use super::server::{ClientUpload, Server};
use super::{ClientState, StrategyConfig, StrategyKind};
use crate::clustering::ClusterAssignment;
use crate::error::Result;
use crate::rng::{derive, stream};
use crate::signal::train_test_split;
use crate::scenarios::{evaluate, ClientData, ClientMetrics, Metrics};
use crate::sngp::{recompute_precision, train_epochs, SngpConfig, SngpModel};

/// Everything recorded about one communication round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    /// One-based round number.
    pub round: usize,
    pub strategy: StrategyKind,
    pub assignment: ClusterAssignment,
    pub uncertainty: Option<UncertaintyMatrix>,
    pub similarity: Option<Array2<f64>>,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub parameter_digests: Vec<String>,
}

/// Short fingerprint of a parameter vector: equal vectors give equal digests.
pub fn parameter_digest(params: &[f64]) -> String {
    let bits: Vec<u64> = params.iter().map(|v| v.to_bits()).collect();
    format!("{:016x}", derive(params.len() as u64, &bits))
}

fn each_client<F>(clients: &mut [ClientState], pool: Option<&rayon::ThreadPool>, f: F) -> Result<()>
where
    F: Fn(&mut ClientState) -> Result<()> + Sync + Send,
{
    match pool {
        Some(p) => p.install(|| clients.par_iter_mut().try_for_each(&f)),
        None => clients.iter_mut().try_for_each(f),
    }
}

fn map_clients<T, F>(clients: &[ClientState], pool: Option<&rayon::ThreadPool>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ClientState) -> Result<T> + Sync + Send,
{
    match pool {
        Some(p) => p.install(|| clients.par_iter().map(&f).collect()),
        None => clients.iter().map(f).collect(),
    }
}

fn evaluate_all(clients: &[ClientState], pool: Option<&rayon::ThreadPool>) -> Result<Vec<ClientMetrics>> {
    map_clients(clients, pool, |c| evaluate(&c.model, &c.test))
}

fn log_round(
    round: usize,
    kind: StrategyKind,
    clients: &[ClientState],
    assignment: ClusterAssignment,
    uncertainty: Option<UncertaintyMatrix>,
    similarity: Option<Array2<f64>>,
    pool: Option<&rayon::ThreadPool>,
) -> Result<RoundLog> {
    let metrics = Metrics::new(evaluate_all(clients, pool)?);
    Ok(RoundLog {
        round,
        strategy: kind,
        assignment,
        uncertainty,
        similarity,
        accuracies: metrics.per_client.iter().map(|m| m.accuracy).collect(),
        mean_accuracy: metrics.mean_accuracy,
        parameter_digests: clients.iter().map(|c| parameter_digest(&c.model.flat_parameters())).collect(),
    })
}

/// One communication round: local training, grouping, within-group
/// averaging, then every client rebuilds its Laplace precision on its own
/// data. `round` is one-based.
pub fn run_round(
    clients: &mut [ClientState],
    cfg: &StrategyConfig,
    round: usize,
    seed: u64,
    pool: Option<&rayon::ThreadPool>,
) -> Result<RoundLog> {
    let (epochs, kind) = (cfg.local_epochs, cfg.kind);
    each_client(clients, pool, |c| {
        let s = derive(seed, &[stream::TRAIN, c.id as u64, round as u64]);
        train_epochs(&mut c.model, &c.train, epochs, cfg.learning_rate, s)
    })?;

    let uploads: Vec<ClientUpload> = clients
        .iter()
        .map(|c| ClientUpload {
            client_id: c.id,
            parameters: c.model.flat_parameters(),
            num_samples: c.num_train(),
        })
        .collect();
    let rows = if kind == StrategyKind::FedSngp && !cfg.force_single_cluster {
        // Clients receive every model and report one variance per model.
        let models: Vec<&SngpModel> = clients.iter().map(|c| &c.model).collect();
        let vseed = derive(seed, &[stream::VARIANCE, round as u64]);
        Some(map_clients(clients, pool, |c| uncertainty_row(c.uncertainty_set(), &models, vseed))?)
    } else {
        None
    };
    let server = Server {
        ap: cfg.ap.clone(),
        force_single_cluster: cfg.force_single_cluster,
    };
    let grouping = server.group(kind, &uploads, rows.as_deref())?;
    let new_params = server.aggregate(&uploads, &grouping.assignment)?;
    for (c, p) in clients.iter_mut().zip(&new_params) {
        c.model.set_flat_parameters(p)?;
    }
    each_client(clients, pool, |c| recompute_precision(&mut c.model, &c.train))?;

    log::info!(
        "round {round} {kind}: {} clusters, converged {}",
        grouping.assignment.num_clusters(),
        grouping.assignment.converged
    );
    log_round(
        round,
        kind,
        clients,
        grouping.assignment,
        grouping.uncertainty,
        grouping.similarity.map(|s| s.values().clone()),
        pool,
    )
}

#[derive(Debug, Clone)]
pub struct FederationOutcome {
    pub rounds: Vec<RoundLog>,
    pub clients: Vec<ClientState>,
    pub final_metrics: Metrics,
    pub final_assignment: ClusterAssignment,
}

/// Build clients from partitioned data and run the configured strategy.
///
/// Every client starts from the same initialised model. The local-only
/// baseline runs one pass of `local_only_epochs`; other strategies run
/// `rounds` communication rounds. `on_round` sees each round as it ends.
pub fn run_federation(
    data: Vec<ClientData>,
    sngp: &SngpConfig,
    cfg: &StrategyConfig,
    seed: u64,
    parallel_clients: usize,
    on_round: &mut dyn FnMut(&RoundLog) -> Result<()>,
) -> Result<FederationOutcome> {
    cfg.validate()?;
    let model_cfg = SngpConfig {
        seed: derive(seed, &[stream::MODEL_INIT]),
        ..sngp.clone()
    };
    let initial = SngpModel::init(&model_cfg)?;
    let pool = if parallel_clients > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(parallel_clients)
                .build()
                .map_err(|e| crate::Error::InvalidValue(e.to_string()))?,
        )
    } else {
        None
    };
    let pool = pool.as_ref();

    let mut clients: Vec<ClientState> = data
        .into_iter()
        .enumerate()
        .map(|(id, d)| {
            let (train, probe) = if cfg.uncertainty_holdout > 0.0 {
                let s = derive(seed, &[stream::HOLDOUT, id as u64]);
                let split = train_test_split(&d.train, 1.0 - cfg.uncertainty_holdout, s)?;
                (split.train, Some(split.test))
            } else {
                (d.train, None)
            };
            Ok(ClientState {
                id,
                condition_id: d.condition_id,
                train,
                test: d.test,
                model: initial.clone(),
                probe,
            })
        })
        .collect::<Result<_>>()?;
    each_client(&mut clients, pool, |c| recompute_precision(&mut c.model, &c.train))?;
    let n = clients.len();

    let mut rounds = Vec::new();
    let mut final_assignment = if cfg.kind == StrategyKind::LocalOnly {
        ClusterAssignment::singletons(n)
    } else {
        ClusterAssignment::single(n)
    };
    if cfg.kind == StrategyKind::LocalOnly {
        if cfg.rounds > 0 {
            each_client(&mut clients, pool, |c| {
                let s = derive(seed, &[stream::TRAIN, c.id as u64, 0]);
                train_epochs(&mut c.model, &c.train, cfg.local_only_epochs, cfg.learning_rate, s)
            })?;
            let log = log_round(1, cfg.kind, &clients, final_assignment.clone(), None, None, pool)?;
            on_round(&log)?;
            rounds.push(log);
        }
    } else {
        for r in 1..=cfg.rounds {
            let log = run_round(&mut clients, cfg, r, seed, pool)?;
            on_round(&log)?;
            final_assignment = log.assignment.clone();
            rounds.push(log);
        }
    }
    let final_metrics = Metrics::new(evaluate_all(&clients, pool)?);
    Ok(FederationOutcome {
        rounds,
        clients,
        final_metrics,
        final_assignment,
    })
}
