//! Client partitions for the three heterogeneity scenarios, and metrics.
//!
//! Scenario 1: each client holds a label subset of one operating condition
//! and is tested on the same labels. Scenario 2: same training sets, tests
//! balanced over every class. Scenario 3: as 2, with some clients keeping
//! only a fraction of their training share.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive, stream};
use crate::signal::{split_indices, Dataset};
use crate::sngp::SngpModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientPlan {
    pub condition_id: usize,
    pub labels: BTreeSet<usize>,
    /// Share of the client's training portion it keeps, in (0, 1].
    #[serde(default = "one")]
    pub fraction: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestPolicy {
    /// Test labels match the client's training labels.
    SameLabels,
    /// Equal counts of every class.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: u8,
    pub num_classes: usize,
    pub clients: Vec<ClientPlan>,
}

impl ScenarioSpec {
    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn test_policy(&self) -> TestPolicy {
        if self.scenario == 1 {
            TestPolicy::SameLabels
        } else {
            TestPolicy::Balanced
        }
    }

    pub fn conditions(&self) -> BTreeSet<usize> {
        self.clients.iter().map(|c| c.condition_id).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.scenario) {
            return Err(Error::config("scenario.scenario", "must be 1, 2 or 3"));
        }
        if self.clients.is_empty() {
            return Err(Error::config("scenario.clients", "at least one client is required"));
        }
        let mut union = BTreeSet::new();
        for (i, c) in self.clients.iter().enumerate() {
            if c.labels.is_empty() {
                return Err(Error::config(format!("scenario.clients[{i}].labels"), "must not be empty"));
            }
            if let Some(l) = c.labels.iter().find(|&&l| l >= self.num_classes) {
                return Err(Error::config(
                    format!("scenario.clients[{i}].labels"),
                    format!("label {l} >= num_classes {}", self.num_classes),
                ));
            }
            if !(c.fraction > 0.0 && c.fraction <= 1.0) {
                return Err(Error::config(format!("scenario.clients[{i}].fraction"), "must lie in (0, 1]"));
            }
            union.extend(c.labels.iter().copied());
        }
        if union.len() != self.num_classes {
            return Err(Error::config("scenario.clients", "clients jointly must cover every label"));
        }
        if self.scenario == 3 {
            let distinct: BTreeSet<u64> = self.clients.iter().map(|c| c.fraction.to_bits()).collect();
            if distinct.len() < 2 {
                return Err(Error::config("scenario.clients", "scenario 3 needs at least two distinct fractions"));
            }
        }
        Ok(())
    }
}

/// Default fractions cycled over clients in scenario-3 presets.
pub const DEFAULT_SC3_FRACTIONS: [f64; 3] = [1.0, 0.5, 0.2];

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 4] = ["cwru-like", "pu-like", "isu-like", "synth-3group"];

fn set(labels: &[usize]) -> BTreeSet<usize> {
    labels.iter().copied().collect()
}

/// Build a named preset in scenario variant 1, 2 or 3. `fractions` is
/// cycled over clients in scenario 3 and ignored otherwise.
pub fn preset(name: &str, scenario: u8, fractions: &[f64]) -> Result<ScenarioSpec> {
    let (num_classes, plan): (usize, Vec<(usize, BTreeSet<usize>)>) = match name {
        // 6 conditions x 2 clients, each with healthy plus one fault type.
        "cwru-like" => (
            3,
            (0..12).map(|i| (i / 2, if i % 2 == 0 { set(&[0, 1]) } else { set(&[0, 2]) })).collect(),
        ),
        // 4 conditions x 3 clients; the first client of each condition
        // (positions 1, 4, 7, 10 counting from one) holds every label.
        "pu-like" => (
            3,
            (0..12)
                .map(|i| {
                    let labels = match i % 3 {
                        0 => set(&[0, 1, 2]),
                        1 => set(&[0, 1]),
                        _ => set(&[0, 2]),
                    };
                    (i / 3, labels)
                })
                .collect(),
        ),
        // 4 conditions x 3 clients, four classes, three labels per client.
        "isu-like" => (
            4,
            (0..12)
                .map(|i| {
                    let labels = match i % 3 {
                        0 => set(&[0, 1, 2]),
                        1 => set(&[0, 2, 3]),
                        _ => set(&[0, 1, 3]),
                    };
                    (i / 3, labels)
                })
                .collect(),
        ),
        // 3 conditions x 4 clients, two labels per client. In scenario 3 the
        // fractions cycle over conditions, so whole groups are small.
        "synth-3group" => (
            3,
            (0..12)
                .map(|i| {
                    let labels = match i % 4 {
                        0 => set(&[0, 1]),
                        1 => set(&[0, 2]),
                        2 => set(&[1, 2]),
                        _ => set(&[0, 1]),
                    };
                    (i / 4, labels)
                })
                .collect(),
        ),
        other => {
            return Err(Error::config(
                "scenario.preset",
                format!("unknown preset `{other}` (known: {})", PRESET_NAMES.join(", ")),
            ))
        }
    };
    if !(1..=3).contains(&scenario) {
        return Err(Error::config("scenario.scenario", "must be 1, 2 or 3"));
    }
    if scenario == 3 && fractions.is_empty() {
        return Err(Error::config("scenario.fractions", "must not be empty"));
    }
    // The synthetic preset skews quantity per condition, the others per client.
    let per_condition = name == "synth-3group";
    let clients = plan
        .into_iter()
        .enumerate()
        .map(|(i, (condition_id, labels))| {
            let slot = if per_condition { condition_id } else { i };
            ClientPlan {
                condition_id,
                labels,
                fraction: if scenario == 3 { fractions[slot % fractions.len()] } else { 1.0 },
            }
        })
        .collect();
    let spec = ScenarioSpec {
        scenario,
        num_classes,
        clients,
    };
    spec.validate()?;
    Ok(spec)
}

/// Every preset in every scenario variant, keyed `<name>/s<scenario>`.
pub fn builtin_scenario_presets() -> BTreeMap<String, ScenarioSpec> {
    let mut out = BTreeMap::new();
    for name in PRESET_NAMES {
        for sc in 1..=3u8 {
            let spec = preset(name, sc, &DEFAULT_SC3_FRACTIONS).expect("builtin presets are valid");
            out.insert(format!("{name}/s{sc}"), spec);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientData {
    pub condition_id: usize,
    pub train: Dataset,
    pub test: Dataset,
}

/// Split `items` into `parts` contiguous chunks whose sizes differ by at
/// most one; returns chunk `index`.
fn chunk<T: Clone>(items: &[T], parts: usize, index: usize) -> Vec<T> {
    let base = items.len() / parts;
    let extra = items.len() % parts;
    let start = index * base + index.min(extra);
    let len = base + usize::from(index < extra);
    items[start..start + len].to_vec()
}

/// Partition per-condition data into client train and test sets.
///
/// Every condition is split 80/20 (stratified) into a training pool and a
/// test pool. Within a condition, each label's training pool is divided
/// evenly among the clients holding that label, then truncated to the
/// client's fraction. Test sets are carved the same way; for balanced
/// tests, classes a condition lacks are taken from the nearest condition id
/// that has them.
pub fn build_clients(
    full_data: &BTreeMap<usize, Dataset>,
    spec: &ScenarioSpec,
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<ClientData>> {
    spec.validate()?;
    let mut pools: BTreeMap<usize, Pool> = BTreeMap::new();
    for cond in spec.conditions() {
        let ds = full_data
            .get(&cond)
            .ok_or_else(|| Error::Plan(format!("condition {cond} has no data")))?;
        let (train, test, _) = split_indices(ds, train_fraction, derive(seed, &[stream::SPLIT, cond as u64]))?;
        let by_label = |idx: Vec<usize>| {
            let mut by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for i in idx {
                by.entry(ds.samples()[i].label).or_default().push(i);
            }
            by
        };
        let (train_idx, test_idx) = (by_label(train), by_label(test));
        pools.insert(cond, (train_idx, test_idx, ds));
    }

    // Position of each client among the clients of its condition that hold a label.
    let holders = |cond: usize, label: usize| -> Vec<usize> {
        spec.clients
            .iter()
            .enumerate()
            .filter(|(_, c)| c.condition_id == cond && c.labels.contains(&label))
            .map(|(i, _)| i)
            .collect()
    };
    let in_condition = |cond: usize| -> Vec<usize> {
        spec.clients
            .iter()
            .enumerate()
            .filter(|(_, c)| c.condition_id == cond)
            .map(|(i, _)| i)
            .collect()
    };

    let mut out = Vec::with_capacity(spec.num_clients());
    for (ci, plan) in spec.clients.iter().enumerate() {
        let cond = plan.condition_id;
        let (train_pool, test_pool, ds) = &pools[&cond];
        let mut train_indices = Vec::new();
        for &label in &plan.labels {
            let pool = train_pool
                .get(&label)
                .ok_or_else(|| Error::Plan(format!("client {ci}: label {label} absent from condition {cond}")))?;
            let h = holders(cond, label);
            let pos = h.iter().position(|&c| c == ci).expect("client holds its own label");
            let share = chunk(pool, h.len(), pos);
            let keep = ((share.len() as f64 * plan.fraction).round() as usize).clamp(share.len().min(1), share.len());
            train_indices.extend_from_slice(&share[..keep]);
        }
        train_indices.sort_unstable();

        let test_indices: Vec<(usize, usize)> = match spec.test_policy() {
            TestPolicy::SameLabels => {
                let mut idx = Vec::new();
                for &label in &plan.labels {
                    let h = holders(cond, label);
                    let pos = h.iter().position(|&c| c == ci).unwrap();
                    let pool = test_pool.get(&label).cloned().unwrap_or_default();
                    idx.extend(chunk(&pool, h.len(), pos).into_iter().map(|i| (cond, i)));
                }
                idx
            }
            TestPolicy::Balanced => {
                let peers = in_condition(cond);
                let pos = peers.iter().position(|&c| c == ci).unwrap();
                let mut per_class = Vec::new();
                for label in 0..spec.num_classes {
                    let source = nearest_condition_with(&pools, cond, label)
                        .ok_or_else(|| Error::Plan(format!("label {label} has no test data in any condition")))?;
                    let pool = &pools[&source].1[&label];
                    let source_peers = if source == cond { peers.len() } else { in_condition(source).len().max(peers.len()) };
                    let take = chunk(pool, source_peers, pos % source_peers);
                    per_class.push(take.into_iter().map(|i| (source, i)).collect::<Vec<_>>());
                }
                let smallest = per_class.iter().map(Vec::len).min().unwrap_or(0);
                per_class.into_iter().flat_map(|v| v.into_iter().take(smallest)).collect()
            }
        };

        let test = test_indices
            .iter()
            .map(|&(c, i)| pools[&c].2.samples()[i].clone())
            .collect();
        out.push(ClientData {
            condition_id: cond,
            train: ds.select(&train_indices),
            test,
        });
    }
    Ok(out)
}

/// Per-label train indices, per-label test indices and the source dataset.
type Pool<'a> = (BTreeMap<usize, Vec<usize>>, BTreeMap<usize, Vec<usize>>, &'a Dataset);

fn nearest_condition_with(
    pools: &BTreeMap<usize, Pool>,
    cond: usize,
    label: usize,
) -> Option<usize> {
    pools
        .iter()
        .filter(|(_, (_, test, _))| test.get(&label).is_some_and(|v| !v.is_empty()))
        .map(|(&c, _)| c)
        .min_by_key(|&c| (c.abs_diff(cond), c))
}

/// Test-set performance of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMetrics {
    pub accuracy: f64,
    /// Rows are true labels, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_client: Vec<ClientMetrics>,
    pub mean_accuracy: f64,
}

impl Metrics {
    pub fn new(per_client: Vec<ClientMetrics>) -> Self {
        let mean_accuracy = if per_client.is_empty() {
            0.0
        } else {
            per_client.iter().map(|m| m.accuracy).sum::<f64>() / per_client.len() as f64
        };
        Self {
            per_client,
            mean_accuracy,
        }
    }
}

/// Accuracy and confusion matrix of predicted against true labels.
pub fn metrics_from_predictions(truth: &[usize], predicted: &[usize], num_classes: usize) -> ClientMetrics {
    let mut confusion = vec![vec![0; num_classes]; num_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let correct: usize = (0..num_classes).map(|k| confusion[k][k]).sum();
    let n = truth.len();
    ClientMetrics {
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        confusion,
        n_test: n,
    }
}

/// Predicted labels (argmax of the mean-field probabilities) for a dataset.
pub fn predict_labels(model: &SngpModel, ds: &Dataset) -> Result<Vec<usize>> {
    if ds.is_empty() {
        return Ok(Vec::new());
    }
    let x = ds.feature_matrix();
    let (means, vars) = crate::sngp::logit_moments(model, &x.view())?;
    let lambda = model.config.mean_field_lambda;
    Ok(means
        .rows()
        .into_iter()
        .zip(vars.rows())
        .map(|(m, v)| {
            let p = crate::sngp::mean_field_probs(m.as_slice().unwrap(), v.as_slice().unwrap(), lambda);
            crate::sngp::argmax(&p)
        })
        .collect())
}

pub fn evaluate(model: &SngpModel, test: &Dataset) -> Result<ClientMetrics> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted = predict_labels(model, test)?;
    Ok(metrics_from_predictions(&test.labels(), &predicted, model.num_classes()))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::experiment::SyntheticSource;
    use crate::signal::synth_generate;

    fn data(spec: &ScenarioSpec) -> BTreeMap<usize, Dataset> {
        let src = SyntheticSource {
            samples_per_class: 40,
            ..SyntheticSource::default()
        };
        spec.conditions()
            .into_iter()
            .map(|c| (c, synth_generate(&src.condition_spec(c, spec.num_classes, 1).unwrap()).unwrap()))
            .collect()
    }

    fn keys(ds: &Dataset) -> BTreeSet<Vec<u64>> {
        ds.samples().iter().map(|s| s.features().iter().map(|v| v.to_bits()).collect()).collect()
    }

    #[test]
    fn presets_have_twelve_clients_covering_all_labels() {
        let all = builtin_scenario_presets();
        assert_eq!(all.len(), 12);
        for (name, spec) in &all {
            assert_eq!(spec.num_clients(), 12, "{name}");
            let union: BTreeSet<usize> = spec.clients.iter().flat_map(|c| c.labels.iter().copied()).collect();
            assert_eq!(union, (0..spec.num_classes).collect(), "{name}");
        }
        let pu = preset("pu-like", 2, &DEFAULT_SC3_FRACTIONS).unwrap();
        for (i, c) in pu.clients.iter().enumerate() {
            assert_eq!(c.labels.len() == 3, i % 3 == 0, "client {i}");
        }
        assert_eq!(preset("cwru-like", 1, &DEFAULT_SC3_FRACTIONS).unwrap().conditions().len(), 6);
    }

    #[test]
    fn unknown_preset_and_scenario_are_config_errors() {
        assert!(matches!(preset("nope", 2, &[1.0]), Err(Error::Config { .. })));
        assert!(matches!(preset("pu-like", 4, &[1.0]), Err(Error::Config { .. })));
    }

    #[test]
    fn partitions_are_disjoint_and_respect_label_plans() {
        for name in PRESET_NAMES {
            for sc in 1..=3 {
                let spec = preset(name, sc, &DEFAULT_SC3_FRACTIONS).unwrap();
                let clients = build_clients(&data(&spec), &spec, 0.8, 7).unwrap();
                let mut seen_train: BTreeSet<Vec<u64>> = BTreeSet::new();
                let all_test: BTreeSet<Vec<u64>> = clients.iter().flat_map(|c| keys(&c.test)).collect();
                for (plan, c) in spec.clients.iter().zip(&clients) {
                    assert_eq!(c.train.label_set(), plan.labels, "{name}/s{sc}");
                    for k in keys(&c.train) {
                        assert!(!all_test.contains(&k), "{name}/s{sc}: train sample in a test set");
                        assert!(seen_train.insert(k), "{name}/s{sc}: train sample shared by two clients");
                    }
                }
            }
        }
    }

    #[test]
    fn test_policies() {
        let s1 = preset("cwru-like", 1, &DEFAULT_SC3_FRACTIONS).unwrap();
        for (plan, c) in s1.clients.iter().zip(build_clients(&data(&s1), &s1, 0.8, 3).unwrap()) {
            assert_eq!(c.test.label_set(), plan.labels);
        }
        for sc in [2, 3] {
            let spec = preset("pu-like", sc, &DEFAULT_SC3_FRACTIONS).unwrap();
            for c in build_clients(&data(&spec), &spec, 0.8, 3).unwrap() {
                let counts = c.test.class_counts();
                assert_eq!(counts.len(), 3);
                let (lo, hi) = (counts.values().min().unwrap(), counts.values().max().unwrap());
                assert!(hi - lo <= 1 && *lo > 0, "{counts:?}");
            }
        }
    }

    #[test]
    fn quantity_skew() {
        let spec = ScenarioSpec {
            scenario: 3,
            num_classes: 3,
            clients: vec![
                ClientPlan { condition_id: 0, labels: set(&[0, 1, 2]), fraction: 1.0 },
                ClientPlan { condition_id: 0, labels: set(&[0, 1, 2]), fraction: 0.2 },
            ],
        };
        let c = build_clients(&data(&spec), &spec, 0.8, 0).unwrap();
        let (a, b) = (c[0].train.len() as f64, c[1].train.len() as f64);
        assert!((a / b - 5.0).abs() <= 5.0 / b + 1e-9, "{a} vs {b}");
        for name in PRESET_NAMES {
            let spec = preset(name, 3, &DEFAULT_SC3_FRACTIONS).unwrap();
            let sizes: Vec<usize> = build_clients(&data(&spec), &spec, 0.8, 0).unwrap().iter().map(|c| c.train.len()).collect();
            let (lo, hi) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
            assert!(hi >= 4 * lo, "{name}: {sizes:?}");
        }
    }

    #[test]
    fn partition_is_deterministic_and_seeded() {
        let spec = preset("synth-3group", 2, &DEFAULT_SC3_FRACTIONS).unwrap();
        let d = data(&spec);
        assert_eq!(build_clients(&d, &spec, 0.8, 5).unwrap(), build_clients(&d, &spec, 0.8, 5).unwrap());
        assert_ne!(build_clients(&d, &spec, 0.8, 5).unwrap(), build_clients(&d, &spec, 0.8, 6).unwrap());
    }

    #[test]
    fn missing_label_is_a_plan_error() {
        let spec = preset("pu-like", 2, &DEFAULT_SC3_FRACTIONS).unwrap();
        let mut d = data(&spec);
        let only0 = d[&1].filter_labels(&set(&[0]));
        d.insert(1, only0);
        assert!(matches!(build_clients(&d, &spec, 0.8, 0), Err(Error::Plan(_))));
    }

    #[test]
    fn metric_identities() {
        let m = metrics_from_predictions(&[0, 1, 2, 2], &[0, 1, 2, 2], 3);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.confusion, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
        let truth = [0, 0, 1, 1, 2, 2];
        assert!((metrics_from_predictions(&truth, &[1; 6], 3).accuracy - 1.0 / 3.0).abs() < 1e-15);
        let pred = [2, 0, 1, 0, 2, 1];
        let m = metrics_from_predictions(&truth, &pred, 3);
        let trace: usize = (0..3).map(|k| m.confusion[k][k]).sum();
        let total: usize = m.confusion.iter().flatten().sum();
        assert_eq!(m.accuracy, trace as f64 / total as f64);
        for (k, row) in m.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), truth.iter().filter(|&&t| t == k).count());
        }
    }
}
