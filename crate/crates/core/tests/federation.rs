use std::collections::BTreeSet;

use fedsngp_core::experiment::{DataSource, ScenarioChoice, SyntheticSource};
use fedsngp_core::scenarios::ClientPlan;
use fedsngp_core::{run_experiment, ExperimentConfig, ScenarioSpec, StrategyKind};

/// Small, fast variant of the synthetic preset.
fn small(kind: StrategyKind, seed: u64, rounds: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::synthetic("synth-3group", 2, kind, seed);
    cfg.data = DataSource::Synthetic(SyntheticSource {
        samples_per_class: 20,
        ..SyntheticSource::default()
    });
    cfg.sngp.rff_dim = 32;
    cfg.sngp.batch_size = 16;
    cfg.strategy.rounds = rounds;
    cfg.strategy.local_epochs = 1;
    cfg.strategy.local_only_epochs = 3;
    cfg
}

#[test]
fn single_cluster_fedsngp_is_fedavg() {
    for seed in [0, 1] {
        let avg = run_experiment(&small(StrategyKind::FedAvg, seed, 3), 1).unwrap();
        let mut cfg = small(StrategyKind::FedSngp, seed, 3);
        cfg.strategy.force_single_cluster = true;
        let forced = run_experiment(&cfg, 1).unwrap();
        for (a, b) in avg.federation.rounds.iter().zip(&forced.federation.rounds) {
            assert_eq!(a.parameter_digests, b.parameter_digests, "round {}", a.round);
        }
        for (a, b) in avg.federation.clients.iter().zip(&forced.federation.clients) {
            assert_eq!(a.model.flat_parameters(), b.model.flat_parameters());
        }
    }
}

#[test]
fn runs_are_deterministic_across_worker_counts() {
    for kind in [StrategyKind::FedSngp, StrategyKind::FedCos] {
        let a = run_experiment(&small(kind, 4, 2), 1).unwrap();
        let b = run_experiment(&small(kind, 4, 2), 1).unwrap();
        let c = run_experiment(&small(kind, 4, 2), 4).unwrap();
        let json = |o: &fedsngp_core::ExperimentOutcome| serde_json::to_string(&o.federation.rounds).unwrap();
        assert_eq!(json(&a), json(&b));
        assert_eq!(json(&a), json(&c));
    }
}

#[test]
fn strategies_log_the_expected_structure() {
    let local = run_experiment(&small(StrategyKind::LocalOnly, 0, 5), 1).unwrap();
    assert_eq!(local.federation.rounds.len(), 1);
    assert_eq!(local.federation.final_assignment.num_clusters(), 12);
    let digests = &local.federation.rounds[0].parameter_digests;
    let distinct: std::collections::BTreeSet<_> = digests.iter().collect();
    assert_eq!(distinct.len(), 12);

    let avg = run_experiment(&small(StrategyKind::FedAvg, 0, 2), 1).unwrap();
    assert_eq!(avg.federation.rounds.len(), 2);
    for r in &avg.federation.rounds {
        assert!(r.parameter_digests.iter().all(|d| d == &r.parameter_digests[0]));
        assert!(r.uncertainty.is_none());
    }

    let sngp = run_experiment(&small(StrategyKind::FedSngp, 0, 1), 1).unwrap();
    let r = &sngp.federation.rounds[0];
    let mu = r.uncertainty.as_ref().unwrap();
    let sim = r.similarity.as_ref().unwrap();
    assert_eq!(mu.raw.dim(), (12, 12));
    assert!(mu.raw.iter().all(|v| *v >= 0.0));
    for (s, u) in sim.iter().zip(mu.normalized.iter()) {
        assert_eq!(*s, 1.0 - u);
    }
    for cl in &r.assignment.clusters {
        let d = &r.parameter_digests[cl.members[0]];
        assert!(cl.members.iter().all(|&m| &r.parameter_digests[m] == d));
    }
}

#[test]
fn zero_rounds_evaluate_the_initial_model() {
    let out = run_experiment(&small(StrategyKind::FedAvg, 0, 0), 1).unwrap();
    assert!(out.federation.rounds.is_empty());
    assert_eq!(out.federation.final_metrics.per_client.len(), 12);
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(StrategyKind::FedSngp, 0, 2);
    cfg.output_dir = Some(dir.path().to_path_buf());
    run_experiment(&cfg, 1).unwrap();
    for f in [
        "config_resolved.json",
        "report.csv",
        "summary.json",
        "confusion.json",
        "rounds/round_1.json",
        "rounds/round_2_MU.csv",
        "rounds/round_2_MU_raw.csv",
        "rounds/round_2_MSim.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let report = fedsngp_core::experiment::read_report(&dir.path().join("report.csv")).unwrap();
    assert_eq!(report.len(), 12);
    let resolved = ExperimentConfig::load(&dir.path().join("config_resolved.json")).unwrap();
    let (expected, _) = cfg.resolve().unwrap();
    assert_eq!(resolved, expected);
}

#[test]
fn held_out_slice_scores_models_without_being_trained_on() {
    let full = run_experiment(&small(StrategyKind::FedSngp, 2, 1), 1).unwrap();
    let mut cfg = small(StrategyKind::FedSngp, 2, 1);
    cfg.strategy.uncertainty_holdout = 0.25;
    let out = run_experiment(&cfg, 1).unwrap();
    for (a, b) in full.federation.clients.iter().zip(&out.federation.clients) {
        let probe = b.probe.as_ref().unwrap();
        assert!(a.probe.is_none());
        assert_eq!(b.train.len() + probe.len(), a.train.len());
        assert!(!probe.is_empty());
        assert_eq!(b.uncertainty_set().len(), probe.len());
    }
    assert_eq!(out.federation.rounds[0].uncertainty.as_ref().unwrap().raw.dim(), (12, 12));

    cfg.strategy.uncertainty_holdout = 1.0;
    assert!(run_experiment(&cfg, 1).is_err());
}

/// Two operating conditions with three all-label clients each.
fn two_groups(seed: u64, rounds: usize) -> ExperimentConfig {
    let mut cfg = small(StrategyKind::FedSngp, seed, rounds);
    cfg.data = DataSource::Synthetic(SyntheticSource {
        samples_per_class: 30,
        ..SyntheticSource::default()
    });
    cfg.scenario = ScenarioChoice::Custom(ScenarioSpec {
        scenario: 2,
        num_classes: 3,
        clients: (0..6)
            .map(|i| ClientPlan {
                condition_id: i / 3,
                labels: BTreeSet::from([0, 1, 2]),
                fraction: 1.0,
            })
            .collect(),
    });
    cfg.sngp.batch_size = 8;
    cfg.strategy.local_epochs = 5;
    cfg
}

#[test]
fn cross_group_uncertainty_exceeds_within_group() {
    let mut hits = 0;
    for seed in 0..100 {
        let out = run_experiment(&two_groups(seed, 1), 1).unwrap();
        let mu = &out.federation.rounds[0].uncertainty.as_ref().unwrap().raw;
        let (mut within, mut across) = (Vec::new(), Vec::new());
        for ((i, j), &v) in mu.indexed_iter() {
            if i / 3 == j / 3 {
                within.push(v);
            } else {
                across.push(v);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        hits += (mean(&within) < mean(&across)) as usize;
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn fedsngp_recovers_two_groups_by_round_five() {
    let truth = [vec![0, 1, 2], vec![3, 4, 5]];
    let hits = (0..100)
        .filter(|&seed| {
            let out = run_experiment(&two_groups(seed, 5), 1).unwrap();
            out.federation.rounds[4].assignment.same_partition(&truth)
        })
        .count();
    assert!(hits >= 90, "{hits}/100");
}
