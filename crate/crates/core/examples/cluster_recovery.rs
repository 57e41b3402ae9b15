//! Run FedSNGP on the synthetic three-group preset and print how the
//! clients are grouped after each round.
//!
//! `cargo run --release -p fedsngp-core --example cluster_recovery -- [seed] [rounds]`

use fedsngp_core::{run_experiment, ExperimentConfig, StrategyKind};

fn main() -> fedsngp_core::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let seed = args.next().unwrap_or(0);
    let rounds = args.next().unwrap_or(10) as usize;

    let mut cfg = ExperimentConfig::synthetic("synth-3group", 2, StrategyKind::FedSngp, seed);
    cfg.strategy.rounds = rounds;
    let out = run_experiment(&cfg, 1)?;
    for log in &out.federation.rounds {
        println!(
            "round {:>2}: accuracy {:.3}, clusters {:?}",
            log.round,
            log.mean_accuracy,
            log.assignment.groups()
        );
    }
    Ok(())
}
