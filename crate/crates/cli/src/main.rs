use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedsngp_core::experiment::{read_report, Comparison, RawFormat, SyntheticSource};
use fedsngp_core::signal::{
    read_raw_binary, read_raw_csv, spectra_from_signal, synth_generate, write_dataset_csv, SpectrumKind,
    TARGET_RATE_HZ, WINDOW_LEN,
};
use fedsngp_core::{run_experiment, Dataset, Error, ExperimentConfig, StrategyKind};

#[derive(Parser)]
#[command(name = "fedsngp", version, about = "Federated fault diagnosis with uncertainty-clustered aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn raw vibration recordings into a spectra CSV.
    Preprocess(PreprocessArgs),
    /// Write synthetic spectra, one CSV per operating condition.
    GenData(GenDataArgs),
    /// Run an experiment from a JSON config and write its artifacts.
    Run(RunArgs),
    /// Join several report.csv files into one comparison table.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    F32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Magnitude,
    Power,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Recordings as `path` or `path=label`.
    #[arg(required = true)]
    inputs: Vec<String>,
    /// Label for inputs given without `=label`.
    #[arg(long)]
    label: Option<usize>,
    /// Sample rate of the recordings in Hz.
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = TARGET_RATE_HZ)]
    target_rate: f64,
    #[arg(long, default_value_t = WINDOW_LEN)]
    window: usize,
    /// Defaults to the window length (no overlap).
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, value_enum, default_value = "magnitude")]
    kind: Kind,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct GenDataArgs {
    /// Directory receiving `condition_<id>.csv` files.
    #[arg(long, short)]
    out: PathBuf,
    /// Synthetic source as JSON; the built-in family when omitted.
    #[arg(long)]
    source: Option<PathBuf>,
    /// Condition ids to generate; all defined conditions when omitted.
    #[arg(long, value_delimiter = ',')]
    conditions: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    samples_per_class: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Override the configured strategy.
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Worker threads for client training; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    parallel_clients: usize,
}

#[derive(Args)]
struct CompareArgs {
    /// Reports as `path` or `label=path`; the label defaults to the strategy.
    #[arg(num_args = 2.., required = true)]
    reports: Vec<String>,
    /// Output CSV; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

fn parse_input(spec: &str, default_label: Option<usize>) -> Result<(PathBuf, usize), Failure> {
    if let Some((path, label)) = spec.rsplit_once('=') {
        let label = label
            .parse()
            .map_err(|_| usage(format!("`{spec}`: `{label}` is not a class label")))?;
        return Ok((PathBuf::from(path), label));
    }
    let label = default_label.ok_or_else(|| usage(format!("`{spec}` has no label; use path=label or --label")))?;
    Ok((PathBuf::from(spec), label))
}

fn write_dataset(path: &Path, ds: &Dataset) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| io_failure(path, e))?;
    write_dataset_csv(ds, io::BufWriter::new(file))?;
    Ok(())
}

fn print_counts(name: &str, ds: &Dataset) {
    let counts: Vec<String> = ds.class_counts().iter().map(|(l, n)| format!("{l}:{n}")).collect();
    println!("{name}: {} samples ({})", ds.len(), counts.join(" "));
}

fn preprocess(args: PreprocessArgs) -> Result<(), Failure> {
    let stride = args.stride.unwrap_or(args.window);
    let kind = match args.kind {
        Kind::Magnitude => SpectrumKind::Magnitude,
        Kind::Power => SpectrumKind::Power,
    };
    let format = match args.format {
        Format::Csv => RawFormat::Csv,
        Format::F32 => RawFormat::F32,
    };
    let mut ds = Dataset::default();
    for spec in &args.inputs {
        let (path, label) = parse_input(spec, args.label)?;
        let raw = match format {
            RawFormat::Csv => read_raw_csv(&path, args.rate, label, -1)?,
            RawFormat::F32 => read_raw_binary(&path, args.rate, label, -1)?,
        };
        let spectra = spectra_from_signal(&raw, args.target_rate, args.window, stride, kind)
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        ds.extend(Dataset::new(spectra));
    }
    write_dataset(&args.out, &ds)?;
    print_counts(&args.out.display().to_string(), &ds);
    Ok(())
}

fn gen_data(args: GenDataArgs) -> Result<(), Failure> {
    let mut source = match &args.source {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            serde_json::from_str::<SyntheticSource>(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => SyntheticSource::default(),
    };
    if let Some(noise) = args.noise {
        source.noise_sigma = noise;
    }
    if let Some(n) = args.samples_per_class {
        source.samples_per_class = n;
    }
    let conditions = if args.conditions.is_empty() {
        (0..source.conditions.len()).collect()
    } else {
        args.conditions.clone()
    };
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    for c in conditions {
        let ds = synth_generate(&source.condition_spec(c, args.classes, args.seed)?)?;
        let path = args.out.join(format!("condition_{c}.csv"));
        write_dataset(&path, &ds)?;
        print_counts(&path.display().to_string(), &ds);
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(kind) = args.strategy {
        cfg.strategy.kind = kind;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = Some(out);
    }
    let Some(out) = cfg.output_dir.clone() else {
        return Err(usage("no output directory: set `output_dir` in the config or pass --out"));
    };
    if args.parallel_clients == 0 {
        return Err(usage("--parallel-clients must be >= 1"));
    }
    let outcome = run_experiment(&cfg, args.parallel_clients)?;
    println!(
        "{}: mean accuracy {:.4} over {} clients, {} rounds, clusters {:?}",
        outcome.strategy(),
        outcome.mean_accuracy(),
        outcome.federation.clients.len(),
        outcome.federation.rounds.len(),
        outcome.federation.final_assignment.groups()
    );
    println!("artifacts in {}", out.display());
    Ok(())
}

fn compare(args: CompareArgs) -> Result<(), Failure> {
    let mut reports = Vec::new();
    for spec in &args.reports {
        let (label, path) = match spec.split_once('=') {
            Some((l, p)) => (Some(l.to_string()), PathBuf::from(p)),
            None => (None, PathBuf::from(spec)),
        };
        let rows = read_report(&path)?;
        let label = label.unwrap_or_else(|| rows[0].strategy.clone());
        reports.push((label, rows));
    }
    let cmp = Comparison::from_reports(&reports)?;
    match &args.out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| io_failure(path, e))?;
            cmp.write_csv(io::BufWriter::new(file))?;
        }
        None => cmp.write_csv(io::stdout().lock())?,
    }
    let means: BTreeMap<&str, f64> = cmp.labels.iter().map(String::as_str).zip(cmp.means.iter().copied()).collect();
    for (label, mean) in means {
        eprintln!("{label}: mean accuracy {mean:.4}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::GenData(a) => gen_data(a),
        Command::Run(a) => run(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = writeln!(io::stderr(), "error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
