//! Experiment configuration, data assembly, execution and artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::federation::{run_federation, FederationOutcome, RoundLog, StrategyConfig, StrategyKind};
use crate::rng::{derive, stream};
use crate::scenarios::{build_clients, preset, ClientData, ScenarioSpec, DEFAULT_SC3_FRACTIONS};
use crate::signal::{
    read_dataset_csv, read_raw_binary, read_raw_csv, spectra_from_signal, synth_generate, ClassTemplate,
    ConditionShift, Dataset, Normalization, Peak, SpectrumKind, SynthSpec, TARGET_RATE_HZ, WINDOW_LEN,
};
use crate::sngp::SngpConfig;

/// One synthetic operating condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCondition {
    #[serde(default)]
    pub shift: ConditionShift,
    /// Replaces the shared templates for this condition.
    #[serde(default)]
    pub templates: Option<Vec<ClassTemplate>>,
}

/// Synthetic spectra for a family of operating conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSource {
    /// Templates of every condition without its own.
    pub templates: Vec<ClassTemplate>,
    /// Indexed by condition id.
    pub conditions: Vec<SyntheticCondition>,
    pub noise_sigma: f64,
    pub peak_width: f64,
    pub amplitude_jitter: f64,
    pub samples_per_class: usize,
}

/// Fault bands of classes 1, 2 and 3; class 0 has none.
const FAULT_BANDS: [usize; 3] = [110, 160, 210];

/// Templates of default condition `g`. The two base peaks sit at a
/// condition-specific position, like running-speed harmonics. Fault bands
/// rotate from one condition to the next, as a different machine
/// configuration would move them, so a band alone does not identify a class.
fn default_templates(g: usize) -> Vec<ClassTemplate> {
    let base = [(30 + 12 * g, 4.0), (60 + 18 * g, 2.4)];
    let mut bands = FAULT_BANDS;
    bands.rotate_left(g % FAULT_BANDS.len());
    std::iter::once(peaks(&base))
        .chain(bands.iter().map(|&b| {
            let mut v = base.to_vec();
            v.push((b, 2.0));
            peaks(&v)
        }))
        .collect()
}

fn peaks(list: &[(usize, f64)]) -> ClassTemplate {
    ClassTemplate {
        peaks: list.iter().map(|&(bin, amplitude)| Peak { bin, amplitude }).collect(),
    }
}

impl Default for SyntheticSource {
    fn default() -> Self {
        Self {
            templates: default_templates(0),
            conditions: [1.0, 1.1, 0.9, 1.05, 0.95, 1.15]
                .iter()
                .enumerate()
                .map(|(g, &amplitude_scale)| SyntheticCondition {
                    shift: ConditionShift {
                        bin_offset: 0,
                        amplitude_scale,
                    },
                    templates: Some(default_templates(g)),
                })
                .collect(),
            noise_sigma: 0.3,
            peak_width: 1.5,
            amplitude_jitter: 0.1,
            samples_per_class: 100,
        }
    }
}

impl SyntheticSource {
    /// The spec for one condition, restricted to the first `num_classes`
    /// templates.
    pub fn condition_spec(&self, condition: usize, num_classes: usize, seed: u64) -> Result<SynthSpec> {
        let cond = self
            .conditions
            .get(condition)
            .ok_or_else(|| Error::Plan(format!("synthetic source defines no condition {condition}")))?;
        let templates = cond.templates.as_ref().unwrap_or(&self.templates);
        if num_classes > templates.len() {
            return Err(Error::config(
                format!("data.synthetic.conditions[{condition}].templates"),
                format!("{num_classes} classes needed, {} templates given", templates.len()),
            ));
        }
        Ok(SynthSpec {
            templates: templates[..num_classes].to_vec(),
            shift: cond.shift,
            noise_sigma: self.noise_sigma,
            peak_width: self.peak_width,
            amplitude_jitter: self.amplitude_jitter,
            samples_per_class: self.samples_per_class,
            seed: derive(seed, &[stream::DATA, condition as u64]),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawFormat {
    /// One sample per line, optional header.
    #[default]
    Csv,
    /// Little-endian 32-bit floats.
    F32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recording {
    pub path: PathBuf,
    pub label: usize,
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub format: RawFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionRecordings {
    pub condition_id: usize,
    pub recordings: Vec<Recording>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionDataset {
    pub condition_id: usize,
    /// Spectra CSV as written by `write_dataset_csv`.
    pub path: PathBuf,
}

/// Where the data comes from. Exactly one source per experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Synthetic(SyntheticSource),
    Recordings(Vec<ConditionRecordings>),
    Spectra(Vec<ConditionDataset>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preprocessing {
    pub target_rate_hz: f64,
    pub window: usize,
    pub stride: usize,
    pub spectrum: SpectrumKind,
    pub normalization: Normalization,
    pub train_fraction: f64,
}

impl Default for Preprocessing {
    fn default() -> Self {
        Self {
            target_rate_hz: TARGET_RATE_HZ,
            window: WINDOW_LEN,
            stride: WINDOW_LEN,
            spectrum: SpectrumKind::default(),
            normalization: Normalization::default(),
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioChoice {
    Preset {
        name: String,
        scenario: u8,
        #[serde(default)]
        fractions: Option<Vec<f64>>,
    },
    Custom(ScenarioSpec),
}

impl ScenarioChoice {
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        match self {
            ScenarioChoice::Preset {
                name,
                scenario,
                fractions,
            } => preset(name, *scenario, fractions.as_deref().unwrap_or(&DEFAULT_SC3_FRACTIONS)),
            ScenarioChoice::Custom(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub data: DataSource,
    pub scenario: ScenarioChoice,
    #[serde(default)]
    pub preprocessing: Preprocessing,
    #[serde(default)]
    pub sngp: SngpConfig,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale experiment on the built-in synthetic family: raw spectra
    /// (no min-max scaling, so uncertainty stays comparable across clients),
    /// a 128-feature RFF layer and default training settings otherwise.
    pub fn synthetic(preset_name: &str, scenario: u8, kind: StrategyKind, seed: u64) -> Self {
        Self {
            seed,
            data: DataSource::Synthetic(SyntheticSource::default()),
            scenario: ScenarioChoice::Preset {
                name: preset_name.into(),
                scenario,
                fractions: None,
            },
            preprocessing: Preprocessing {
                normalization: Normalization::None,
                ..Preprocessing::default()
            },
            sngp: SngpConfig {
                rff_dim: 128,
                ..SngpConfig::default()
            },
            strategy: StrategyConfig {
                kind,
                ..StrategyConfig::default()
            },
            output_dir: None,
        }
    }

    /// Parse JSON, reporting the field path of the first problem.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config {
                path: if path == "." { origin.display().to_string() } else { path },
                message: e.into_inner().to_string(),
            }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    /// Check cross-field constraints and fill in derived values: the class
    /// count comes from the scenario.
    pub fn resolve(&self) -> Result<(Self, ScenarioSpec)> {
        let spec = self.scenario.resolve()?;
        let mut cfg = self.clone();
        cfg.sngp.num_classes = spec.num_classes;
        cfg.sngp.validate().map_err(|e| match e {
            Error::Config { path, message } => Error::config(format!("sngp.{path}"), message),
            other => Error::config("sngp", other.to_string()),
        })?;
        cfg.strategy.validate()?;
        let p = &cfg.preprocessing;
        if !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
            return Err(Error::config("preprocessing.train_fraction", "must lie in (0, 1)"));
        }
        if p.window == 0 || p.stride == 0 {
            return Err(Error::config("preprocessing.window", "window and stride must be positive"));
        }
        if !(p.target_rate_hz.is_finite() && p.target_rate_hz > 0.0) {
            return Err(Error::config("preprocessing.target_rate_hz", "must be positive"));
        }
        match &cfg.data {
            DataSource::Synthetic(s) => {
                let max_cond = spec.conditions().into_iter().max().unwrap_or(0);
                if max_cond >= s.conditions.len() {
                    return Err(Error::config(
                        "data.synthetic.conditions",
                        format!("scenario uses condition {max_cond}, only {} defined", s.conditions.len()),
                    ));
                }
                for (i, c) in s.conditions.iter().enumerate() {
                    if c.templates.as_ref().unwrap_or(&s.templates).len() < spec.num_classes {
                        return Err(Error::config(
                            format!("data.synthetic.conditions[{i}].templates"),
                            "fewer templates than classes",
                        ));
                    }
                }
                if s.samples_per_class < 2 {
                    return Err(Error::config("data.synthetic.samples_per_class", "must be at least 2"));
                }
            }
            DataSource::Recordings(list) => {
                for (i, c) in list.iter().enumerate() {
                    for (j, r) in c.recordings.iter().enumerate() {
                        if r.label >= spec.num_classes {
                            return Err(Error::config(
                                format!("data.recordings[{i}].recordings[{j}].label"),
                                format!("label {} >= {} classes", r.label, spec.num_classes),
                            ));
                        }
                        if !(r.sample_rate_hz.is_finite() && r.sample_rate_hz > 0.0) {
                            return Err(Error::config(
                                format!("data.recordings[{i}].recordings[{j}].sample_rate_hz"),
                                "must be positive",
                            ));
                        }
                    }
                }
            }
            DataSource::Spectra(_) => {}
        }
        Ok((cfg, spec))
    }
}

/// Spectra of every condition the scenario needs, keyed by condition id.
pub fn load_condition_data(cfg: &ExperimentConfig, spec: &ScenarioSpec) -> Result<BTreeMap<usize, Dataset>> {
    let needed = spec.conditions();
    let mut out = BTreeMap::new();
    match &cfg.data {
        DataSource::Synthetic(s) => {
            for &c in &needed {
                out.insert(c, synth_generate(&s.condition_spec(c, spec.num_classes, cfg.seed)?)?);
            }
        }
        DataSource::Recordings(list) => {
            let p = &cfg.preprocessing;
            for cond in list.iter().filter(|c| needed.contains(&c.condition_id)) {
                let mut ds = Dataset::default();
                for r in &cond.recordings {
                    let raw = match r.format {
                        RawFormat::Csv => read_raw_csv(&r.path, r.sample_rate_hz, r.label, cond.condition_id as i64)?,
                        RawFormat::F32 => {
                            read_raw_binary(&r.path, r.sample_rate_hz, r.label, cond.condition_id as i64)?
                        }
                    };
                    ds.extend(spectra_from_signal(&raw, p.target_rate_hz, p.window, p.stride, p.spectrum)?.into_iter().collect());
                }
                out.insert(cond.condition_id, ds);
            }
        }
        DataSource::Spectra(list) => {
            for c in list.iter().filter(|c| needed.contains(&c.condition_id)) {
                out.insert(c.condition_id, read_dataset_csv(&c.path)?);
            }
        }
    }
    if let Some(missing) = needed.iter().find(|c| !out.contains_key(c)) {
        return Err(Error::Plan(format!("no data for condition {missing}")));
    }
    Ok(out)
}

/// Partitioned and normalised client data for a resolved config.
pub fn prepare_clients(cfg: &ExperimentConfig, spec: &ScenarioSpec) -> Result<Vec<ClientData>> {
    let data = load_condition_data(cfg, spec)?;
    let clients = build_clients(&data, spec, cfg.preprocessing.train_fraction, derive(cfg.seed, &[stream::PARTITION]))?;
    Ok(clients
        .into_iter()
        .map(|c| {
            let (train, test) = cfg.preprocessing.normalization.apply(&c.train, &c.test);
            ClientData { train, test, ..c }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub scenario: ScenarioSpec,
    pub federation: FederationOutcome,
}

impl ExperimentOutcome {
    pub fn strategy(&self) -> StrategyKind {
        self.config.strategy.kind
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.federation.final_metrics.mean_accuracy
    }
}

/// Run one experiment end to end, writing artifacts when the config names
/// an output directory.
pub fn run_experiment(config: &ExperimentConfig, parallel_clients: usize) -> Result<ExperimentOutcome> {
    let (cfg, spec) = config.resolve()?;
    let clients = prepare_clients(&cfg, &spec)?;
    let writer = cfg.output_dir.as_deref().map(ArtifactWriter::create).transpose()?;
    if let Some(w) = &writer {
        w.write_json("config_resolved.json", &cfg)?;
    }
    let mut on_round = |log: &RoundLog| match &writer {
        Some(w) => w.write_round(log),
        None => Ok(()),
    };
    let federation = run_federation(clients, &cfg.sngp, &cfg.strategy, cfg.seed, parallel_clients, &mut on_round)?;
    let outcome = ExperimentOutcome {
        config: cfg,
        scenario: spec,
        federation,
    };
    if let Some(w) = &writer {
        w.write_report(&outcome)?;
    }
    Ok(outcome)
}

/// One row of `report.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub client_id: usize,
    pub condition_id: usize,
    pub strategy: String,
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
}

pub fn report_rows(outcome: &ExperimentOutcome) -> Vec<ReportRow> {
    outcome
        .federation
        .clients
        .iter()
        .zip(&outcome.federation.final_metrics.per_client)
        .map(|(c, m)| ReportRow {
            client_id: c.id,
            condition_id: c.condition_id,
            strategy: outcome.strategy().name().to_string(),
            accuracy: m.accuracy,
            n_train: c.num_train(),
            n_test: m.n_test,
        })
        .collect()
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })?;
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()
        .map_err(|e| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            message: "report has no rows".into(),
        });
    }
    Ok(rows)
}

struct ArtifactWriter {
    dir: PathBuf,
}

fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl ArtifactWriter {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("rounds")).map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::to_writer_pretty(&mut f, value)?;
        f.write_all(b"\n").map_err(|e| Error::io(&path, e))
    }

    fn write_round(&self, log: &RoundLog) -> Result<()> {
        let r = log.round;
        self.write_json(&format!("rounds/round_{r}.json"), log)?;
        if let Some(mu) = &log.uncertainty {
            write_matrix_csv(&self.dir.join(format!("rounds/round_{r}_MU.csv")), &mu.normalized)?;
            write_matrix_csv(&self.dir.join(format!("rounds/round_{r}_MU_raw.csv")), &mu.raw)?;
        }
        if let Some(s) = &log.similarity {
            write_matrix_csv(&self.dir.join(format!("rounds/round_{r}_MSim.csv")), s)?;
        }
        Ok(())
    }

    fn write_report(&self, outcome: &ExperimentOutcome) -> Result<()> {
        let path = self.dir.join("report.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for row in report_rows(outcome) {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        #[derive(Serialize)]
        struct Confusion<'a> {
            client_id: usize,
            confusion: &'a [Vec<usize>],
        }
        let confusion: Vec<Confusion> = outcome
            .federation
            .final_metrics
            .per_client
            .iter()
            .enumerate()
            .map(|(client_id, m)| Confusion {
                client_id,
                confusion: &m.confusion,
            })
            .collect();
        self.write_json("confusion.json", &confusion)?;

        #[derive(Serialize)]
        struct Summary {
            strategy: StrategyKind,
            rounds: usize,
            mean_accuracy: f64,
            clusters: Vec<Vec<usize>>,
        }
        self.write_json(
            "summary.json",
            &Summary {
                strategy: outcome.strategy(),
                rounds: outcome.federation.rounds.len(),
                mean_accuracy: outcome.mean_accuracy(),
                clusters: outcome.federation.final_assignment.groups(),
            },
        )?;
        Ok(())
    }
}

/// Per-client accuracies of several reports side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Column label of every report, made unique.
    pub labels: Vec<String>,
    pub client_ids: Vec<usize>,
    /// `accuracy[client][report]`.
    pub accuracy: Vec<Vec<f64>>,
    pub means: Vec<f64>,
}

impl Comparison {
    /// Join reports on client id. Every report must cover the same clients.
    pub fn from_reports(reports: &[(String, Vec<ReportRow>)]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut labels: Vec<String> = Vec::new();
        for (label, _) in reports {
            let mut l = label.clone();
            let mut k = 2;
            while labels.contains(&l) {
                l = format!("{label}_{k}");
                k += 1;
            }
            labels.push(l);
        }
        let mut ids: Vec<usize> = reports[0].1.iter().map(|r| r.client_id).collect();
        ids.sort_unstable();
        let mut accuracy = vec![vec![0.0; reports.len()]; ids.len()];
        for (j, (label, rows)) in reports.iter().enumerate() {
            let by_id: BTreeMap<usize, f64> = rows.iter().map(|r| (r.client_id, r.accuracy)).collect();
            if by_id.len() != ids.len() || ids.iter().any(|i| !by_id.contains_key(i)) {
                return Err(Error::InvalidValue(format!("report `{label}` covers different clients")));
            }
            for (i, id) in ids.iter().enumerate() {
                accuracy[i][j] = by_id[id];
            }
        }
        let means = (0..reports.len())
            .map(|j| accuracy.iter().map(|r| r[j]).sum::<f64>() / ids.len() as f64)
            .collect();
        Ok(Self {
            labels,
            client_ids: ids,
            accuracy,
            means,
        })
    }

    /// Pairs `(a, b)` with `a < b`, in column order.
    fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.labels.len();
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
    }

    /// `mean[b] - mean[a]` for every pair of reports.
    pub fn mean_deltas(&self) -> Vec<(String, String, f64)> {
        self.pairs()
            .into_iter()
            .map(|(a, b)| (self.labels[a].clone(), self.labels[b].clone(), self.means[b] - self.means[a]))
            .collect()
    }

    /// CSV with one row per client plus a `mean` row. Accuracy columns are
    /// followed by one `<b>-<a>` difference column per pair.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let pairs = self.pairs();
        let mut header = vec!["client_id".to_string()];
        header.extend(self.labels.iter().cloned());
        header.extend(pairs.iter().map(|&(a, b)| format!("{}-{}", self.labels[b], self.labels[a])));
        w.write_record(&header)?;
        let mut emit = |key: String, vals: &[f64]| -> Result<()> {
            let mut rec = vec![key];
            rec.extend(vals.iter().map(|v| format!("{v:.6}")));
            rec.extend(pairs.iter().map(|&(a, b)| format!("{:.6}", vals[b] - vals[a])));
            w.write_record(&rec)?;
            Ok(())
        };
        for (id, row) in self.client_ids.iter().zip(&self.accuracy) {
            emit(id.to_string(), row)?;
        }
        emit("mean".into(), &self.means)?;
        w.flush().map_err(|e| Error::io("<comparison>", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(strategy: &str, acc: &[f64]) -> Vec<ReportRow> {
        acc.iter()
            .enumerate()
            .map(|(i, &a)| ReportRow {
                client_id: i,
                condition_id: 0,
                strategy: strategy.into(),
                accuracy: a,
                n_train: 10,
                n_test: 10,
            })
            .collect()
    }

    #[test]
    fn compare_means_and_deltas() {
        let c = Comparison::from_reports(&[
            ("fedavg".into(), rows("fedavg", &[0.8, 1.0])),
            ("fedsngp".into(), rows("fedsngp", &[0.9, 1.0])),
        ])
        .unwrap();
        assert!((c.means[0] - 0.90).abs() < 1e-12);
        assert!((c.means[1] - 0.95).abs() < 1e-12);
        let d = c.mean_deltas();
        assert!((d[0].2 - 0.05).abs() < 1e-12);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("client_id,fedavg,fedsngp,fedsngp-fedavg\n"));
        assert!(text.contains("mean,0.900000,0.950000,0.050000"));
    }

    #[test]
    fn duplicate_labels_are_suffixed_and_mismatch_rejected() {
        let c = Comparison::from_reports(&[("a".into(), rows("a", &[1.0])), ("a".into(), rows("a", &[0.0]))]).unwrap();
        assert_eq!(c.labels, vec!["a", "a_2"]);
        assert!(Comparison::from_reports(&[("a".into(), rows("a", &[1.0])), ("b".into(), rows("b", &[1.0, 0.5]))])
            .is_err());
    }

    #[test]
    fn config_errors_carry_field_paths() {
        let text = r#"{"data": {"synthetic": {}}, "scenario": {"preset": {"name": "pu-like", "scenario": 2}},
                      "strategy": {"rounds": "ten"}}"#;
        match ExperimentConfig::from_json(text, Path::new("x.json")) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "strategy.rounds"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"data": {"synthetic": {}}, "scenario": {"preset": {"name": "pu-like", "scenario": 2}},
                      "sngp": {"spectral_norm_bound": -1.0}}"#;
        let cfg = ExperimentConfig::from_json(text, Path::new("x.json")).unwrap();
        match cfg.resolve() {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("sngp"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn two_data_sources_are_rejected() {
        let text = r#"{"data": {"synthetic": {}, "spectra": []},
                      "scenario": {"preset": {"name": "pu-like", "scenario": 2}}}"#;
        assert!(matches!(
            ExperimentConfig::from_json(text, Path::new("x.json")),
            Err(Error::Config { .. })
        ));
    }
}
