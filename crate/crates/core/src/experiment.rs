//! Experiment runner: seeded repetitions of load → (prune) → split →
//! partition → train → evaluate, sweeps over one partition axis, feature
//! importance across seeds and assumption screening.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::AggregationRule;
use crate::dataset::{load_csv_delimited, split_indices, standardize, CsvLoad, LabeledDataset};
use crate::error::{FlrError, Result};
use crate::federation::{
    predict_multiclass, train_binary, train_multiclass, FederationConfig, MulticlassParams, RoundLog,
};
use crate::metrics::EvalResult;
use crate::model::{predict_proba, ModelParams};
use crate::partition::{manifest, partition, ClientShard, PartitionPlan, Regime, ShardManifest};
use crate::screening::{
    box_tidwell, correlation_matrix, sample_size_check, vif_prune, BoxTidwellOptions, BoxTidwellReport,
    CorrelationMatrix, SampleSizeCheck, VifReport,
};

/// Half-width multiplier of the reported interval `μ ± 1.96σ`.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    #[serde(default)]
    pub path: PathBuf,
    #[serde(default)]
    pub target: String,
    #[serde(default)]
    pub features: Vec<String>,
    /// Field separator; detected from the header line when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<char>,
}

fn default_regime() -> Regime {
    Regime::IidFull
}

fn default_clients() -> usize {
    100
}

fn default_sample_size() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionSettings {
    #[serde(default = "default_regime")]
    pub regime: Regime,
    #[serde(default = "default_clients")]
    pub clients: usize,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    #[serde(default)]
    pub outlier_frac: f64,
}

impl Default for PartitionSettings {
    fn default() -> Self {
        Self {
            regime: default_regime(),
            clients: default_clients(),
            sample_size: default_sample_size(),
            outlier_frac: 0.0,
        }
    }
}

impl PartitionSettings {
    pub fn plan(&self, seed: u64) -> PartitionPlan {
        PartitionPlan {
            regime: self.regime,
            clients: self.clients,
            sample_size: self.sample_size,
            outlier_frac: self.outlier_frac,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Federated,
    /// A single client holding the whole training set, full participation
    /// and mean aggregation.
    Centralized,
}

fn default_test_fraction() -> f64 {
    0.2
}

pub fn default_seeds() -> Vec<u64> {
    (0..10).map(|i| i * 100).collect()
}

fn default_vif_threshold() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub partition: PartitionSettings,
    /// `fed.seed` is replaced by each repetition's seed.
    #[serde(default)]
    pub fed: FederationConfig,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mode: Mode,
    /// Drop features by iterative VIF pruning before training.
    #[serde(default)]
    pub screen_prune: bool,
    #[serde(default = "default_vif_threshold")]
    pub vif_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FlrError::InvalidConfig(format!("invalid config: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FlrError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(FlrError::InvalidConfig("seeds must not be empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(FlrError::InvalidConfig("seeds must be distinct".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(FlrError::InvalidConfig(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if !(self.vif_threshold >= 1.0) {
            return Err(FlrError::InvalidConfig(format!("vif_threshold must be ≥ 1, got {}", self.vif_threshold)));
        }
        if self.mode == Mode::Federated {
            self.partition.plan(0).validate()?;
            self.fed.validate(self.partition.clients)?;
        } else {
            self.fed.hp.validate()?;
        }
        Ok(())
    }

    fn federation_for(&self, seed: u64) -> FederationConfig {
        let mut fed = self.fed.clone();
        fed.seed = seed;
        if self.mode == Mode::Centralized {
            fed.gamma = 1.0;
            fed.rule = AggregationRule::Mean;
        }
        fed
    }
}

fn detect_delimiter(path: &Path) -> Result<u8> {
    let file = std::fs::File::open(path).map_err(|source| FlrError::Io { path: path.to_path_buf(), source })?;
    let mut header = String::new();
    BufReader::new(file).read_line(&mut header).map_err(|source| FlrError::Io { path: path.to_path_buf(), source })?;
    let count = |c: char| header.matches(c).count();
    Ok([b',', b';', b'\t']
        .into_iter()
        .max_by_key(|&b| (count(b as char), b == b','))
        .expect("candidate list is non-empty"))
}

/// Loads the dataset named by `cfg.dataset`.
pub fn load_dataset(cfg: &DatasetConfig) -> Result<CsvLoad> {
    if cfg.path.as_os_str().is_empty() {
        return Err(FlrError::InvalidConfig("no dataset path given".into()));
    }
    if cfg.target.is_empty() {
        return Err(FlrError::InvalidConfig("no target column given".into()));
    }
    let delimiter = match cfg.delimiter {
        Some(c) if c.is_ascii() => c as u8,
        Some(c) => return Err(FlrError::InvalidConfig(format!("delimiter `{c}` is not ASCII"))),
        None => detect_delimiter(&cfg.path)?,
    };
    load_csv_delimited(&cfg.path, &cfg.target, &cfg.features, delimiter)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation across seeds (0 for a single seed).
    pub std: f64,
    pub half_width: f64,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> MetricSummary {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MetricSummary { mean, std, half_width: Z_95 * std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub acc: MetricSummary,
    pub f1: MetricSummary,
    pub auc: MetricSummary,
}

impl Summary {
    pub fn from_results(results: &[EvalResult]) -> Summary {
        let pick = |f: fn(&EvalResult) -> f64| MetricSummary::from_values(&results.iter().map(f).collect::<Vec<_>>());
        Summary { acc: pick(|r| r.acc), f1: pick(|r| r.f1), auc: pick(|r| r.auc) }
    }

    pub fn get(&self, metric: &str) -> Option<MetricSummary> {
        match metric {
            "acc" => Some(self.acc),
            "f1" => Some(self.f1),
            "auc" => Some(self.auc),
            _ => None,
        }
    }
}

pub const METRICS: [&str; 3] = ["acc", "f1", "auc"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub eval: EvalResult,
    /// One parameter pair per class for multi-class tasks; a single pair
    /// (positive class) for binary tasks.
    pub models: Vec<ModelParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: ExperimentConfig,
    /// Features actually used (after optional pruning).
    pub features: Vec<String>,
    pub class_names: Vec<String>,
    pub dropped_rows: usize,
    pub per_seed: Vec<SeedResult>,
    pub summary: Summary,
}

impl MetricsReport {
    pub fn recomputed_summary(&self) -> Summary {
        Summary::from_results(&self.per_seed.iter().map(|s| s.eval.clone()).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedTrace {
    pub seed: u64,
    pub logs: Vec<RoundLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub seed: u64,
    pub shards: Vec<ShardManifest>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: MetricsReport,
    /// Round logs per seed; empty unless tracing was requested.
    pub traces: Vec<SeedTrace>,
    pub manifests: Vec<SeedManifest>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub trace: bool,
}

struct SeedOutcome {
    result: SeedResult,
    logs: Vec<RoundLog>,
    manifest: Vec<ShardManifest>,
}

fn run_seed(data: &LabeledDataset, cfg: &ExperimentConfig, seed: u64, options: RunOptions) -> Result<SeedOutcome> {
    let (train_idx, test_idx) = split_indices(data, cfg.test_fraction, seed).map_err(|e| e.at_stage(seed, "split"))?;
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);

    let shards = match cfg.mode {
        Mode::Federated => partition(&train, &cfg.partition.plan(seed)).map_err(|e| e.at_stage(seed, "partition"))?,
        Mode::Centralized => {
            vec![ClientShard { client_id: 0, indices: (0..train.n_samples()).collect(), data: train, honest: true }]
        }
    };
    let fed = cfg.federation_for(seed);
    let n_classes = data.n_classes();
    let train_err = |e: FlrError| e.at_stage(seed, "train");
    let eval_err = |e: FlrError| e.at_stage(seed, "evaluate");

    let (models, stats, logs) = if n_classes == 2 {
        let run = train_binary(&shards, &fed).map_err(train_err)?;
        (vec![run.params], run.stats, run.logs)
    } else {
        let run = train_multiclass(&shards, &fed).map_err(train_err)?;
        (run.params.classes, run.stats, run.logs.into_iter().flatten().collect())
    };

    let test_std = standardize(&test, &stats).map_err(eval_err)?;
    let eval = if n_classes == 2 {
        let scores = test_std
            .features
            .rows()
            .map(|x| predict_proba(&models[0], x))
            .collect::<Result<Vec<_>>>()
            .map_err(eval_err)?;
        EvalResult::binary(&scores, test_std.labels()).map_err(eval_err)?
    } else {
        let params = MulticlassParams { classes: models.clone() };
        let mut scores = Vec::with_capacity(test_std.n_samples());
        let mut pred = Vec::with_capacity(test_std.n_samples());
        for x in test_std.features.rows() {
            scores.push(models.iter().map(|m| predict_proba(m, x)).collect::<Result<Vec<_>>>().map_err(eval_err)?);
            pred.push(predict_multiclass(&params, x).map_err(eval_err)?);
        }
        EvalResult::multiclass(&scores, &pred, test_std.labels(), n_classes).map_err(eval_err)?
    };

    Ok(SeedOutcome {
        result: SeedResult { seed, eval, models },
        logs: if options.trace { logs } else { Vec::new() },
        manifest: manifest(&shards),
    })
}

/// Runs every seed of `cfg` on an in-memory dataset.
pub fn run_on_dataset(data: &LabeledDataset, cfg: &ExperimentConfig, options: RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let (data, features) = if cfg.screen_prune {
        let (report, pruned) = vif_prune(&data.features, cfg.vif_threshold)?;
        (data.with_features(pruned)?, report.retained_names())
    } else {
        (data.clone(), data.features.feature_names().to_vec())
    };
    let outcomes = cfg.seeds.par_iter().map(|&seed| run_seed(&data, cfg, seed, options)).collect::<Result<Vec<_>>>()?;

    let mut per_seed = Vec::with_capacity(outcomes.len());
    let mut traces = Vec::new();
    let mut manifests = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if options.trace {
            traces.push(SeedTrace { seed: o.result.seed, logs: o.logs });
        }
        manifests.push(SeedManifest { seed: o.result.seed, shards: o.manifest });
        per_seed.push(o.result);
    }
    let summary = Summary::from_results(&per_seed.iter().map(|s| s.eval.clone()).collect::<Vec<_>>());
    let report = MetricsReport {
        config: cfg.clone(),
        features,
        class_names: data.class_names().to_vec(),
        dropped_rows: 0,
        per_seed,
        summary,
    };
    Ok(ExperimentOutput { report, traces, manifests })
}

/// Loads the configured dataset and runs every seed.
pub fn run_experiment(cfg: &ExperimentConfig, options: RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let load = load_dataset(&cfg.dataset)?;
    let mut out = run_on_dataset(&load.data, cfg, options)?;
    out.report.dropped_rows = load.dropped_rows;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Per-client sample size `s`.
    #[serde(rename = "s")]
    SampleSize,
    /// Adversarial fraction `p_out`.
    #[serde(rename = "p_out")]
    OutlierFrac,
    /// Number of clients `M`.
    #[serde(rename = "M")]
    Clients,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SampleSize => "s",
            SweepAxis::OutlierFrac => "p_out",
            SweepAxis::Clients => "M",
        }
    }

    fn apply(&self, settings: &mut PartitionSettings, value: f64) -> Result<()> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(FlrError::InvalidConfig(format!("axis {} needs positive integers, got {value}", self.name())))
            }
        };
        match self {
            SweepAxis::SampleSize => settings.sample_size = count()?,
            SweepAxis::Clients => settings.clients = count()?,
            SweepAxis::OutlierFrac => settings.outlier_frac = value,
        }
        Ok(())
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = FlrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" | "sample_size" => Ok(SweepAxis::SampleSize),
            "p_out" | "outlier_frac" => Ok(SweepAxis::OutlierFrac),
            "M" | "m" | "clients" => Ok(SweepAxis::Clients),
            other => Err(FlrError::InvalidConfig(format!("unknown sweep axis `{other}` (expected s, p_out or M)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub rule: AggregationRule,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// One row per (value, rule, metric).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,value,rule,metric,mean,half_width\n");
        for p in &self.points {
            for metric in METRICS {
                let m = p.report.summary.get(metric).expect("metric names are fixed");
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    self.axis.name(),
                    p.value,
                    p.rule,
                    metric,
                    m.mean,
                    m.half_width
                ));
            }
        }
        out
    }
}

/// Runs `base` once per `(value, rule)`; an empty `rules` keeps the base rule.
pub fn run_sweep_on_dataset(
    data: &LabeledDataset,
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    rules: &[AggregationRule],
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(FlrError::InvalidConfig("sweep needs at least one value".into()));
    }
    let rules = if rules.is_empty() { vec![base.fed.rule] } else { rules.to_vec() };
    let mut configs = Vec::with_capacity(values.len() * rules.len());
    for &value in values {
        for &rule in &rules {
            let mut cfg = base.clone();
            axis.apply(&mut cfg.partition, value)?;
            cfg.fed.rule = rule;
            cfg.validate()?;
            configs.push((value, rule, cfg));
        }
    }
    let points = configs
        .into_par_iter()
        .map(|(value, rule, cfg)| {
            let out = run_on_dataset(data, &cfg, RunOptions::default())?;
            Ok(SweepPoint { value, rule, report: out.report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { axis, points })
}

pub fn run_sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    rules: &[AggregationRule],
) -> Result<SweepResult> {
    let load = load_dataset(&base.dataset)?;
    let mut result = run_sweep_on_dataset(&load.data, base, axis, values, rules)?;
    for p in &mut result.points {
        p.report.dropped_rows = load.dropped_rows;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCoefficient {
    pub feature: String,
    pub mean: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassImportance {
    pub class: String,
    /// Sorted by `|mean|`, largest first.
    pub features: Vec<FeatureCoefficient>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportanceReport {
    pub classes: Vec<ClassImportance>,
}

/// Mean and `1.96σ` of each coefficient across seeds, per class.
///
/// `per_seed[s][c]` holds seed `s`'s parameters for class `c`; `class_names`
/// labels the class positions.
pub fn feature_importance(
    per_seed: &[Vec<ModelParams>],
    feature_names: &[String],
    class_names: &[String],
) -> Result<FeatureImportanceReport> {
    if per_seed.len() < 2 {
        return Err(FlrError::InvalidConfig(format!(
            "feature importance needs at least 2 seeds, got {}",
            per_seed.len()
        )));
    }
    let n_classes = per_seed[0].len();
    if n_classes != class_names.len() {
        return Err(FlrError::DimensionMismatch { expected: class_names.len(), actual: n_classes });
    }
    let d = feature_names.len();
    for models in per_seed {
        if models.len() != n_classes {
            return Err(FlrError::DimensionMismatch { expected: n_classes, actual: models.len() });
        }
        if let Some(bad) = models.iter().find(|m| m.dim() != d) {
            return Err(FlrError::DimensionMismatch { expected: d, actual: bad.dim() });
        }
    }
    let classes = (0..n_classes)
        .map(|c| {
            let mut features: Vec<FeatureCoefficient> = (0..d)
                .map(|j| {
                    let values: Vec<f64> = per_seed.iter().map(|m| m[c].weights[j]).collect();
                    let s = MetricSummary::from_values(&values);
                    FeatureCoefficient { feature: feature_names[j].clone(), mean: s.mean, half_width: s.half_width }
                })
                .collect();
            features.sort_by(|a, b| b.mean.abs().total_cmp(&a.mean.abs()));
            ClassImportance { class: class_names[c].clone(), features }
        })
        .collect();
    Ok(FeatureImportanceReport { classes })
}

impl MetricsReport {
    /// Feature importance over this report's seeds. Binary tasks report the
    /// positive class only.
    pub fn feature_importance(&self) -> Result<FeatureImportanceReport> {
        let per_seed: Vec<Vec<ModelParams>> = self.per_seed.iter().map(|s| s.models.clone()).collect();
        let names =
            if self.class_names.len() == 2 { vec![self.class_names[1].clone()] } else { self.class_names.clone() };
        feature_importance(&per_seed, &self.features, &names)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub vif: VifReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_tidwell: Option<BoxTidwellReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_tidwell_note: Option<String>,
    pub sample_size: SampleSizeCheck,
    pub correlation: CorrelationMatrix,
}

/// Assumption checks on the whole dataset (all rows, all configured features).
pub fn screen_dataset(data: &LabeledDataset, vif_threshold: f64) -> Result<ScreenReport> {
    let (vif, _) = vif_prune(&data.features, vif_threshold)?;
    let (box_tidwell, box_tidwell_note) = if data.n_classes() == 2 {
        (Some(box_tidwell(&data.features, data.labels(), &BoxTidwellOptions::default())?), None)
    } else {
        (
            None,
            Some(format!(
                "Box-Tidwell skipped: the test is defined for binary targets and this target has {} classes",
                data.n_classes()
            )),
        )
    };
    Ok(ScreenReport {
        vif,
        box_tidwell,
        box_tidwell_note,
        sample_size: sample_size_check(data),
        correlation: correlation_matrix(&data.features)?,
    })
}

pub fn screen(cfg: &ExperimentConfig) -> Result<ScreenReport> {
    let load = load_dataset(&cfg.dataset)?;
    screen_dataset(&load.data, cfg.vif_threshold)
}
