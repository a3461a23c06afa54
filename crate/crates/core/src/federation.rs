//! The federated training loop: pooled standardization, periodic client
//! selection, local updates, adversarial submissions and aggregation, plus a
//! one-vs-rest extension for more than two classes.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate, AggregationRule};
use crate::dataset::{pooled_stats, standardize, LabeledDataset, StandardizationStats};
use crate::error::{check_dim, FlrError, Result};
use crate::model::{local_update, BinaryData, ModelParams, TrainingHyperparams};
use crate::partition::ClientShard;
use crate::rng::{self, ceil_fraction, STAGE_ADVERSARY, STAGE_SELECT};

fn default_gaussian_magnitude() -> f64 {
    100.0
}

fn default_flip_magnitude() -> f64 {
    10.0
}

/// How adversarial clients fabricate their submissions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryModel {
    /// Every coordinate drawn from `N(0, magnitude²)`.
    GaussianBlast {
        #[serde(default = "default_gaussian_magnitude")]
        magnitude: f64,
    },
    /// `-magnitude` times the broadcast parameters.
    SignFlip {
        #[serde(default = "default_flip_magnitude")]
        magnitude: f64,
    },
}

impl Default for AdversaryModel {
    fn default() -> Self {
        AdversaryModel::GaussianBlast { magnitude: default_gaussian_magnitude() }
    }
}

impl AdversaryModel {
    pub fn magnitude(&self) -> f64 {
        match *self {
            AdversaryModel::GaussianBlast { magnitude } | AdversaryModel::SignFlip { magnitude } => magnitude,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.magnitude();
        if !(m.is_finite() && m > 0.0) {
            return Err(FlrError::InvalidConfig(format!("adversary magnitude must be positive, got {m}")));
        }
        Ok(())
    }
}

pub fn fabricate_adversarial(global: &ModelParams, model: &AdversaryModel, rng: &mut ChaCha8Rng) -> ModelParams {
    match *model {
        AdversaryModel::GaussianBlast { magnitude } => {
            let normal = Normal::new(0.0, magnitude).expect("magnitude is validated positive");
            let weights = (0..global.dim()).map(|_| normal.sample(rng)).collect();
            ModelParams::new(weights, normal.sample(rng))
        }
        AdversaryModel::SignFlip { magnitude } => {
            ModelParams::new(global.weights.iter().map(|w| -magnitude * w).collect(), -magnitude * global.intercept)
        }
    }
}

fn default_rounds() -> usize {
    100
}

fn default_gamma() -> f64 {
    1.0
}

fn default_reselect_every() -> usize {
    10
}

fn default_rule() -> AggregationRule {
    AggregationRule::Mean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    /// Number of global rounds `T`.
    #[serde(default = "default_rounds", alias = "T")]
    pub rounds: usize,
    /// Fraction of clients selected per round.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_reselect_every")]
    pub reselect_every: usize,
    #[serde(default = "default_rule")]
    pub rule: AggregationRule,
    #[serde(default)]
    pub hp: TrainingHyperparams,
    #[serde(default)]
    pub adversary: AdversaryModel,
    #[serde(default)]
    pub seed: u64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            rounds: default_rounds(),
            gamma: default_gamma(),
            reselect_every: default_reselect_every(),
            rule: default_rule(),
            hp: TrainingHyperparams::default(),
            adversary: AdversaryModel::default(),
            seed: 0,
        }
    }
}

impl FederationConfig {
    /// Number of clients selected per round out of `clients`.
    pub fn selected_count(&self, clients: usize) -> usize {
        ceil_fraction(clients, self.gamma).clamp(1, clients.max(1))
    }

    /// Checks the configuration for a federation of `clients` clients.
    pub fn validate(&self, clients: usize) -> Result<()> {
        if self.rounds == 0 {
            return Err(FlrError::InvalidConfig("rounds must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(FlrError::InvalidConfig(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.reselect_every == 0 {
            return Err(FlrError::InvalidConfig("reselect_every must be at least 1".into()));
        }
        if clients == 0 {
            return Err(FlrError::InvalidConfig("federation has no clients".into()));
        }
        self.hp.validate()?;
        self.adversary.validate()?;
        self.rule.check_count(self.selected_count(clients))
    }
}

/// One aggregation event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    /// Positive class of a one-vs-rest run; absent for binary training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<usize>,
    /// Global parameters after this round's aggregation.
    pub params: ModelParams,
    /// Selected client ids, ascending.
    pub selected: Vec<usize>,
    /// `‖submitted - broadcast‖₂` per selected client, in `selected` order.
    pub update_norms: Vec<f64>,
}

/// Selected shard positions per round `1..=rounds`.
///
/// A fresh draw happens whenever `t mod reselect_every == 0`, so round `t`
/// uses the draw made at `⌊t / reselect_every⌋ · reselect_every`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSchedule {
    reselect_every: usize,
    draws: Vec<Vec<usize>>,
}

impl SelectionSchedule {
    pub fn new(clients: usize, cfg: &FederationConfig) -> Result<Self> {
        cfg.validate(clients)?;
        let k = cfg.selected_count(clients);
        let draws = (0..=cfg.rounds / cfg.reselect_every)
            .map(|epoch| {
                let mut rng = rng::stream(cfg.seed, &[STAGE_SELECT, epoch as u64]);
                let mut chosen = index::sample(&mut rng, clients, k).into_vec();
                chosen.sort_unstable();
                chosen
            })
            .collect();
        Ok(Self { reselect_every: cfg.reselect_every, draws })
    }

    pub fn at(&self, round: usize) -> &[usize] {
        &self.draws[round / self.reselect_every]
    }
}

/// Result of a binary federation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryRun {
    pub params: ModelParams,
    /// Pooled standardization agreed on in round 0; apply it to test data.
    pub stats: StandardizationStats,
    pub logs: Vec<RoundLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassParams {
    pub classes: Vec<ModelParams>,
}

impl MulticlassParams {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.classes.first().map_or(0, ModelParams::dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassRun {
    pub params: MulticlassParams,
    pub stats: StandardizationStats,
    /// Round logs per class.
    pub logs: Vec<Vec<RoundLog>>,
}

/// Shards after the round-0 standardization handshake.
struct Prepared {
    clients: Vec<PreparedClient>,
    stats: StandardizationStats,
    dim: usize,
}

struct PreparedClient {
    id: usize,
    data: Option<LabeledDataset>,
}

fn prepare(shards: &[ClientShard]) -> Result<Prepared> {
    let honest: Vec<&ClientShard> = shards.iter().filter(|s| s.honest).collect();
    let first =
        honest.first().ok_or_else(|| FlrError::InvalidConfig("federation needs at least one honest client".into()))?;
    let dim = first.data.n_features();
    let n_classes = first.data.n_classes();
    for s in &honest {
        check_dim(dim, s.data.n_features())?;
        if s.data.is_empty() {
            return Err(FlrError::InsufficientData(format!("honest client {} has no data", s.client_id)));
        }
        if s.data.n_classes() != n_classes {
            return Err(FlrError::InvalidData("honest shards disagree on the class set".into()));
        }
    }
    let summaries: Vec<_> = honest.iter().map(|s| s.data.summary()).collect();
    let stats = pooled_stats(&summaries)?;
    let clients = shards
        .iter()
        .map(|s| {
            Ok(PreparedClient {
                id: s.client_id,
                data: if s.honest { Some(standardize(&s.data, &stats)?) } else { None },
            })
        })
        .collect::<Result<_>>()?;
    Ok(Prepared { clients, stats, dim })
}

/// Runs rounds `1..=T` for one binary target (`class = None` uses the labels
/// as-is, `Some(c)` trains class `c` against the rest).
fn federate(
    prepared: &Prepared,
    cfg: &FederationConfig,
    schedule: &SelectionSchedule,
    class: Option<usize>,
) -> Result<(ModelParams, Vec<RoundLog>)> {
    let targets: Vec<Option<BinaryData<'_>>> = prepared
        .clients
        .iter()
        .map(|c| {
            c.data
                .as_ref()
                .map(|d| match class {
                    Some(pos) => Ok(BinaryData::one_vs_rest(d, pos)),
                    None => BinaryData::from_dataset(d),
                })
                .transpose()
        })
        .collect::<Result<_>>()?;
    let class_tag = class.map_or(0, |c| c as u64 + 1);

    let mut global = ModelParams::zeros(prepared.dim);
    let mut logs = Vec::with_capacity(cfg.rounds);
    for t in 1..=cfg.rounds {
        let selected = schedule.at(t);
        let submissions: Vec<ModelParams> = selected
            .par_iter()
            .map(|&pos| match &targets[pos] {
                Some(data) => local_update(&global, data, &cfg.hp),
                None => {
                    let client = prepared.clients[pos].id as u64;
                    let mut rng = rng::stream(cfg.seed, &[STAGE_ADVERSARY, t as u64, client, class_tag]);
                    Ok(fabricate_adversarial(&global, &cfg.adversary, &mut rng))
                }
            })
            .collect::<Result<_>>()?;
        let next = aggregate(&submissions, &cfg.rule)?;
        logs.push(RoundLog {
            round: t,
            class,
            params: next.clone(),
            selected: selected.iter().map(|&pos| prepared.clients[pos].id).collect(),
            update_norms: submissions.iter().map(|s| s.distance(&global)).collect(),
        });
        global = next;
    }
    Ok((global, logs))
}

/// Federated training of a binary classifier over `shards`.
pub fn train_binary(shards: &[ClientShard], cfg: &FederationConfig) -> Result<BinaryRun> {
    let schedule = SelectionSchedule::new(shards.len(), cfg)?;
    let prepared = prepare(shards)?;
    let classes = shards.iter().find(|s| s.honest).map_or(0, |s| s.data.n_classes());
    if classes != 2 {
        return Err(FlrError::InvalidData(format!(
            "binary training needs 2 classes, got {classes}; use multiclass training"
        )));
    }
    let (params, logs) = federate(&prepared, cfg, &schedule, None)?;
    Ok(BinaryRun { params, stats: prepared.stats, logs })
}

/// One-vs-rest federation: one binary run per class, all sharing the same
/// client selections.
pub fn train_multiclass(shards: &[ClientShard], cfg: &FederationConfig) -> Result<MulticlassRun> {
    let schedule = SelectionSchedule::new(shards.len(), cfg)?;
    let prepared = prepare(shards)?;
    let classes = shards.iter().find(|s| s.honest).map_or(0, |s| s.data.n_classes());
    if classes < 3 {
        return Err(FlrError::InvalidData(format!(
            "multiclass training needs at least 3 classes, got {classes}; use binary training"
        )));
    }
    let runs = (0..classes)
        .into_par_iter()
        .map(|c| federate(&prepared, cfg, &schedule, Some(c)))
        .collect::<Result<Vec<_>>>()?;
    let (classes, logs) = runs.into_iter().unzip();
    Ok(MulticlassRun { params: MulticlassParams { classes }, stats: prepared.stats, logs })
}

/// Class with the highest `σ(W_c·x + b_c)`; ties go to the lowest class id.
pub fn predict_multiclass(params: &MulticlassParams, x: &[f64]) -> Result<usize> {
    if params.classes.is_empty() {
        return Err(FlrError::Empty("multiclass parameters"));
    }
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (c, p) in params.classes.iter().enumerate() {
        check_dim(p.dim(), x.len())?;
        // σ is monotone, so comparing decision values picks the same class
        // without saturating at 1.0 for large margins.
        let score = p.decision(x);
        if score > best_score {
            best = c;
            best_score = score;
        }
    }
    Ok(best)
}
