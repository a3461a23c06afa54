//! Binary logistic regression: sigmoid, l2-regularized cross-entropy, its
//! gradient and the full-batch local update a client runs each round.
//!
//! The positive-class probability is `σ(w·x + b)`.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureMatrix, LabeledDataset};
use crate::error::{check_dim, FlrError, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl ModelParams {
    pub fn zeros(d: usize) -> Self {
        Self { weights: vec![0.0; d], intercept: 0.0 }
    }

    pub fn new(weights: Vec<f64>, intercept: f64) -> Self {
        Self { weights, intercept }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.intercept.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    /// `w·x + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }

    /// Euclidean distance over all coordinates, intercept included.
    pub fn distance(&self, other: &ModelParams) -> f64 {
        let dw: f64 = self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b) * (a - b)).sum();
        let db = self.intercept - other.intercept;
        (dw + db * db).sqrt()
    }

    pub fn named(&self, feature_names: &[String]) -> NamedParams {
        NamedParams {
            coefficients: feature_names.iter().cloned().zip(self.weights.iter().copied()).collect(),
            intercept: self.intercept,
        }
    }
}

/// JSON form of a model: coefficients keyed by feature name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedParams {
    pub coefficients: Vec<(String, f64)>,
    pub intercept: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingHyperparams {
    /// Learning rate.
    pub eta: f64,
    /// l2 penalty strength.
    pub lambda: f64,
    /// Local gradient steps per round.
    pub local_iters: usize,
}

impl Default for TrainingHyperparams {
    fn default() -> Self {
        Self { eta: 0.1, lambda: 1e-4, local_iters: 10 }
    }
}

impl TrainingHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(FlrError::InvalidConfig(format!("eta must be non-negative, got {}", self.eta)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(FlrError::InvalidConfig(format!("lambda must be ≥ 0, got {}", self.lambda)));
        }
        if self.local_iters == 0 {
            return Err(FlrError::InvalidConfig("local_iters must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Features with 0/1 targets. Borrowed from a binary dataset or built by
/// one-vs-rest relabelling of a multi-class one.
#[derive(Debug, Clone)]
pub struct BinaryData<'a> {
    features: &'a FeatureMatrix,
    targets: Cow<'a, [usize]>,
}

impl<'a> BinaryData<'a> {
    pub fn from_dataset(data: &'a LabeledDataset) -> Result<Self> {
        if data.n_classes() != 2 {
            return Err(FlrError::InvalidData(format!(
                "binary model needs 2 classes, dataset has {}",
                data.n_classes()
            )));
        }
        Ok(Self { features: &data.features, targets: Cow::Borrowed(data.labels()) })
    }

    /// Target is 1 where the label equals `positive`.
    pub fn one_vs_rest(data: &'a LabeledDataset, positive: usize) -> Self {
        let targets = data.labels().iter().map(|&y| usize::from(y == positive)).collect();
        Self { features: &data.features, targets: Cow::Owned(targets) }
    }

    pub fn new(features: &'a FeatureMatrix, targets: Vec<usize>) -> Result<Self> {
        check_dim(features.n_rows(), targets.len())?;
        if targets.iter().any(|&t| t > 1) {
            return Err(FlrError::InvalidData("binary targets must be 0 or 1".into()));
        }
        Ok(Self { features, targets: Cow::Owned(targets) })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn features(&self) -> &FeatureMatrix {
        self.features
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    fn samples(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.rows().zip(self.targets.iter().map(|&t| t as f64))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Logistic function without overflow for any finite input.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn predict_proba(params: &ModelParams, x: &[f64]) -> Result<f64> {
    check_dim(params.dim(), x.len())?;
    Ok(sigmoid(params.decision(x)))
}

/// Mean cross-entropy plus `(lambda / 2)·‖w‖²`. An empty dataset contributes
/// only the penalty.
pub fn loss(params: &ModelParams, data: &BinaryData<'_>, lambda: f64) -> Result<f64> {
    check_dim(params.dim(), data.n_features())?;
    let penalty = 0.5 * lambda * dot(&params.weights, &params.weights);
    if data.is_empty() {
        return Ok(penalty);
    }
    let total: f64 = data
        .samples()
        .map(|(x, y)| {
            let p = sigmoid(params.decision(x)).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / data.len() as f64 + penalty)
}

/// Gradient of [`loss`] (ignoring the clamp) as `(dW, db)`.
pub fn gradient(params: &ModelParams, data: &BinaryData<'_>, lambda: f64) -> Result<(Vec<f64>, f64)> {
    check_dim(params.dim(), data.n_features())?;
    let d = params.dim();
    let mut dw = vec![0.0; d];
    let mut db = 0.0;
    for (x, y) in data.samples() {
        let r = sigmoid(params.decision(x)) - y;
        for j in 0..d {
            dw[j] += r * x[j];
        }
        db += r;
    }
    let n = data.len().max(1) as f64;
    for (g, w) in dw.iter_mut().zip(&params.weights) {
        *g = *g / n + lambda * w;
    }
    Ok((dw, db / n))
}

/// `local_iters` full-batch gradient steps from `start`.
pub fn local_update(start: &ModelParams, data: &BinaryData<'_>, hp: &TrainingHyperparams) -> Result<ModelParams> {
    hp.validate()?;
    if data.is_empty() {
        return Err(FlrError::InsufficientData("local update on an empty shard".into()));
    }
    let mut params = start.clone();
    for _ in 0..hp.local_iters {
        let (dw, db) = gradient(&params, data, hp.lambda)?;
        for (w, g) in params.weights.iter_mut().zip(&dw) {
            *w -= hp.eta * g;
        }
        params.intercept -= hp.eta * db;
    }
    Ok(params)
}
