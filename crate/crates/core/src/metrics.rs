//! Classification metrics: accuracy, F1 (binary and macro) and ROC AUC
//! (binary and macro, one-vs-rest).

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, FlrError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub f1: f64,
    pub auc: f64,
}

/// Test-set scores. For binary tasks `f1`/`auc` refer to the positive class
/// and `per_class` is absent; for three or more classes they are macro
/// averages of `per_class`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub acc: f64,
    pub f1: f64,
    pub auc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<Vec<ClassMetrics>>,
}

impl EvalResult {
    /// Binary evaluation from positive-class scores, thresholded at 0.5.
    pub fn binary(scores: &[f64], truth: &[usize]) -> Result<EvalResult> {
        let pred: Vec<usize> = scores.iter().map(|&s| usize::from(s >= 0.5)).collect();
        Ok(EvalResult {
            acc: accuracy(&pred, truth)?,
            f1: f1_binary(&pred, truth)?,
            auc: auc_binary(scores, truth)?,
            per_class: None,
        })
    }

    /// Multi-class evaluation from an `N × C` score matrix (row-major) and
    /// argmax predictions.
    pub fn multiclass(scores: &[Vec<f64>], pred: &[usize], truth: &[usize], n_classes: usize) -> Result<EvalResult> {
        check_dim(truth.len(), scores.len())?;
        let per_class = (0..n_classes)
            .map(|c| {
                let (p, t) = indicators(pred, truth, c);
                let col: Vec<f64> = scores.iter().map(|r| r[c]).collect();
                Ok(ClassMetrics { class: c, f1: f1_binary(&p, &t)?, auc: auc_binary(&col, &t)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let c = n_classes as f64;
        Ok(EvalResult {
            acc: accuracy(pred, truth)?,
            f1: per_class.iter().map(|m| m.f1).sum::<f64>() / c,
            auc: per_class.iter().map(|m| m.auc).sum::<f64>() / c,
            per_class: Some(per_class),
        })
    }
}

fn indicators(pred: &[usize], truth: &[usize], class: usize) -> (Vec<usize>, Vec<usize>) {
    (pred.iter().map(|&p| usize::from(p == class)).collect(), truth.iter().map(|&t| usize::from(t == class)).collect())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_dim(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(FlrError::Empty("prediction vector"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Positive-class F1; 0 whenever precision or recall is undefined or zero.
pub fn f1_binary(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_dim(truth.len(), pred.len())?;
    let (mut tp, mut fp, mut fne) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == 1, t == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fne) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Unweighted mean of per-class one-vs-rest F1. With `C = 2` this averages
/// both classes and therefore differs from [`f1_binary`].
pub fn f1_macro(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<f64> {
    check_dim(truth.len(), pred.len())?;
    if n_classes == 0 {
        return Err(FlrError::Empty("class set"));
    }
    let mut total = 0.0;
    for c in 0..n_classes {
        let (p, t) = indicators(pred, truth, c);
        total += f1_binary(&p, &t)?;
    }
    Ok(total / n_classes as f64)
}

/// Trapezoidal area under the ROC curve over all distinct score thresholds.
///
/// Tied scores form one step of the curve, so a tie between a positive and a
/// negative contributes one half, as in the Mann-Whitney statistic.
pub fn auc_binary(scores: &[f64], truth: &[usize]) -> Result<f64> {
    check_dim(truth.len(), scores.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(FlrError::InvalidData("NaN score".into()));
    }
    let positives = truth.iter().filter(|&&t| t == 1).count() as u64;
    let negatives = truth.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(FlrError::InvalidData("AUC needs both positive and negative samples".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    // Twice the area, in units of one (positive, negative) pair.
    let mut area2: u64 = 0;
    let mut tp: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        let (mut dtp, mut dfp) = (0u64, 0u64);
        while i < order.len() && scores[order[i]] == threshold {
            if truth[order[i]] == 1 {
                dtp += 1;
            } else {
                dfp += 1;
            }
            i += 1;
        }
        area2 += dfp * (2 * tp + dtp);
        tp += dtp;
    }

    // Evaluate the smaller side and mirror, so that auc(s) + auc(-s) == 1.
    let pairs2 = 2 * positives * negatives;
    if 2 * area2 <= pairs2 {
        Ok(area2 as f64 / pairs2 as f64)
    } else {
        Ok(1.0 - (pairs2 - area2) as f64 / pairs2 as f64)
    }
}

/// Unweighted mean of one-vs-rest AUCs; `score_matrix` is `N × C`.
pub fn auc_macro(score_matrix: &[Vec<f64>], truth: &[usize]) -> Result<f64> {
    check_dim(truth.len(), score_matrix.len())?;
    let c = score_matrix.first().map(Vec::len).ok_or(FlrError::Empty("score matrix"))?;
    let mut total = 0.0;
    for class in 0..c {
        if !truth.contains(&class) {
            return Err(FlrError::InvalidData(format!("class {class} absent from truth")));
        }
        let col: Vec<f64> = score_matrix
            .iter()
            .map(|r| {
                check_dim(c, r.len())?;
                Ok(r[class])
            })
            .collect::<Result<_>>()?;
        let ind: Vec<usize> = truth.iter().map(|&t| usize::from(t == class)).collect();
        total += auc_binary(&col, &ind)?;
    }
    Ok(total / c as f64)
}
