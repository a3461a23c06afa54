//! Server-side aggregation of client parameters.
//!
//! Every coordinate of `(W, b)` is reduced independently. Values are sorted
//! per coordinate before reduction, so the result never depends on the order
//! in which client submissions arrive.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, FlrError, Result};
use crate::model::ModelParams;
use crate::rng::floor_fraction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregationRule {
    Mean,
    Median,
    /// Discards `⌊alpha·M⌋` smallest and largest values per coordinate.
    #[serde(rename = "trim_mean", alias = "trimmed_mean")]
    TrimmedMean {
        alpha: f64,
    },
}

impl AggregationRule {
    pub fn name(&self) -> &'static str {
        match self {
            AggregationRule::Mean => "mean",
            AggregationRule::Median => "median",
            AggregationRule::TrimmedMean { .. } => "trim_mean",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let AggregationRule::TrimmedMean { alpha } = *self {
            if !(0.0..0.5).contains(&alpha) {
                return Err(FlrError::InvalidConfig(format!("trim alpha must lie in [0, 0.5), got {alpha}")));
            }
        }
        Ok(())
    }

    /// Checks that a list of `count` submissions survives trimming.
    pub fn check_count(&self, count: usize) -> Result<()> {
        self.validate()?;
        if count == 0 {
            return Err(FlrError::Empty("parameter list"));
        }
        if let AggregationRule::TrimmedMean { alpha } = *self {
            if 2 * floor_fraction(count, alpha) >= count {
                return Err(FlrError::OverTrimmed { alpha, count });
            }
        }
        Ok(())
    }

    /// Reduces one coordinate; `values` must be sorted ascending and non-empty.
    fn reduce_sorted(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let kept = match *self {
            AggregationRule::Mean => values,
            AggregationRule::Median => {
                return if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) };
            }
            AggregationRule::TrimmedMean { alpha } => {
                let k = floor_fraction(n, alpha);
                &values[k..n - k]
            }
        };
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        // Rounding can push an average of near-equal values a hair outside them.
        mean.clamp(kept[0], kept[kept.len() - 1])
    }
}

impl std::fmt::Display for AggregationRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AggregationRule::TrimmedMean { alpha } => write!(f, "trim_mean({alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

pub fn aggregate(params_list: &[ModelParams], rule: &AggregationRule) -> Result<ModelParams> {
    rule.check_count(params_list.len())?;
    let d = params_list[0].dim();
    for p in params_list {
        check_dim(d, p.dim())?;
    }
    let mut column = Vec::with_capacity(params_list.len());
    let mut reduce = |extract: &dyn Fn(&ModelParams) -> f64| {
        column.clear();
        column.extend(params_list.iter().map(extract));
        column.sort_by(f64::total_cmp);
        rule.reduce_sorted(&column)
    };
    let weights = (0..d).map(|j| reduce(&|p| p.weights[j])).collect();
    let intercept = reduce(&|p| p.intercept);
    Ok(ModelParams { weights, intercept })
}
