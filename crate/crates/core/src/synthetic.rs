//! Seeded synthetic datasets for tests and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{FeatureMatrix, LabeledDataset};
use crate::error::{FlrError, Result};

/// Isotropic Gaussian clusters: `per_class` samples around each center with
/// standard deviation `std`. Class `c` is centered at `centers[c]`.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_class: usize, std: f64, seed: u64) -> Result<LabeledDataset> {
    let d = centers.first().map_or(0, Vec::len);
    if centers.len() < 2 || d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(FlrError::InvalidConfig("need ≥ 2 centers of equal, non-zero dimension".into()));
    }
    if !(std > 0.0) {
        return Err(FlrError::InvalidConfig(format!("blob std must be positive, got {std}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(centers.len() * per_class * d);
    let mut labels = Vec::with_capacity(centers.len() * per_class);
    for _ in 0..per_class {
        for (c, center) in centers.iter().enumerate() {
            values.extend(center.iter().map(|m| m + std * rng.sample::<f64, _>(StandardNormal)));
            labels.push(c);
        }
    }
    let names = (0..d).map(|j| format!("x{j}")).collect();
    let features = FeatureMatrix::new(values, labels.len(), names)?;
    LabeledDataset::new(features, labels, (0..centers.len()).map(|c| c.to_string()).collect())
}

/// Two classes at `±separation/2` along every axis of a `d`-dimensional space.
pub fn two_class_blobs(d: usize, per_class: usize, separation: f64, seed: u64) -> Result<LabeledDataset> {
    let half = separation / 2.0;
    gaussian_blobs(&[vec![-half; d], vec![half; d]], per_class, 1.0, seed)
}
