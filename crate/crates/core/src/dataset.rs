//! Tabular data: CSV loading, label encoding, pooled standardization and
//! stratified train/test splitting.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, FlrError, Result};
use crate::rng;

/// Dense row-major feature matrix, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, n_rows: usize, feature_names: Vec<String>) -> Result<Self> {
        let d = feature_names.len();
        if d == 0 {
            return Err(FlrError::InvalidData("feature matrix needs at least one column".into()));
        }
        check_dim(n_rows * d, values.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(FlrError::InvalidData(format!("non-finite value at row {}, column {}", pos / d, pos % d)));
        }
        Ok(Self { values, n_rows, feature_names })
    }

    /// Builds a matrix from rows; names default to `x0, x1, …`.
    pub fn from_rows(rows: &[Vec<f64>], feature_names: Option<Vec<String>>) -> Result<Self> {
        let d = match (&feature_names, rows.first()) {
            (Some(names), _) => names.len(),
            (None, Some(r)) => r.len(),
            (None, None) => return Err(FlrError::Empty("rows")),
        };
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            check_dim(d, r.len())?;
            values.extend_from_slice(r);
        }
        let names = feature_names.unwrap_or_else(|| (0..d).map(|j| format!("x{j}")).collect());
        Self::new(values, rows.len(), names)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix { values, n_rows: indices.len(), feature_names: self.feature_names.clone() }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Result<FeatureMatrix> {
        if columns.is_empty() {
            return Err(FlrError::Empty("column selection"));
        }
        if let Some(&bad) = columns.iter().find(|&&j| j >= self.n_cols()) {
            return Err(FlrError::InvalidData(format!("column index {bad} out of range")));
        }
        let mut values = Vec::with_capacity(self.n_rows * columns.len());
        for r in self.rows() {
            values.extend(columns.iter().map(|&j| r[j]));
        }
        Ok(FeatureMatrix {
            values,
            n_rows: self.n_rows,
            feature_names: columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
        })
    }
}

/// Features plus integer class labels in `0..C`.
///
/// Datasets produced by [`load_csv`] contain every class at least once.
/// Subsets (shards, splits) keep the parent's class list and may miss classes
/// or be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        check_dim(features.n_rows(), labels.len())?;
        if class_names.is_empty() {
            return Err(FlrError::InvalidData("no class names".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_names.len()) {
            return Err(FlrError::InvalidData(format!("label {bad} outside 0..{}", class_names.len())));
        }
        Ok(Self { features, labels, class_names })
    }

    /// Convenience constructor with class names `"0".."C-1"`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let features = FeatureMatrix::from_rows(rows, None)?;
        Self::new(features, labels, (0..n_classes).map(|c| c.to_string()).collect())
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Sample indices grouped by class, each group in ascending order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_classes()];
        for (i, &y) in self.labels.iter().enumerate() {
            groups[y].push(i);
        }
        groups
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    pub fn with_features(&self, features: FeatureMatrix) -> Result<LabeledDataset> {
        LabeledDataset::new(features, self.labels.clone(), self.class_names.clone())
    }

    /// Moments a client shares with the server for pooled standardization.
    pub fn summary(&self) -> ClientSummary {
        let d = self.n_features();
        let mut sum = vec![0.0; d];
        let mut sum_sq = vec![0.0; d];
        for r in self.features.rows() {
            for j in 0..d {
                sum[j] += r[j];
                sum_sq[j] += r[j] * r[j];
            }
        }
        ClientSummary { count: self.n_samples(), sum, sum_sq }
    }
}

/// Result of [`load_csv`]: the dataset and how many rows were discarded.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub data: LabeledDataset,
    pub dropped_rows: usize,
}

pub fn load_csv(path: impl AsRef<Path>, target_column: &str, numeric_columns: &[String]) -> Result<CsvLoad> {
    load_csv_delimited(path, target_column, numeric_columns, b',')
}

/// Loads `numeric_columns` as features and `target_column` as the class label.
///
/// Rows with a missing or non-numeric value in any selected column (or an
/// empty target) are dropped. Labels are encoded in lexicographic order of
/// their raw strings.
pub fn load_csv_delimited(
    path: impl AsRef<Path>,
    target_column: &str,
    numeric_columns: &[String],
    delimiter: u8,
) -> Result<CsvLoad> {
    let path = path.as_ref();
    if numeric_columns.is_empty() {
        return Err(FlrError::InvalidConfig("no feature columns selected".into()));
    }
    let file = std::fs::File::open(path).map_err(|source| FlrError::Io { path: path.to_path_buf(), source })?;
    let csv_err = |source| FlrError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).has_headers(true).flexible(true).from_reader(file);

    let header = reader.headers().map_err(csv_err)?.clone();
    let position = |name: &str| {
        header.iter().position(|h| h.trim() == name).ok_or_else(|| FlrError::MissingColumn(name.to_string()))
    };
    let target_idx = position(target_column)?;
    let feature_idx = numeric_columns.iter().map(|c| position(c)).collect::<Result<Vec<_>>>()?;

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    let mut dropped = 0;
    let mut row_buf = Vec::with_capacity(feature_idx.len());
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        row_buf.clear();
        let label = record.get(target_idx).map(str::trim).unwrap_or("");
        let mut ok = !label.is_empty();
        for &j in &feature_idx {
            if !ok {
                break;
            }
            match record.get(j).and_then(|s| s.trim().parse::<f64>().ok()) {
                Some(v) if v.is_finite() => row_buf.push(v),
                _ => ok = false,
            }
        }
        if ok {
            values.extend_from_slice(&row_buf);
            raw_labels.push(label.to_string());
        } else {
            dropped += 1;
        }
    }

    if raw_labels.is_empty() {
        return Err(FlrError::NoRows { dropped });
    }
    let class_names: Vec<String> = raw_labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if class_names.len() < 2 {
        return Err(FlrError::TooFewClasses(class_names.len()));
    }
    let labels = raw_labels.iter().map(|l| class_names.binary_search(l).expect("label was collected")).collect();
    let n_rows = values.len() / feature_idx.len();
    let features = FeatureMatrix::new(values, n_rows, numeric_columns.to_vec())?;
    Ok(CsvLoad { data: LabeledDataset::new(features, labels, class_names)?, dropped_rows: dropped })
}

/// Per-client moments: sample count, per-feature sum and sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSummary {
    pub count: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

/// Per-feature mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    pub fn identity(d: usize) -> Self {
        Self { mean: vec![0.0; d], std: vec![1.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Relative variance below which a feature counts as constant.
const ZERO_VARIANCE_REL: f64 = 1e-14;

/// Pools client moments into global mean and population std.
///
/// Zero-variance features get `std = 1`.
pub fn pooled_stats(client_summaries: &[ClientSummary]) -> Result<StandardizationStats> {
    let first = client_summaries.first().ok_or(FlrError::Empty("client summaries"))?;
    let d = first.sum.len();
    let mut count = 0usize;
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for s in client_summaries {
        check_dim(d, s.sum.len())?;
        check_dim(d, s.sum_sq.len())?;
        count += s.count;
        for j in 0..d {
            sum[j] += s.sum[j];
            sum_sq[j] += s.sum_sq[j];
        }
    }
    if count < 2 {
        return Err(FlrError::InsufficientData(format!(
            "pooled standardization needs at least 2 samples, got {count}"
        )));
    }
    let n = count as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = (0..d)
        .map(|j| {
            let var = ((sum_sq[j] - sum[j] * sum[j] / n) / n).max(0.0);
            let scale = sum_sq[j] / n;
            if var <= ZERO_VARIANCE_REL * scale || var == 0.0 {
                1.0
            } else {
                var.sqrt()
            }
        })
        .collect();
    Ok(StandardizationStats { mean, std })
}

/// Applies `(x - mean) / std` column-wise; labels are untouched.
pub fn standardize(data: &LabeledDataset, stats: &StandardizationStats) -> Result<LabeledDataset> {
    let d = data.n_features();
    check_dim(d, stats.dim())?;
    let values =
        data.features.rows().flat_map(|r| (0..d).map(move |j| (r[j] - stats.mean[j]) / stats.std[j])).collect();
    let features = FeatureMatrix::new(values, data.n_samples(), data.features.feature_names().to_vec())?;
    data.with_features(features)
}

/// Stratified split into `(train, test)`.
///
/// Each class contributes `round(count · test_fraction)` samples to the test
/// set. Both outputs list samples in their original order.
pub fn train_test_split(
    data: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train_idx, test_idx) = split_indices(data, test_fraction, seed)?;
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

pub fn split_indices(data: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(FlrError::InvalidConfig(format!("test_fraction must lie in (0, 1), got {test_fraction}")));
    }
    let mut rng = rng::stream(seed, &[rng::STAGE_SPLIT]);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut idx) in data.indices_by_class().into_iter().enumerate() {
        if idx.len() < 2 {
            return Err(FlrError::InsufficientData(format!(
                "class `{}` has {} sample(s); splitting needs at least 2",
                data.class_names()[class],
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn cols(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn single_feature(values: &[f64]) -> LabeledDataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        let labels = (0..values.len()).map(|i| i % 2).collect();
        LabeledDataset::from_rows(&rows, labels, 2).unwrap()
    }

    #[test]
    fn loads_small_csv() {
        let f = write_csv("a,b,y\n1,2,no\n3,4,yes\n5,6,no\n");
        let load = load_csv(f.path(), "y", &cols(&["a", "b"])).unwrap();
        let data = load.data;
        assert_eq!(data.n_features(), 2);
        assert_eq!(data.n_samples(), 3);
        assert_eq!(data.n_classes(), 2);
        assert_eq!(data.class_names(), &["no".to_string(), "yes".to_string()]);
        assert_eq!(data.labels(), &[0, 1, 0]);
        assert_eq!(data.features.row(1), &[3.0, 4.0]);
        assert_eq!(load.dropped_rows, 0);
    }

    #[test]
    fn drops_unparseable_rows() {
        let f = write_csv("a,b,y\nNA,2,no\n3,4,yes\n5,6,no\n7,,yes\n");
        let load = load_csv(f.path(), "y", &cols(&["a"])).unwrap();
        assert_eq!(load.dropped_rows, 1);
        assert_eq!(load.data.n_samples(), 3);
        let load = load_csv(f.path(), "y", &cols(&["a", "b"])).unwrap();
        assert_eq!(load.dropped_rows, 2);
    }

    #[test]
    fn label_encoding_is_lexicographic() {
        let f = write_csv("x,y\n1,zeta\n2,alpha\n3,mid\n");
        let data = load_csv(f.path(), "y", &cols(&["x"])).unwrap().data;
        assert_eq!(data.class_names(), &cols(&["alpha", "mid", "zeta"])[..]);
        assert_eq!(data.labels(), &[2, 0, 1]);
    }

    #[test]
    fn load_errors() {
        let f = write_csv("a,y\n1,no\n2,no\n");
        assert!(matches!(load_csv(f.path(), "y", &cols(&["a"])), Err(FlrError::TooFewClasses(1))));
        assert!(matches!(load_csv(f.path(), "y", &cols(&["missing"])), Err(FlrError::MissingColumn(_))));
        assert!(matches!(load_csv(f.path(), "target", &cols(&["a"])), Err(FlrError::MissingColumn(_))));
        let g = write_csv("a,y\nNA,no\nfoo,yes\n");
        assert!(matches!(load_csv(g.path(), "y", &cols(&["a"])), Err(FlrError::NoRows { dropped: 2 })));
        assert!(matches!(load_csv("/nonexistent/file.csv", "y", &cols(&["a"])), Err(FlrError::Io { .. })));
    }

    #[test]
    fn semicolon_delimited() {
        let f = write_csv("\"a\";\"y\"\n1;\"no\"\n2;\"yes\"\n");
        let data = load_csv_delimited(f.path(), "y", &cols(&["a"]), b';').unwrap().data;
        assert_eq!(data.n_samples(), 2);
        assert_eq!(data.class_names(), &cols(&["no", "yes"])[..]);
    }

    #[test]
    fn pooled_stats_single_client() {
        let stats = pooled_stats(&[single_feature(&[0.0, 2.0]).summary()]).unwrap();
        assert_eq!(stats.mean, vec![1.0]);
        assert_eq!(stats.std, vec![1.0]);
    }

    #[test]
    fn pooled_stats_two_clients() {
        let a = single_feature(&[0.0, 2.0]).summary();
        let b = single_feature(&[4.0, 6.0]).summary();
        let stats = pooled_stats(&[a, b]).unwrap();
        // Oracle: two-pass moments of the concatenated list {0, 2, 4, 6}.
        let all = [0.0, 2.0, 4.0, 6.0];
        let m = all.iter().sum::<f64>() / 4.0;
        let v = all.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
        assert_eq!(m, 3.0);
        assert!((stats.mean[0] - m).abs() < 1e-12);
        assert!((stats.std[0] - v.sqrt()).abs() < 1e-12);
        assert!((stats.std[0] - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pooled_stats_constant_feature() {
        let stats = pooled_stats(&[single_feature(&[5.0, 5.0, 5.0]).summary()]).unwrap();
        assert_eq!(stats.mean, vec![5.0]);
        assert_eq!(stats.std, vec![1.0]);
        let stats = pooled_stats(&[single_feature(&[0.1, 0.1, 0.1, 0.1]).summary()]).unwrap();
        assert_eq!(stats.std, vec![1.0]);
    }

    #[test]
    fn pooled_stats_errors() {
        assert!(pooled_stats(&[]).is_err());
        assert!(matches!(pooled_stats(&[single_feature(&[1.0]).summary()]), Err(FlrError::InsufficientData(_))));
        let a = single_feature(&[0.0, 1.0]).summary();
        let b = ClientSummary { count: 2, sum: vec![1.0, 1.0], sum_sq: vec![1.0, 1.0] };
        assert!(matches!(pooled_stats(&[a, b]), Err(FlrError::DimensionMismatch { .. })));
    }

    #[test]
    fn standardize_examples() {
        let data = single_feature(&[0.0, 2.0]);
        let out = standardize(&data, &StandardizationStats { mean: vec![1.0], std: vec![1.0] }).unwrap();
        assert_eq!(out.features.column(0), vec![-1.0, 1.0]);
        assert_eq!(out.labels(), data.labels());

        let ident = standardize(&out, &StandardizationStats::identity(1)).unwrap();
        assert_eq!(ident, out);

        let bad = StandardizationStats::identity(2);
        assert!(standardize(&data, &bad).is_err());
    }

    #[test]
    fn standardized_moments_are_zero_one() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![i as f64 * 0.37 - 3.0, ((i * 7919) % 101) as f64]).collect();
        let labels = (0..200).map(|i| i % 2).collect();
        let data = LabeledDataset::from_rows(&rows, labels, 2).unwrap();
        let stats = pooled_stats(&[data.summary()]).unwrap();
        let z = standardize(&data, &stats).unwrap();
        for j in 0..2 {
            let col = z.features.column(j);
            let n = col.len() as f64;
            let m = col.iter().sum::<f64>() / n;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
            assert!(m.abs() < 1e-12);
            assert!((v.sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn split_is_stratified() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels = (0..100).map(|i| usize::from(i >= 50)).collect();
        let data = LabeledDataset::from_rows(&rows, labels, 2).unwrap();
        let (train, test) = train_test_split(&data, 0.2, 1).unwrap();
        assert_eq!(test.class_counts(), vec![10, 10]);
        assert_eq!(train.class_counts(), vec![40, 40]);

        let (train2, test2) = train_test_split(&data, 0.2, 1).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn split_small() {
        let data =
            LabeledDataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 1], 2).unwrap();
        let (train, test) = train_test_split(&data, 0.5, 3).unwrap();
        assert_eq!(test.class_counts(), vec![1, 1]);
        assert_eq!(train.class_counts(), vec![1, 1]);
    }

    #[test]
    fn split_errors() {
        let data = LabeledDataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![0, 0, 1], 2).unwrap();
        assert!(matches!(train_test_split(&data, 0.5, 0), Err(FlrError::InsufficientData(_))));
        let ok = LabeledDataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 1], 2).unwrap();
        assert!(train_test_split(&ok, 0.0, 0).is_err());
        assert!(train_test_split(&ok, 1.0, 0).is_err());
    }

    #[test]
    fn rejects_non_finite_and_bad_labels() {
        assert!(FeatureMatrix::from_rows(&[vec![f64::NAN]], None).is_err());
        assert!(LabeledDataset::from_rows(&[vec![1.0]], vec![2], 2).is_err());
        assert!(LabeledDataset::from_rows(&[vec![1.0]], vec![0, 1], 2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pooled_equals_concatenated(
                values in prop::collection::vec(-1e3f64..1e3, 4..60),
                cuts in prop::collection::vec(0usize..60, 0..5),
            ) {
                let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c % values.len()).collect();
                cuts.push(0);
                cuts.push(values.len());
                cuts.sort_unstable();
                cuts.dedup();
                let summaries: Vec<ClientSummary> = cuts
                    .windows(2)
                    .map(|w| single_feature(&values[w[0]..w[1]]).summary())
                    .collect();
                let pooled = pooled_stats(&summaries).unwrap();
                let n = values.len() as f64;
                let m = values.iter().sum::<f64>() / n;
                let v = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
                prop_assume!(v > 1e-6);
                prop_assert!((pooled.mean[0] - m).abs() <= 1e-10 * m.abs().max(1.0));
                prop_assert!((pooled.std[0] - v.sqrt()).abs() <= 1e-10 * v.sqrt());
            }

            #[test]
            fn standardize_inverts(
                values in prop::collection::vec(-1e4f64..1e4, 2..40),
            ) {
                let data = single_feature(&values);
                let stats = pooled_stats(&[data.summary()]).unwrap();
                let z = standardize(&data, &stats).unwrap();
                for (orig, s) in values.iter().zip(z.features.column(0)) {
                    let back = s * stats.std[0] + stats.mean[0];
                    prop_assert!((back - orig).abs() <= 1e-10 * orig.abs().max(1.0));
                }
            }

            #[test]
            fn split_partitions(n0 in 2usize..40, n1 in 2usize..40, frac in 0.05f64..0.95, seed in any::<u64>()) {
                let n = n0 + n1;
                let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
                let labels = (0..n).map(|i| usize::from(i >= n0)).collect();
                let data = LabeledDataset::from_rows(&rows, labels, 2).unwrap();
                let (tr, te) = split_indices(&data, frac, seed).unwrap();
                let mut all: Vec<usize> = tr.iter().chain(te.iter()).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                let test_counts = data.subset(&te).class_counts();
                prop_assert_eq!(test_counts[0], (n0 as f64 * frac).round() as usize);
                prop_assert_eq!(test_counts[1], (n1 as f64 * frac).round() as usize);
            }
        }
    }
}
