//! Assumption checks for logistic regression: multicollinearity (VIF with
//! iterative pruning), linearity of the logit (Box-Tidwell), the
//! events-per-variable sample-size rule and feature correlations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::erf::erfc;

use crate::dataset::{FeatureMatrix, LabeledDataset};
use crate::error::{check_dim, FlrError, Result};
use crate::model::sigmoid;

/// `1 - R²` at or below this counts as exact collinearity.
const COLLINEAR_TOL: f64 = 1e-10;

/// A VIF value; exact collinearity is a sentinel rather than `inf`.
///
/// Serializes as a JSON number, or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Vif {
    Finite(f64),
    Infinite,
}

impl Vif {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Vif::Infinite)
    }

    pub fn exceeds(&self, threshold: f64) -> bool {
        match *self {
            Vif::Finite(v) => v > threshold,
            Vif::Infinite => true,
        }
    }

    fn greater_than(&self, other: &Vif) -> bool {
        match (self, other) {
            (Vif::Infinite, Vif::Infinite) => false,
            (Vif::Infinite, _) => true,
            (Vif::Finite(_), Vif::Infinite) => false,
            (Vif::Finite(a), Vif::Finite(b)) => a > b,
        }
    }
}

impl Serialize for Vif {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Vif::Finite(v) => s.serialize_f64(v),
            Vif::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Vif {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Vif::Finite(v)),
            Repr::Str(s) if s == "inf" => Ok(Vif::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("invalid VIF `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVif {
    pub feature: String,
    pub vif: Vif,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifReport {
    pub threshold: f64,
    /// VIFs of all input features before pruning.
    pub initial: Vec<FeatureVif>,
    /// VIFs of the retained features after pruning.
    pub retained: Vec<FeatureVif>,
    /// Removed features in removal order, with their VIF at removal time.
    pub removal_order: Vec<FeatureVif>,
}

impl VifReport {
    pub fn retained_names(&self) -> Vec<String> {
        self.retained.iter().map(|f| f.feature.clone()).collect()
    }
}

/// Column means and standard deviations (population), two-pass.
fn column_moments(features: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
    let d = features.n_cols();
    let n = features.n_rows() as f64;
    let mut mean = vec![0.0; d];
    for r in features.rows() {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in features.rows() {
        for j in 0..d {
            let c = r[j] - mean[j];
            var[j] += c * c;
        }
    }
    (mean, var.into_iter().map(|v| (v / n).sqrt()).collect())
}

/// Correlation matrix with constant columns zeroed (off-diagonal and diagonal).
fn raw_correlation(features: &FeatureMatrix) -> (DMatrix<f64>, Vec<bool>) {
    let d = features.n_cols();
    let n = features.n_rows() as f64;
    let (mean, std) = column_moments(features);
    let constant: Vec<bool> =
        mean.iter().zip(&std).map(|(m, s)| *s <= 1e-12 * m.abs().max(1e-300) || *s == 0.0).collect();
    let mut corr = DMatrix::<f64>::zeros(d, d);
    let mut z = vec![0.0; d];
    for r in features.rows() {
        for j in 0..d {
            z[j] = if constant[j] { 0.0 } else { (r[j] - mean[j]) / std[j] };
        }
        for a in 0..d {
            if z[a] == 0.0 {
                continue;
            }
            for b in a..d {
                corr[(a, b)] += z[a] * z[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = corr[(a, b)] / n;
            corr[(a, b)] = v;
            corr[(b, a)] = v;
        }
    }
    (corr, constant)
}

/// Minimum-norm solution of a symmetric PSD system via its eigendecomposition,
/// discarding directions with relative eigenvalue below 1e-12.
fn pseudo_solve(gram: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut coords = eig.eigenvectors.transpose() * rhs;
    for (c, &lam) in coords.iter_mut().zip(eig.eigenvalues.iter()) {
        *c = if lam > 1e-12 * top { *c / lam } else { 0.0 };
    }
    eig.eigenvectors * coords
}

/// Variance inflation factor of each column: `1 / (1 - R²)` of the OLS
/// regression (with intercept) of that column on all others.
pub fn vif(features: &FeatureMatrix) -> Result<Vec<Vif>> {
    let d = features.n_cols();
    let n = features.n_rows();
    if d < 2 {
        return Err(FlrError::InvalidData("VIF needs at least 2 features".into()));
    }
    if n <= d + 1 {
        return Err(FlrError::InsufficientData(format!(
            "VIF with {d} features needs more than {} rows, got {n}",
            d + 1
        )));
    }
    // On standardized columns, the normal equations of the auxiliary
    // regression are the correlation matrix; R²_i = r_iᵀ β_i.
    let (corr, constant) = raw_correlation(features);
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        if constant[i] {
            out.push(Vif::Infinite);
            continue;
        }
        let others: Vec<usize> = (0..d).filter(|&j| j != i).collect();
        let k = others.len();
        let gram = DMatrix::from_fn(k, k, |a, b| corr[(others[a], others[b])]);
        let rhs = DVector::from_fn(k, |a, _| corr[(others[a], i)]);
        let r2 = rhs.dot(&pseudo_solve(gram, &rhs)).clamp(0.0, 1.0);
        let unexplained = 1.0 - r2;
        out.push(if unexplained <= COLLINEAR_TOL { Vif::Infinite } else { Vif::Finite((1.0 / unexplained).max(1.0)) });
    }
    Ok(out)
}

/// Repeatedly drops the feature with the largest VIF (lowest column index on
/// ties) while that VIF exceeds `threshold` and more than one feature remains.
pub fn vif_prune(features: &FeatureMatrix, threshold: f64) -> Result<(VifReport, FeatureMatrix)> {
    let names = features.feature_names().to_vec();
    let tag = |cols: &[usize], vifs: &[Vif]| -> Vec<FeatureVif> {
        cols.iter().zip(vifs).map(|(&j, &v)| FeatureVif { feature: names[j].clone(), vif: v }).collect()
    };
    let mut kept: Vec<usize> = (0..features.n_cols()).collect();
    if kept.len() == 1 {
        let only = tag(&kept, &[Vif::Finite(1.0)]);
        let report = VifReport { threshold, initial: only.clone(), retained: only, removal_order: Vec::new() };
        return Ok((report, features.clone()));
    }

    let initial_vifs = vif(features)?;
    let initial = tag(&kept, &initial_vifs);
    let mut current = initial_vifs;
    let mut removal_order = Vec::new();
    while kept.len() > 1 {
        let mut worst = 0;
        for (pos, v) in current.iter().enumerate() {
            if v.greater_than(&current[worst]) {
                worst = pos;
            }
        }
        if !current[worst].exceeds(threshold) {
            break;
        }
        removal_order.push(FeatureVif { feature: names[kept[worst]].clone(), vif: current[worst] });
        kept.remove(worst);
        current = if kept.len() == 1 { vec![Vif::Finite(1.0)] } else { vif(&features.select_columns(&kept)?)? };
    }
    let report = VifReport { threshold, initial, retained: tag(&kept, &current), removal_order };
    Ok((report, features.select_columns(&kept)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxTidwellOptions {
    pub significance: f64,
    /// Shift features with `min ≤ 0` by `1 - min` before testing.
    pub shift_nonpositive: bool,
}

impl Default for BoxTidwellOptions {
    fn default() -> Self {
        Self { significance: 0.01, shift_nonpositive: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BoxTidwellOutcome {
    Tested {
        /// Coefficient on `x·ln(x)` in the auxiliary logistic fit.
        coefficient: f64,
        std_error: f64,
        p_value: f64,
        reject_linearity: bool,
    },
    /// The auxiliary fit did not converge (e.g. separation).
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxTidwellEntry {
    pub feature: String,
    /// Amount added to the feature before testing (0 if none).
    pub shift: f64,
    #[serde(flatten)]
    pub outcome: BoxTidwellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxTidwellReport {
    pub significance: f64,
    pub entries: Vec<BoxTidwellEntry>,
}

impl BoxTidwellReport {
    pub fn rejected(&self) -> impl Iterator<Item = &BoxTidwellEntry> {
        self.entries.iter().filter(|e| matches!(e.outcome, BoxTidwellOutcome::Tested { reject_linearity: true, .. }))
    }
}

const IRLS_TOL: f64 = 1e-8;
const IRLS_MAX_ITERS: usize = 100;
const IRLS_DIVERGED: f64 = 1e8;

struct LogisticFit {
    coef: DVector<f64>,
    std_err: DVector<f64>,
}

/// Newton / IRLS logistic regression; `design` includes the intercept column.
fn fit_logistic_irls(design: &DMatrix<f64>, y: &[f64]) -> std::result::Result<LogisticFit, String> {
    let (n, k) = design.shape();
    let mut beta = DVector::<f64>::zeros(k);
    for _ in 0..IRLS_MAX_ITERS {
        let eta = design * &beta;
        let mut hessian = DMatrix::<f64>::zeros(k, k);
        let mut score = DVector::<f64>::zeros(k);
        for i in 0..n {
            let p = sigmoid(eta[i]);
            let w = p * (1.0 - p);
            let row = design.row(i);
            for a in 0..k {
                score[a] += row[a] * (y[i] - p);
                for b in a..k {
                    hessian[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                hessian[(a, b)] = hessian[(b, a)];
            }
        }
        let chol =
            hessian.clone().cholesky().ok_or_else(|| "information matrix is singular (separation?)".to_string())?;
        let step = chol.solve(&score);
        beta += &step;
        if !beta.iter().all(|b| b.is_finite()) || beta.amax() > IRLS_DIVERGED {
            return Err("coefficients diverged (separation?)".into());
        }
        if step.amax() < IRLS_TOL {
            // Standard errors from the information matrix at the solution.
            let eta = design * &beta;
            let mut info = DMatrix::<f64>::zeros(k, k);
            for i in 0..n {
                let p = sigmoid(eta[i]);
                let w = p * (1.0 - p);
                let row = design.row(i);
                for a in 0..k {
                    for b in 0..k {
                        info[(a, b)] += w * row[a] * row[b];
                    }
                }
            }
            let inv =
                info.cholesky().ok_or_else(|| "information matrix is singular at the solution".to_string())?.inverse();
            let std_err = DVector::from_fn(k, |a, _| inv[(a, a)].max(0.0).sqrt());
            return Ok(LogisticFit { coef: beta, std_err });
        }
    }
    Err(format!("IRLS did not converge in {IRLS_MAX_ITERS} iterations"))
}

fn standardized(v: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let s = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
    if !(s > 0.0) {
        return None;
    }
    Some((v.iter().map(|x| (x - m) / s).collect(), s))
}

fn test_feature(x: &[f64], y: &[f64], significance: f64) -> BoxTidwellOutcome {
    let failed = |reason: &str| BoxTidwellOutcome::Failed { reason: reason.to_string() };
    // x is rescaled to unit mean before forming x·ln(x); this keeps the same
    // column span (k·x·ln(kx) = k·x·ln(x) + k·ln(k)·x), so the Wald statistic
    // is unchanged while the fit stays well conditioned.
    let scale = x.iter().sum::<f64>() / x.len() as f64;
    let xs: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let zs: Vec<f64> = xs.iter().map(|v| v * v.ln()).collect();
    let Some((x_col, _)) = standardized(&xs) else {
        return failed("feature is constant");
    };
    let Some((z_col, z_sd)) = standardized(&zs) else {
        return failed("x·ln(x) is constant");
    };
    let n = x.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => x_col[i],
        _ => z_col[i],
    });
    match fit_logistic_irls(&design, y) {
        Ok(fit) => {
            let coef_std = fit.coef[2];
            let se_std = fit.std_err[2];
            if !(se_std > 0.0) {
                return failed("zero standard error");
            }
            let wald = coef_std / se_std;
            let p_value = erfc(wald.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
            // Back to the scale of the original x·ln(x) term.
            let to_original = 1.0 / (z_sd * scale);
            BoxTidwellOutcome::Tested {
                coefficient: coef_std * to_original,
                std_error: se_std * to_original,
                p_value,
                reject_linearity: p_value < significance,
            }
        }
        Err(reason) => BoxTidwellOutcome::Failed { reason },
    }
}

/// Box-Tidwell linearity test, one feature at a time: a logistic fit of the
/// labels on `(1, x, x·ln x)` and a Wald test on the last coefficient.
pub fn box_tidwell(
    features: &FeatureMatrix,
    labels: &[usize],
    options: &BoxTidwellOptions,
) -> Result<BoxTidwellReport> {
    check_dim(features.n_rows(), labels.len())?;
    if labels.iter().any(|&y| y > 1) {
        return Err(FlrError::InvalidData("Box-Tidwell needs binary labels".into()));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(FlrError::DegenerateFit("labels are constant; logistic fit is undefined".into()));
    }
    let y: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
    let mut entries = Vec::with_capacity(features.n_cols());
    for (j, name) in features.feature_names().iter().enumerate() {
        let mut x = features.column(j);
        let min = x.iter().copied().fold(f64::INFINITY, f64::min);
        let mut shift = 0.0;
        if min <= 0.0 {
            if !options.shift_nonpositive {
                return Err(FlrError::InvalidData(format!(
                    "feature `{name}` has non-positive values and shifting is disabled"
                )));
            }
            shift = 1.0 - min;
            x.iter_mut().for_each(|v| *v += shift);
        }
        entries.push(BoxTidwellEntry {
            feature: name.clone(),
            shift,
            outcome: test_feature(&x, &y, options.significance),
        });
    }
    Ok(BoxTidwellReport { significance: options.significance, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSizeCheck {
    pub passed: bool,
    pub minority_class: String,
    pub minority_count: usize,
    pub required: usize,
    pub detail: String,
}

/// Passes iff the least frequent class has at least 10 samples per feature.
pub fn sample_size_check(data: &LabeledDataset) -> SampleSizeCheck {
    let counts = data.class_counts();
    let (minority, &count) =
        counts.iter().enumerate().min_by_key(|(c, &n)| (n, *c)).expect("datasets have at least one class");
    let required = 10 * data.n_features();
    let passed = count >= required;
    let detail = format!(
        "least frequent class `{}` has {count} samples; {} features require {required}",
        data.class_names()[minority],
        data.n_features()
    );
    SampleSizeCheck {
        passed,
        minority_class: data.class_names()[minority].clone(),
        minority_count: count,
        required,
        detail,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub features: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature");
        for f in &self.features {
            out.push(',');
            out.push_str(f);
        }
        out.push('\n');
        for (name, row) in self.features.iter().zip(&self.values) {
            out.push_str(name);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson correlations; symmetric with a unit diagonal.
pub fn correlation_matrix(features: &FeatureMatrix) -> Result<CorrelationMatrix> {
    if features.n_rows() < 2 {
        return Err(FlrError::InsufficientData("correlation needs at least 2 rows".into()));
    }
    let (corr, constant) = raw_correlation(features);
    if let Some(j) = constant.iter().position(|&c| c) {
        return Err(FlrError::InvalidData(format!("feature `{}` is constant", features.feature_names()[j])));
    }
    let d = features.n_cols();
    let values =
        (0..d).map(|a| (0..d).map(|b| if a == b { 1.0 } else { corr[(a, b)].clamp(-1.0, 1.0) }).collect()).collect();
    Ok(CorrelationMatrix { features: features.feature_names().to_vec(), values })
}
