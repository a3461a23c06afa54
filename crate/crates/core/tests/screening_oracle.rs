use flr_core::dataset::FeatureMatrix;
use flr_core::screening::{box_tidwell, vif, vif_prune, BoxTidwellOptions, BoxTidwellOutcome, Vif};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> =
        (0..n).map(|k| solve(a.to_vec(), (0..n).map(|i| f64::from(u8::from(i == k))).collect())).collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

/// Abramowitz–Stegun 7.1.26, absolute error below 1.5e-7.
fn erfc_approx(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

/// Plain Newton-Raphson logistic fit on the raw design `[1, x, x ln x]`.
fn newton_fit(x: &[f64], y: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let design: Vec<[f64; 3]> = x.iter().map(|&v| [1.0, v, v * v.ln()]).collect();
    let mut beta = vec![0.0; 3];
    let mut info = vec![vec![0.0; 3]; 3];
    for _ in 0..200 {
        let mut grad = vec![0.0; 3];
        info = vec![vec![0.0; 3]; 3];
        for (row, &yi) in design.iter().zip(y) {
            let eta: f64 = (0..3).map(|k| row[k] * beta[k]).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            for a in 0..3 {
                grad[a] += (yi as f64 - p) * row[a];
                for b in 0..3 {
                    info[a][b] += p * (1.0 - p) * row[a] * row[b];
                }
            }
        }
        let step = solve(info.clone(), grad);
        for k in 0..3 {
            beta[k] += step[k];
        }
        if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-12 {
            break;
        }
    }
    let cov = inverse(&info);
    let se = (0..3).map(|k| cov[k][k].sqrt()).collect();
    (beta, se)
}

fn column(x: &[f64]) -> FeatureMatrix {
    FeatureMatrix::new(x.to_vec(), x.len(), vec!["x".into()]).unwrap()
}

fn simulate(n: usize, seed: u64, logit: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..4.0)).collect();
    let y = x.iter().map(|&v| usize::from(rng.random::<f64>() < 1.0 / (1.0 + (-logit(v)).exp()))).collect();
    (x, y)
}

#[test]
fn box_tidwell_matches_unscaled_newton_fit() {
    for (seed, quadratic) in [(1u64, false), (2, true), (3, false), (4, true)] {
        let (x, y) = simulate(1500, seed, |v| if quadratic { 0.8 * v * v - 3.0 * v } else { 1.2 * v - 2.5 });
        let report = box_tidwell(&column(&x), &y, &BoxTidwellOptions::default()).unwrap();
        let entry = &report.entries[0];
        assert_eq!(entry.shift, 0.0);
        let BoxTidwellOutcome::Tested { coefficient, std_error, p_value, reject_linearity } = entry.outcome else {
            panic!("fit failed for seed {seed}");
        };
        let (beta, se) = newton_fit(&x, &y);
        assert!((coefficient - beta[2]).abs() <= 1e-6 * beta[2].abs().max(1.0), "{coefficient} vs {}", beta[2]);
        assert!((std_error - se[2]).abs() <= 1e-6 * se[2], "{std_error} vs {}", se[2]);
        let p = erfc_approx((beta[2] / se[2]).abs() / std::f64::consts::SQRT_2);
        assert!((p_value - p).abs() < 1e-6, "{p_value} vs {p}");
        assert_eq!(reject_linearity, p_value < 0.01);
    }
}

#[test]
fn box_tidwell_shift_rule() {
    let (mut x, y) = simulate(800, 9, |v| v - 2.0);
    for v in &mut x {
        *v -= 2.0;
    }
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let report = box_tidwell(&column(&x), &y, &BoxTidwellOptions::default()).unwrap();
    assert!((report.entries[0].shift - (1.0 - min)).abs() < 1e-12);
    let shifted: Vec<f64> = x.iter().map(|v| v + 1.0 - min).collect();
    let direct = box_tidwell(&column(&shifted), &y, &BoxTidwellOptions::default()).unwrap();
    assert_eq!(report.entries[0].outcome, direct.entries[0].outcome);

    let strict = BoxTidwellOptions { shift_nonpositive: false, ..Default::default() };
    assert!(box_tidwell(&column(&x), &y, &strict).is_err());
}

/// R² of regressing column `target` on the others with an intercept.
fn ols_r2(rows: &[Vec<f64>], target: usize) -> f64 {
    let d = rows[0].len();
    let design: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| std::iter::once(1.0).chain((0..d).filter(|&j| j != target).map(|j| r[j])).collect())
        .collect();
    let y: Vec<f64> = rows.iter().map(|r| r[target]).collect();
    let p = design[0].len();
    let xtx: Vec<Vec<f64>> =
        (0..p).map(|a| (0..p).map(|b| design.iter().map(|r| r[a] * r[b]).sum()).collect()).collect();
    let xty: Vec<f64> = (0..p).map(|a| design.iter().zip(&y).map(|(r, v)| r[a] * v).sum()).collect();
    let beta = solve(xtx, xty);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (r, v) in design.iter().zip(&y) {
        let fit: f64 = r.iter().zip(&beta).map(|(a, b)| a * b).sum();
        ss_res += (v - fit).powi(2);
        ss_tot += (v - mean).powi(2);
    }
    1.0 - ss_res / ss_tot
}

fn correlated_rows(n: usize, d: usize, mix: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let shared: f64 = rng.random_range(-1.0..1.0);
            (0..d).map(|_| mix * shared + rng.random_range(-1.0..1.0)).collect()
        })
        .collect()
}

fn finite(v: &Vif) -> f64 {
    match v {
        Vif::Finite(x) => *x,
        Vif::Infinite => panic!("unexpected infinite VIF"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn vif_matches_ols_and_is_at_least_one(d in 2usize..6, mix in 0.0f64..3.0, seed in any::<u64>()) {
        let rows = correlated_rows(120, d, mix, seed);
        let got = vif(&FeatureMatrix::from_rows(&rows, None).unwrap()).unwrap();
        for (j, v) in got.iter().enumerate() {
            let v = finite(v);
            let expect = 1.0 / (1.0 - ols_r2(&rows, j));
            prop_assert!(v >= 1.0 - 1e-12);
            prop_assert!((v - expect).abs() <= 1e-6 * expect);
        }
    }

    #[test]
    fn vif_is_affine_invariant(d in 2usize..5, seed in any::<u64>(), scale in prop::collection::vec(0.01f64..100.0, 5), shift in -50.0f64..50.0) {
        let rows = correlated_rows(80, d, 1.0, seed);
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&scale).map(|(v, s)| v * s + shift).collect()).collect();
        let a = vif(&FeatureMatrix::from_rows(&rows, None).unwrap()).unwrap();
        let b = vif(&FeatureMatrix::from_rows(&moved, None).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((finite(x) - finite(y)).abs() <= 1e-7 * finite(x));
        }
    }

    #[test]
    fn pruning_leaves_all_below_threshold(d in 2usize..6, mix in 0.0f64..4.0, seed in any::<u64>(), thr in 1.5f64..10.0) {
        let rows = correlated_rows(100, d, mix, seed);
        let (report, kept) = vif_prune(&FeatureMatrix::from_rows(&rows, None).unwrap(), thr).unwrap();
        prop_assert_eq!(report.retained.len() + report.removal_order.len(), d);
        prop_assert_eq!(kept.n_cols(), report.retained.len());
        if kept.n_cols() > 1 {
            prop_assert!(vif(&kept).unwrap().iter().all(|v| !v.exceeds(thr)));
        }
    }
}

#[test]
fn duplicate_column_is_infinite() {
    let mut rows = correlated_rows(50, 2, 0.5, 4);
    for r in &mut rows {
        r.push(2.0 * r[0] - 1.0);
    }
    let got = vif(&FeatureMatrix::from_rows(&rows, None).unwrap()).unwrap();
    assert!(got[0].is_infinite() && got[2].is_infinite());
    assert!(!got[1].is_infinite());
}

// 2x·ln(2x) = 2·x ln x + 2 ln 2·x stays in the span of the design, so the
// Wald statistic on the auxiliary term is unchanged by rescaling.
#[test]
fn box_tidwell_decision_survives_rescaling() {
    let strict = BoxTidwellOptions { shift_nonpositive: false, ..Default::default() };
    for seed in 20..26 {
        let (x, y) = simulate(1200, seed, |v| if seed % 2 == 0 { v * v - 2.0 * v } else { 1.5 * v - 3.0 });
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = box_tidwell(&column(&x), &y, &strict).unwrap();
        let b = box_tidwell(&column(&doubled), &y, &strict).unwrap();
        let (
            BoxTidwellOutcome::Tested { p_value: pa, reject_linearity: ra, .. },
            BoxTidwellOutcome::Tested { p_value: pb, reject_linearity: rb, .. },
        ) = (&a.entries[0].outcome, &b.entries[0].outcome)
        else {
            panic!("fit failed for seed {seed}");
        };
        assert_eq!(ra, rb);
        assert!((pa - pb).abs() < 1e-8, "{pa} vs {pb}");
    }
}
