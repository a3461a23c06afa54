use std::collections::HashSet;

use flr_core::dataset::LabeledDataset;
use flr_core::partition::{
    manifest, partition, partition_iid_full, partition_noniid_full, PartitionPlan, Regime, NONIID_BASE_PER_CLASS,
};
use proptest::prelude::*;

/// Feature value = row index, so shard rows can be traced to their source.
fn indexed(class_counts: &[usize]) -> LabeledDataset {
    let labels: Vec<usize> = class_counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
    let rows: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64]).collect();
    LabeledDataset::from_rows(&rows, labels, class_counts.len()).unwrap()
}

#[test]
fn balanced_iid_example() {
    let data = indexed(&[500, 500]);
    let shards = partition_iid_full(&data, 10, 1).unwrap();
    for s in &shards {
        assert_eq!(s.len(), 100);
        assert_eq!(s.data.class_counts(), vec![50, 50]);
    }
    let single = partition_iid_full(&data, 1, 1).unwrap();
    let mut idx = single[0].indices.clone();
    idx.sort_unstable();
    assert_eq!(idx, (0..1000).collect::<Vec<_>>());
}

#[test]
fn bank_sized_iid_full() {
    // Class sizes of the bank marketing data.
    let mut labels = vec![0usize; 39922];
    labels.extend(std::iter::repeat_n(1, 5289));
    let rows: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64]).collect();
    let data = LabeledDataset::from_rows(&rows, labels, 2).unwrap();
    let shards = partition_iid_full(&data, 100, 3).unwrap();
    for s in &shards {
        let k = s.data.class_counts();
        let n = s.len() as f64;
        assert!((k[1] as f64 - n * 5289.0 / 45211.0).abs() <= 1.0);
        assert!((k[0] as f64 - n * 39922.0 / 45211.0).abs() <= 1.0);
    }
}

#[test]
fn noniid_full_three_classes() {
    let data = indexed(&[12_000, 11_000, 10_500]);
    let shards = partition_noniid_full(&data, 99, 2).unwrap();
    assert_eq!(shards.len(), 99);
    let totals = data.class_counts();
    let mut used = HashSet::new();
    for s in &shards {
        let k = s.data.class_counts();
        let major: Vec<usize> = (0..3).filter(|&c| k[c] > NONIID_BASE_PER_CLASS).collect();
        assert_eq!(major.len(), 1);
        let g = major[0];
        assert_eq!(k[g], NONIID_BASE_PER_CLASS + (totals[g] - NONIID_BASE_PER_CLASS * 99) / 33);
        for c in (0..3).filter(|&c| c != g) {
            assert_eq!(k[c], NONIID_BASE_PER_CLASS);
        }
        for &i in &s.indices {
            assert!(used.insert(i));
        }
    }
    assert!(used.len() <= data.n_samples());
    assert!(partition_noniid_full(&indexed(&[5000, 9000]), 100, 0).is_err());
}

#[test]
fn sampled_examples() {
    let data = indexed(&[20_000, 20_000, 20_000]);
    let plan =
        PartitionPlan { regime: Regime::NoniidSampled, clients: 100, sample_size: 100, outlier_frac: 0.1, seed: 1 };
    let shards = partition(&data, &plan).unwrap();
    assert_eq!(shards.iter().filter(|s| !s.honest).count(), 10);
    assert!(shards.iter().filter(|s| s.honest).all(|s| s.len() == 120));

    let data6 = indexed(&[2000; 6]);
    let plan =
        PartitionPlan { regime: Regime::NoniidSampled, clients: 12, sample_size: 25, outlier_frac: 0.0, seed: 1 };
    let shards = partition(&data6, &plan).unwrap();
    assert!(shards.iter().all(|s| s.len() == 35 && s.data.class_counts().iter().all(|&k| k >= 2)));

    let ratio = indexed(&[8000, 2000]);
    let plan = PartitionPlan { regime: Regime::IidSampled, clients: 10, sample_size: 100, outlier_frac: 0.0, seed: 4 };
    let shards = partition(&ratio, &plan).unwrap();
    assert!(shards.iter().all(|s| s.data.class_counts() == vec![80, 20]));

    let m10 = PartitionPlan { clients: 10, outlier_frac: 0.1, ..plan };
    assert_eq!(partition(&ratio, &m10).unwrap().iter().filter(|s| !s.honest).count(), 1);
}

#[test]
fn plan_validation() {
    let data = indexed(&[100, 100]);
    let plan = PartitionPlan { regime: Regime::IidFull, clients: 4, sample_size: 10, outlier_frac: 0.1, seed: 0 };
    assert!(partition(&data, &plan).is_err());
    let plan = PartitionPlan { regime: Regime::IidSampled, outlier_frac: 0.5, ..plan };
    assert!(partition(&data, &plan).is_err());
    let plan = PartitionPlan { regime: Regime::IidFull, clients: 101, outlier_frac: 0.0, ..plan };
    assert!(partition(&data, &plan).is_err());
}

#[test]
fn manifest_round_trips() {
    let data = indexed(&[300, 200]);
    let plan = PartitionPlan { regime: Regime::IidSampled, clients: 5, sample_size: 40, outlier_frac: 0.2, seed: 7 };
    let shards = partition(&data, &plan).unwrap();
    let m = manifest(&shards);
    let json = serde_json::to_string(&m).unwrap();
    let back: Vec<flr_core::partition::ShardManifest> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, m);
    assert_eq!(m.iter().filter(|s| !s.honest).count(), 1);
}

fn regimes() -> impl Strategy<Value = Regime> {
    prop_oneof![Just(Regime::IidFull), Just(Regime::NoniidFull), Just(Regime::IidSampled), Just(Regime::NoniidSampled)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_partitions_are_valid(
        regime in regimes(),
        c in 2usize..5,
        m in 1usize..10,
        s in 10usize..50,
        pct in 0usize..50,
        extra in prop::collection::vec(0usize..300, 4),
        seed in any::<u64>(),
    ) {
        let need = match regime {
            Regime::IidFull => m,
            Regime::NoniidFull => NONIID_BASE_PER_CLASS * m + 1,
            _ => (s + s / 10) * m,
        };
        let counts: Vec<usize> = (0..c).map(|k| need + extra[k]).collect();
        let data = indexed(&counts);
        let totals = data.class_counts();
        let outlier_frac = if regime.is_sampled() { pct as f64 / 100.0 } else { 0.0 };
        let plan = PartitionPlan { regime, clients: m, sample_size: s, outlier_frac, seed };
        let shards = partition(&data, &plan).unwrap();

        prop_assert_eq!(shards.len(), m);
        prop_assert_eq!(&shards, &partition(&data, &plan).unwrap());
        let expected_adv = if regime.is_sampled() { m * pct / 100 } else { 0 };
        prop_assert_eq!(shards.iter().filter(|sh| !sh.honest).count(), expected_adv);

        let mut seen = HashSet::new();
        for sh in &shards {
            prop_assert_eq!(sh.client_id < m, true);
            for (k, &i) in sh.indices.iter().enumerate() {
                prop_assert!(seen.insert(i));
                prop_assert_eq!(sh.data.features.get(k, 0), i as f64);
            }
            if !sh.honest {
                prop_assert!(sh.is_empty());
                continue;
            }
            prop_assert!(!sh.is_empty());
            let k = sh.data.class_counts();
            let n = data.n_samples() as f64;
            match regime {
                Regime::IidFull | Regime::IidSampled => {
                    if regime == Regime::IidSampled {
                        prop_assert_eq!(sh.len(), s);
                    }
                    for cls in 0..c {
                        let ideal = sh.len() as f64 * totals[cls] as f64 / n;
                        prop_assert!((k[cls] as f64 - ideal).abs() <= 1.0 + 1e-9);
                    }
                }
                Regime::NoniidSampled => {
                    prop_assert_eq!(sh.len(), s + (s / 10) * (c - 1));
                }
                Regime::NoniidFull => {
                    prop_assert!(k.iter().all(|&v| v >= NONIID_BASE_PER_CLASS));
                }
            }
        }
        if regime == Regime::IidFull {
            prop_assert_eq!(seen.len(), data.n_samples());
            let sizes: Vec<usize> = shards.iter().map(|sh| sh.len()).collect();
            let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
            prop_assert!(spread <= c);
        }
    }
}
