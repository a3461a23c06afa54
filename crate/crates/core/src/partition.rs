//! Client data generation for the four federated regimes: IID and non-IID,
//! each either over the full training set or as fixed-size samples with a
//! fraction of adversarial clients.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{FlrError, Result};
use crate::rng::{self, floor_fraction};

/// Samples of every class given to each client in the non-IID full regime.
pub const NONIID_BASE_PER_CLASS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ClientShard {
    pub client_id: usize,
    pub data: LabeledDataset,
    /// Adversarial clients fabricate parameters and carry no data.
    pub honest: bool,
    /// Row indices into the dataset the shard was drawn from.
    pub indices: Vec<usize>,
}

impl ClientShard {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    IidFull,
    NoniidFull,
    IidSampled,
    NoniidSampled,
}

impl Regime {
    pub fn is_sampled(&self) -> bool {
        matches!(self, Regime::IidSampled | Regime::NoniidSampled)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::IidFull => "iid_full",
            Regime::NoniidFull => "noniid_full",
            Regime::IidSampled => "iid_sampled",
            Regime::NoniidSampled => "noniid_sampled",
        }
    }

    fn tag(&self) -> u64 {
        *self as u64 + 1
    }
}

impl std::str::FromStr for Regime {
    type Err = FlrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid_full" => Ok(Regime::IidFull),
            "noniid_full" => Ok(Regime::NoniidFull),
            "iid_sampled" => Ok(Regime::IidSampled),
            "noniid_sampled" => Ok(Regime::NoniidSampled),
            other => Err(FlrError::InvalidConfig(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub regime: Regime,
    pub clients: usize,
    /// Per-client sample size `s` (sampled regimes only).
    pub sample_size: usize,
    /// Fraction of adversarial clients (sampled regimes only).
    pub outlier_frac: f64,
    pub seed: u64,
}

impl PartitionPlan {
    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 {
            return Err(FlrError::InvalidConfig("need at least one client".into()));
        }
        if !(0.0..0.5).contains(&self.outlier_frac) {
            return Err(FlrError::InvalidConfig(format!(
                "outlier fraction must lie in [0, 0.5), got {}",
                self.outlier_frac
            )));
        }
        if !self.regime.is_sampled() && self.outlier_frac != 0.0 {
            return Err(FlrError::InvalidConfig(format!(
                "regime {} uses all data and allows no adversaries",
                self.regime.name()
            )));
        }
        if self.regime.is_sampled() && self.sample_size == 0 {
            return Err(FlrError::InvalidConfig("sample size must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn adversary_count(&self) -> usize {
        floor_fraction(self.clients, self.outlier_frac)
    }
}

/// Dispatches on `plan.regime`.
pub fn partition(data: &LabeledDataset, plan: &PartitionPlan) -> Result<Vec<ClientShard>> {
    plan.validate()?;
    match plan.regime {
        Regime::IidFull => partition_iid_full(data, plan.clients, plan.seed),
        Regime::NoniidFull => partition_noniid_full(data, plan.clients, plan.seed),
        Regime::IidSampled => partition_iid_sampled(data, plan),
        Regime::NoniidSampled => partition_noniid_sampled(data, plan),
    }
}

fn shuffled_classes(data: &LabeledDataset, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut groups = data.indices_by_class();
    for g in &mut groups {
        g.shuffle(rng);
    }
    groups
}

fn honest_shard(data: &LabeledDataset, client_id: usize, mut indices: Vec<usize>) -> ClientShard {
    indices.sort_unstable();
    ClientShard { client_id, data: data.subset(&indices), honest: true, indices }
}

fn adversarial_shard(data: &LabeledDataset, client_id: usize) -> ClientShard {
    ClientShard { client_id, data: data.subset(&[]), honest: false, indices: Vec::new() }
}

/// Splits client ids `0..m` into (honest ids, adversarial ids), both ascending.
fn assign_roles(m: usize, adversaries: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = (0..m).collect();
    ids.shuffle(rng);
    let mut bad = ids[..adversaries].to_vec();
    let mut good = ids[adversaries..].to_vec();
    bad.sort_unstable();
    good.sort_unstable();
    (good, bad)
}

/// Integer `C × M` table of per-class, per-shard counts whose entries are the
/// floor or ceiling of `size_j · n_c / N`, with row sums `n_c` and column sums
/// `size_j`. Such a rounding always exists; it is found as a bipartite flow on
/// the fractional cells.
fn controlled_rounding(class_counts: &[usize], shard_sizes: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = class_counts.iter().sum();
    debug_assert_eq!(total, shard_sizes.iter().sum::<usize>());
    let c = class_counts.len();
    let m = shard_sizes.len();
    let mut table = vec![vec![0usize; m]; c];
    let mut fractional = vec![vec![false; m]; c];
    let mut row_rem: Vec<usize> = class_counts.to_vec();
    let mut col_rem: Vec<usize> = shard_sizes.to_vec();
    for ci in 0..c {
        for j in 0..m {
            let num = shard_sizes[j] * class_counts[ci];
            table[ci][j] = num / total;
            fractional[ci][j] = num % total != 0;
            row_rem[ci] -= table[ci][j];
            col_rem[j] -= table[ci][j];
        }
    }

    // Augmenting paths: class -> shard over unused fractional cells, or back
    // from a shard to a class along a cell that already took an extra unit.
    let mut extra = vec![vec![false; m]; c];
    fn augment(
        ci: usize,
        fractional: &[Vec<bool>],
        extra: &mut [Vec<bool>],
        col_rem: &mut [usize],
        seen_shard: &mut [bool],
    ) -> bool {
        let m = col_rem.len();
        for j in 0..m {
            if !fractional[ci][j] || extra[ci][j] || seen_shard[j] {
                continue;
            }
            seen_shard[j] = true;
            if col_rem[j] > 0 {
                col_rem[j] -= 1;
                extra[ci][j] = true;
                return true;
            }
            for other in 0..extra.len() {
                if other != ci && extra[other][j] && augment(other, fractional, extra, col_rem, seen_shard) {
                    extra[other][j] = false;
                    extra[ci][j] = true;
                    return true;
                }
            }
        }
        false
    }
    for ci in 0..c {
        while row_rem[ci] > 0 {
            let mut seen = vec![false; m];
            let found = augment(ci, &fractional, &mut extra, &mut col_rem, &mut seen);
            assert!(found, "controlled rounding always exists");
            row_rem[ci] -= 1;
        }
    }
    for ci in 0..c {
        for j in 0..m {
            table[ci][j] += usize::from(extra[ci][j]);
        }
    }
    table
}

/// Sizes `⌊n/m⌋` or `⌈n/m⌉`, larger ones first.
fn even_sizes(n: usize, m: usize) -> Vec<usize> {
    (0..m).map(|j| n / m + usize::from(j < n % m)).collect()
}

/// Stratified split of `pool` (class-grouped, shuffled) into `m` subsets,
/// returned in random order.
fn stratified_subsets(pool: &mut [Vec<usize>], m: usize, total: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let class_counts: Vec<usize> = pool.iter().map(Vec::len).collect();
    let table = controlled_rounding(&class_counts, &even_sizes(total, m));
    let mut subsets = vec![Vec::new(); m];
    for (ci, members) in pool.iter().enumerate() {
        let mut cursor = 0;
        for (j, subset) in subsets.iter_mut().enumerate() {
            let k = table[ci][j];
            subset.extend_from_slice(&members[cursor..cursor + k]);
            cursor += k;
        }
    }
    subsets.shuffle(rng);
    subsets
}

/// Largest-remainder allocation of `s` samples over `weights`.
fn proportional_counts(weights: &[usize], s: usize) -> Vec<usize> {
    let total: usize = weights.iter().sum();
    let mut counts: Vec<usize> = weights.iter().map(|&w| s * w / total).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // Larger remainder first, lower class id on ties.
    order.sort_by_key(|&c| (std::cmp::Reverse((s * weights[c]) % total), c));
    for &c in order.iter().take(s - assigned) {
        counts[c] += 1;
    }
    counts
}

/// Stratified partition of all data into `m` honest shards.
pub fn partition_iid_full(data: &LabeledDataset, m: usize, seed: u64) -> Result<Vec<ClientShard>> {
    if m == 0 {
        return Err(FlrError::InvalidConfig("need at least one client".into()));
    }
    let counts = data.class_counts();
    if let Some((c, &n)) = counts.iter().enumerate().find(|(_, &n)| n < m) {
        return Err(FlrError::InsufficientData(format!(
            "class `{}` has {n} samples, fewer than {m} clients",
            data.class_names()[c]
        )));
    }
    let mut rng = rng::stream(seed, &[rng::STAGE_PARTITION, Regime::IidFull.tag()]);
    let mut pool = shuffled_classes(data, &mut rng);
    let subsets = stratified_subsets(&mut pool, m, data.n_samples(), &mut rng);
    Ok(subsets.into_iter().enumerate().map(|(id, idx)| honest_shard(data, id, idx)).collect())
}

/// Client `k` belongs to class group `k mod C`.
fn group_of(k: usize, n_classes: usize) -> usize {
    k % n_classes
}

/// Every client gets [`NONIID_BASE_PER_CLASS`] samples of each class; the
/// remainder of class `g` is split evenly among the clients of group `g`.
pub fn partition_noniid_full(data: &LabeledDataset, m: usize, seed: u64) -> Result<Vec<ClientShard>> {
    if m == 0 {
        return Err(FlrError::InvalidConfig("need at least one client".into()));
    }
    let n_classes = data.n_classes();
    let base = NONIID_BASE_PER_CLASS;
    let counts = data.class_counts();
    if let Some((c, &n)) = counts.iter().enumerate().find(|(_, &n)| n < base * m) {
        return Err(FlrError::InsufficientData(format!(
            "class `{}` has {n} samples; {m} clients need {} for the base allocation",
            data.class_names()[c],
            base * m
        )));
    }
    let mut rng = rng::stream(seed, &[rng::STAGE_PARTITION, Regime::NoniidFull.tag()]);
    let pool = shuffled_classes(data, &mut rng);
    let group_sizes: Vec<usize> =
        (0..n_classes).map(|g| (0..m).filter(|&k| group_of(k, n_classes) == g).count()).collect();

    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (c, members) in pool.iter().enumerate() {
        let (base_part, rest) = members.split_at(base * m);
        for (k, chunk) in base_part.chunks_exact(base).enumerate() {
            shards[k].extend_from_slice(chunk);
        }
        if group_sizes[c] == 0 {
            continue;
        }
        let extra = rest.len() / group_sizes[c];
        let mut chunks = rest.chunks_exact(extra.max(1));
        for (k, shard) in shards.iter_mut().enumerate() {
            if group_of(k, n_classes) == c && extra > 0 {
                shard.extend_from_slice(chunks.next().expect("enough extras"));
            }
        }
    }
    Ok(shards.into_iter().enumerate().map(|(id, idx)| honest_shard(data, id, idx)).collect())
}

/// Stratified subsets for the honest clients, then a class-proportional
/// sample of `s` points from each subset.
pub fn partition_iid_sampled(data: &LabeledDataset, plan: &PartitionPlan) -> Result<Vec<ClientShard>> {
    plan.validate()?;
    let m = plan.clients;
    let s = plan.sample_size;
    let mut rng = rng::stream(plan.seed, &[rng::STAGE_PARTITION, Regime::IidSampled.tag()]);
    let (honest_ids, adversary_ids) = assign_roles(m, plan.adversary_count(), &mut rng);
    let m_honest = honest_ids.len();
    let counts = data.class_counts();
    let per_class = proportional_counts(&counts, s);
    let mut pool = shuffled_classes(data, &mut rng);
    let subsets = stratified_subsets(&mut pool, m_honest, data.n_samples(), &mut rng);
    let mut shards: Vec<ClientShard> = adversary_ids.iter().map(|&id| adversarial_shard(data, id)).collect();
    for (&id, subset) in honest_ids.iter().zip(subsets) {
        let mut by_class = vec![Vec::new(); data.n_classes()];
        for i in subset {
            by_class[data.labels()[i]].push(i);
        }
        let mut chosen = Vec::with_capacity(s);
        for (c, (members, &need)) in by_class.iter_mut().zip(&per_class).enumerate() {
            if members.len() < need {
                return Err(FlrError::InsufficientData(format!(
                    "class `{}`: a stratified subset for {m_honest} honest clients holds {} samples, {need} needed",
                    data.class_names()[c],
                    members.len()
                )));
            }
            members.shuffle(&mut rng);
            chosen.extend_from_slice(&members[..need]);
        }
        shards.push(honest_shard(data, id, chosen));
    }
    shards.sort_by_key(|sh| sh.client_id);
    Ok(shards)
}

/// Honest client `k` (in id order) is assigned class `k mod C` and holds `s`
/// samples of that class plus `⌊0.1·s⌋` of every other class.
pub fn partition_noniid_sampled(data: &LabeledDataset, plan: &PartitionPlan) -> Result<Vec<ClientShard>> {
    plan.validate()?;
    let s = plan.sample_size;
    let minor = s / 10;
    let n_classes = data.n_classes();
    let mut rng = rng::stream(plan.seed, &[rng::STAGE_PARTITION, Regime::NoniidSampled.tag()]);
    let (honest_ids, adversary_ids) = assign_roles(plan.clients, plan.adversary_count(), &mut rng);
    let m_honest = honest_ids.len();
    let counts = data.class_counts();
    let pool = shuffled_classes(data, &mut rng);
    for c in 0..n_classes {
        let majors = (0..m_honest).filter(|&k| group_of(k, n_classes) == c).count();
        let need = majors * s + (m_honest - majors) * minor;
        if need > counts[c] {
            return Err(FlrError::InsufficientData(format!(
                "class `{}` needs {need} samples for {m_honest} honest clients, has {}",
                data.class_names()[c],
                counts[c]
            )));
        }
    }

    let mut cursors = vec![0usize; n_classes];
    let mut shards: Vec<ClientShard> = adversary_ids.iter().map(|&id| adversarial_shard(data, id)).collect();
    for (k, &id) in honest_ids.iter().enumerate() {
        let major = group_of(k, n_classes);
        let mut chosen = Vec::with_capacity(s + minor * (n_classes - 1));
        for c in 0..n_classes {
            let take = if c == major { s } else { minor };
            chosen.extend_from_slice(&pool[c][cursors[c]..cursors[c] + take]);
            cursors[c] += take;
        }
        shards.push(honest_shard(data, id, chosen));
    }
    shards.sort_by_key(|sh| sh.client_id);
    Ok(shards)
}

/// Provenance record for one shard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub client_id: usize,
    pub honest: bool,
    pub indices: Vec<usize>,
}

pub fn manifest(shards: &[ClientShard]) -> Vec<ShardManifest> {
    shards
        .iter()
        .map(|s| ShardManifest { client_id: s.client_id, honest: s.honest, indices: s.indices.clone() })
        .collect()
}
