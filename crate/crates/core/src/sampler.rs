//! Normal-sample selection: cluster the normal-entry embeddings with
//! k-means, then draw a per-cluster quota of records so the stored samples
//! keep the distribution of the full normal population.

use std::collections::HashSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::embedding::EmbeddingVector;
use crate::ingest::LogRecord;

pub const DEFAULT_CAP: usize = 2000;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const MAX_AUTO_K: usize = 50;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("no vectors to cluster")]
    EmptyInput,
    #[error("k = {k} exceeds the number of distinct points ({distinct})")]
    KTooLarge { k: usize, distinct: usize },
    #[error("dimension mismatch: expected {expected}, vector {index} has {got}")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        index: usize,
    },
    #[error("records ({records}) and assignments ({assignments}) differ in length")]
    LengthMismatch { records: usize, assignments: usize },
    #[error("record {id} is not Normal-labeled; the sample database holds normal entries only")]
    NonNormalRecord { id: u64 },
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
}

/// Cluster count: explicit, or derived from the point count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Auto,
    Fixed(usize),
}

impl Serialize for KChoice {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            KChoice::Auto => serializer.serialize_str("auto"),
            KChoice::Fixed(k) => serializer.serialize_u64(*k as u64),
        }
    }
}

impl<'de> Deserialize<'de> for KChoice {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        match &value {
            serde_json::Value::String(s) if s.eq_ignore_ascii_case("auto") => Ok(KChoice::Auto),
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|k| KChoice::Fixed(k as usize))
                .ok_or_else(|| D::Error::custom("k must be a non-negative integer or \"auto\"")),
            _ => Err(D::Error::custom("k must be an integer or \"auto\"")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    #[serde(default = "default_k")]
    pub k: KChoice,
    /// Hard cap on selected samples.
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Relative inertia-improvement stopping threshold.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Drop exact-duplicate contents before clustering (HPC logs repeat heavily).
    #[serde(default)]
    pub dedup: bool,
}

fn default_k() -> KChoice {
    KChoice::Auto
}
fn default_cap() -> usize {
    DEFAULT_CAP
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            k: KChoice::Auto,
            cap: DEFAULT_CAP,
            seed: 0,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            dedup: false,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.cap < 1 {
            return Err(SamplerError::InvalidConfig("cap must be >= 1".into()));
        }
        if let KChoice::Fixed(k) = self.k {
            if k < 1 {
                return Err(SamplerError::InvalidConfig("k must be >= 1".into()));
            }
        }
        if self.max_iter < 1 {
            return Err(SamplerError::InvalidConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of one k-means run.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub centroids: Vec<EmbeddingVector>,
    /// Per-input cluster index; parallel to the input vectors.
    pub assignments: Vec<usize>,
    /// Sum of squared distances of points to their assigned centroids.
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.centroids.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Rule-of-thumb cluster count: `clamp(round(sqrt(n/2)), 1, 50)`.
pub fn choose_k(n: usize) -> usize {
    ((n as f64 / 2.0).sqrt().round() as usize).clamp(1, MAX_AUTO_K)
}

/// Lloyd's algorithm with k-means++ initialization, deterministic for a
/// given `(vectors, config)`.
pub fn kmeans(vectors: &[EmbeddingVector], config: &SamplerConfig) -> Result<ClusterModel, SamplerError> {
    config.validate()?;
    if vectors.is_empty() {
        return Err(SamplerError::EmptyInput);
    }
    let dim = vectors[0].dimension();
    for (index, v) in vectors.iter().enumerate() {
        if v.dimension() != dim {
            return Err(SamplerError::DimensionMismatch {
                expected: dim,
                got: v.dimension(),
                index,
            });
        }
    }

    let distinct = count_distinct(vectors);
    let k = match config.k {
        KChoice::Fixed(k) => {
            if k > distinct {
                return Err(SamplerError::KTooLarge { k, distinct });
            }
            k
        }
        KChoice::Auto => choose_k(vectors.len()).min(distinct),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = init_kmeans_plus_plus(vectors, k, &mut rng);

    let mut assignments = vec![0usize; vectors.len()];
    let mut inertia_history = Vec::new();
    let mut iterations_run = 0;

    loop {
        // Assignment step; ties go to the lowest centroid index.
        let mut inertia = 0.0;
        for (i, v) in vectors.iter().enumerate() {
            let (best, d2) = nearest_centroid(v, &centroids);
            assignments[i] = best;
            inertia += d2;
        }
        iterations_run += 1;
        let converged = match inertia_history.last() {
            Some(&prev) => prev <= 0.0 || (prev - inertia) / prev < config.tol,
            None => false,
        };
        inertia_history.push(inertia);
        if converged || iterations_run >= config.max_iter {
            break;
        }

        // Update step: means of members; empty clusters re-seed to the
        // point currently farthest from its assigned centroid.
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (v, &a) in vectors.iter().zip(&assignments) {
            counts[a] += 1;
            for (acc, x) in sums[a].iter_mut().zip(v.values()) {
                *acc += x;
            }
        }
        let mut reseeded: HashSet<usize> = HashSet::new();
        for c in 0..k {
            if counts[c] > 0 {
                for acc in sums[c].iter_mut() {
                    *acc /= counts[c] as f64;
                }
                centroids[c] = EmbeddingVector::new(std::mem::take(&mut sums[c]));
            } else {
                let far = farthest_point(vectors, &assignments, &centroids, &reseeded);
                reseeded.insert(far);
                centroids[c] = vectors[far].clone();
            }
        }
    }

    let inertia = *inertia_history.last().expect("at least one iteration");
    Ok(ClusterModel {
        centroids,
        assignments,
        inertia,
        iterations_run,
        inertia_history,
    })
}

fn count_distinct(vectors: &[EmbeddingVector]) -> usize {
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(vectors.len());
    for v in vectors {
        seen.insert(v.values().iter().map(|x| x.to_bits()).collect());
    }
    seen.len()
}

fn nearest_centroid(v: &EmbeddingVector, centroids: &[EmbeddingVector]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d2 = v.squared_distance(centroid);
        if d2 < best_d2 {
            best_d2 = d2;
            best = c;
        }
    }
    (best, best_d2)
}

fn init_kmeans_plus_plus(
    vectors: &[EmbeddingVector],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<EmbeddingVector> {
    use rand::Rng;

    let first = rng.random_range(0..vectors.len());
    let mut centroids = vec![vectors[first].clone()];
    let mut d2: Vec<f64> = vectors
        .iter()
        .map(|v| v.squared_distance(&centroids[0]))
        .collect();

    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                target -= w;
                if target <= 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding may leave target slightly positive.
            chosen.unwrap_or_else(|| {
                d2.iter().rposition(|&w| w > 0.0).expect("total > 0")
            })
        } else {
            // All mass at existing centroids (duplicate-heavy input);
            // take the first point that is not already a centroid.
            (0..vectors.len())
                .find(|&i| centroids.iter().all(|c| c != &vectors[i]))
                .expect("distinct count checked")
        };
        let centroid = vectors[next].clone();
        for (i, v) in vectors.iter().enumerate() {
            let d = v.squared_distance(&centroid);
            if d < d2[i] {
                d2[i] = d;
            }
        }
        centroids.push(centroid);
    }
    centroids
}

fn farthest_point(
    vectors: &[EmbeddingVector],
    assignments: &[usize],
    centroids: &[EmbeddingVector],
    excluded: &HashSet<usize>,
) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::NEG_INFINITY;
    for (i, v) in vectors.iter().enumerate() {
        if excluded.contains(&i) {
            continue;
        }
        let d2 = v.squared_distance(&centroids[assignments[i]]);
        if d2 > best_d2 {
            best_d2 = d2;
            best = i;
        }
    }
    best
}

/// Reproducibility record for one sampling run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingManifest {
    pub k: usize,
    pub cluster_sizes: Vec<usize>,
    pub quotas: Vec<usize>,
    pub seed: u64,
    pub cap: usize,
    pub total_records: usize,
    pub selected: usize,
}

impl fmt::Display for SamplingManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sampling manifest")?;
        writeln!(f, "  k:             {}", self.k)?;
        writeln!(f, "  cluster sizes: {:?}", self.cluster_sizes)?;
        writeln!(f, "  quotas:        {:?}", self.quotas)?;
        writeln!(f, "  seed:          {}", self.seed)?;
        writeln!(f, "  cap:           {}", self.cap)?;
        write!(f, "  selected:      {}/{}", self.selected, self.total_records)
    }
}

/// Proportional quotas by largest remainder, with a floor of one sample
/// per non-empty cluster whenever the cap allows it.
pub fn allocate_quotas(cluster_sizes: &[usize], cap: usize) -> Vec<usize> {
    let total: usize = cluster_sizes.iter().sum();
    if total <= cap {
        return cluster_sizes.to_vec();
    }
    let mut quotas: Vec<usize> = Vec::with_capacity(cluster_sizes.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(cluster_sizes.len());
    for (i, &size) in cluster_sizes.iter().enumerate() {
        let share = cap as f64 * size as f64 / total as f64;
        let base = share.floor() as usize;
        quotas.push(base);
        remainders.push((i, share - base as f64));
    }
    let assigned: usize = quotas.iter().sum();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for &(i, _) in remainders.iter().take(cap - assigned) {
        quotas[i] += 1;
    }

    let non_empty = cluster_sizes.iter().filter(|&&s| s > 0).count();
    if cap >= non_empty {
        // Floor: move one unit from the largest quota to each starved
        // non-empty cluster, in index order.
        for i in 0..cluster_sizes.len() {
            if cluster_sizes[i] == 0 || quotas[i] > 0 {
                continue;
            }
            let donor = quotas
                .iter()
                .enumerate()
                .filter(|(_, &q)| q >= 2)
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                .map(|(j, _)| j)
                .expect("cap >= non_empty guarantees a donor");
            quotas[donor] -= 1;
            quotas[i] += 1;
        }
    }
    quotas
}

/// Draw the per-cluster sample, uniformly without replacement, and return
/// the selected records in record-id order plus the manifest.
pub fn select_samples(
    records: &[LogRecord],
    model: &ClusterModel,
    config: &SamplerConfig,
) -> Result<(Vec<LogRecord>, SamplingManifest), SamplerError> {
    config.validate()?;
    if records.len() != model.assignments.len() {
        return Err(SamplerError::LengthMismatch {
            records: records.len(),
            assignments: model.assignments.len(),
        });
    }
    for record in records {
        if record.label.is_anomaly() {
            return Err(SamplerError::NonNormalRecord { id: record.id });
        }
    }

    let cluster_sizes = model.cluster_sizes();
    let quotas = allocate_quotas(&cluster_sizes, config.cap);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); model.k()];
    for (i, &a) in model.assignments.iter().enumerate() {
        members[a].push(i);
    }

    let mut picked: Vec<usize> = Vec::new();
    for (c, member_indices) in members.iter().enumerate() {
        let quota = quotas[c].min(member_indices.len());
        if quota == member_indices.len() {
            picked.extend_from_slice(member_indices);
        } else {
            // Per-cluster stream so the draw is independent of cluster
            // iteration order.
            let mut rng = ChaCha8Rng::seed_from_u64(
                config.seed ^ (c as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
            );
            let chosen = rand::seq::index::sample(&mut rng, member_indices.len(), quota);
            picked.extend(chosen.iter().map(|j| member_indices[j]));
        }
    }

    let mut selected: Vec<LogRecord> = picked.into_iter().map(|i| records[i].clone()).collect();
    selected.sort_by_key(|r| r.id);

    let manifest = SamplingManifest {
        k: model.k(),
        cluster_sizes,
        quotas,
        seed: config.seed,
        cap: config.cap,
        total_records: records.len(),
        selected: selected.len(),
    };
    Ok((selected, manifest))
}

/// Drop records whose content duplicates an earlier record's content.
pub fn dedup_by_content(records: &[LogRecord]) -> Vec<LogRecord> {
    let mut seen: HashSet<&str> = HashSet::new();
    records
        .iter()
        .filter(|r| seen.insert(r.content.as_str()))
        .cloned()
        .collect()
}
