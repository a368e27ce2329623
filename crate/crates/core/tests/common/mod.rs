//! Helpers shared by integration tests: partition agreement scoring,
//! seeded synthetic geometry, and corpus construction.

use logtriage::embedding::EmbeddingVector;
use logtriage::ingest::{Label, LogRecord};
use rand::prelude::*;
use rand_distr::{Distribution, Normal};

/// Adjusted Rand index between two partitions of the same points: 1.0 for
/// identical partitions (up to relabeling), ~0.0 for independent ones.
/// Computed from the contingency table with the permutation-model
/// expectation, independently of any clustering code under test.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must label the same points");
    assert!(!a.is_empty());
    let rows = 1 + a.iter().copied().max().unwrap();
    let cols = 1 + b.iter().copied().max().unwrap();
    let mut table = vec![vec![0u64; cols]; rows];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let comb2 = |n: u64| (n as f64) * (n.saturating_sub(1) as f64) / 2.0;
    let sum_cells: f64 = table.iter().flatten().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = table.iter().map(|row| comb2(row.iter().sum())).sum();
    let sum_cols: f64 = (0..cols)
        .map(|j| comb2(table.iter().map(|row| row[j]).sum()))
        .sum();
    let expected = sum_rows * sum_cols / comb2(a.len() as u64);
    let maximum = (sum_rows + sum_cols) / 2.0;
    if (maximum - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (sum_cells - expected) / (maximum - expected)
}

/// Isotropic Gaussian blobs: `per_blob` points around each center, with
/// the generating blob index as ground truth.
pub fn gaussian_blobs(
    centers: &[Vec<f64>],
    per_blob: usize,
    sigma: f64,
    rng: &mut impl Rng,
) -> (Vec<EmbeddingVector>, Vec<usize>) {
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut points = Vec::with_capacity(centers.len() * per_blob);
    let mut truth = Vec::with_capacity(centers.len() * per_blob);
    for (blob, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            let point: Vec<f64> = center.iter().map(|&c| c + noise.sample(rng)).collect();
            points.push(EmbeddingVector::new(point));
            truth.push(blob);
        }
    }
    (points, truth)
}

/// A random direction on the unit sphere (L2 norm 1).
pub fn random_unit_vector(rng: &mut impl Rng, dimension: usize) -> EmbeddingVector {
    let gauss = Normal::new(0.0, 1.0).unwrap();
    loop {
        let raw: Vec<f64> = (0..dimension).map(|_| gauss.sample(rng)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return EmbeddingVector::new(raw.into_iter().map(|x| x / norm).collect());
        }
    }
}

pub fn normal_record(id: u64, content: &str) -> LogRecord {
    LogRecord {
        id,
        raw: format!("- {content}"),
        content: content.to_string(),
        label: Label::Normal,
        source: "synthetic".to_string(),
    }
}

pub fn anomaly_record(id: u64, content: &str) -> LogRecord {
    LogRecord {
        id,
        raw: format!("FAULT {content}"),
        content: content.to_string(),
        label: Label::Anomaly("FAULT".to_string()),
        source: "synthetic".to_string(),
    }
}

/// Dot product with the same accumulation order the store uses, so scores
/// compare bit-for-bit.
pub fn dot(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let (a, b) = (a.values(), b.values());
    let mut sum = 0.0;
    for i in 0..a.len() {
        sum += a[i] * b[i];
    }
    sum
}
