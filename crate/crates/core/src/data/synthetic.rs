//! Seeded synthetic datasets for tests, benchmarks and the `verify` command.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{seeded_rng, Dataset};

/// Points uniform in `[-1, 1]^d` with independent fair-coin labels.
///
/// Small instances from this generator are what the oracle cross-checks run on.
pub fn uniform(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let rows = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
    Dataset::from_rows(rows, labels).expect("generator produces valid rows")
}

/// Two isotropic unit-variance Gaussian clouds whose means are
/// `±separation / 2` along every axis. Labels alternate `+1, -1, ...`.
pub fn gaussian_blobs(n: usize, d: usize, separation: f64, seed: u64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let shift = separation / 2.0;
    let labels: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let rows = labels
        .iter()
        .map(|&y| {
            (0..d)
                .map(|_| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    y * shift + noise
                })
                .collect()
        })
        .collect();
    Dataset::from_rows(rows, labels).expect("generator produces valid rows")
}

/// Two-group data with a binary sensitive feature `z` in `{-1, +1}`.
///
/// Features are `x1`, `x2` and `z`. The label depends on `x1 + x2` plus a
/// group shift, so predictions correlate with `z` and label flips among
/// rows with `y != z` move demographic parity.
pub fn two_group(n: usize, seed: u64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let z = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let x1: f64 = StandardNormal.sample(&mut rng);
        let x2: f64 = StandardNormal.sample(&mut rng);
        let noise: f64 = StandardNormal.sample(&mut rng);
        let score = x1 + 0.5 * x2 + 0.4 * z + 0.5 * noise;
        labels.push(if score >= 0.0 { 1.0 } else { -1.0 });
        rows.push(vec![x1, x2, z]);
    }
    Dataset::from_rows(rows, labels)
        .and_then(|ds| ds.with_feature_names(vec!["x1".into(), "x2".into(), "z".into()]))
        .expect("generator produces valid rows")
}
