//! k-fold cross-validation over a grid of `C` values.

use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::data::{seeded_rng, Dataset};
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::kernel::KernelSpec;
use crate::metrics::hinge_loss;
use crate::solver::{solve_constrained, SolverParams, SvmProblem};

/// `10^-2, 10^-1, ..., 10^3`.
pub fn default_grid() -> Vec<f64> {
    (-2..=3).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvScore {
    pub c: f64,
    pub mean_validation_hinge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub chosen: f64,
    pub scores: Vec<CvScore>,
}

/// Fold membership: a seeded shuffle dealt round-robin into `folds` groups.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let mut fold_of = vec![0; n];
    for (pos, &j) in order.iter().enumerate() {
        fold_of[j] = pos % folds;
    }
    fold_of
}

/// Picks the grid value with the smallest mean validation hinge loss; ties
/// go to the smaller `C`.
pub fn select_c(
    ds: Arc<Dataset>,
    kernel: KernelSpec,
    grid: &[f64],
    folds: usize,
    seed: u64,
    params: &SolverParams,
) -> Result<CvResult> {
    let n = ds.n();
    if grid.is_empty() {
        return Err(Error::InvalidParameter("grid must not be empty".into()));
    }
    if folds < 2 || folds > n {
        return Err(Error::InvalidParameter(format!("need 2 <= folds <= n, got folds={folds}, n={n}")));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let fold_of = fold_assignment(n, folds, seed);
    let mut scores = Vec::with_capacity(grid.len());
    for &c in &grid {
        let problem = SvmProblem::new(Arc::clone(&ds), c, kernel)?;
        let mut total = 0.0;
        for fold in 0..folds {
            let train = IndexSet::from_indices(n, (0..n).filter(|&j| fold_of[j] != fold))?;
            let model = match solve_constrained(&problem, &train, params) {
                Ok(m) => m,
                Err(Error::NotConverged { best, .. }) => *best,
                Err(e) => return Err(e),
            };
            let held_out: Vec<usize> = (0..n).filter(|&j| fold_of[j] == fold).collect();
            let mut loss = 0.0;
            for &j in &held_out {
                loss += hinge_loss(ds.y(j), model.decision_value(&ds, ds.x(j))?);
            }
            total += loss / held_out.len() as f64;
        }
        scores.push(CvScore {
            c,
            mean_validation_hinge: total / folds as f64,
        });
    }
    let best = scores
        .iter()
        .fold(&scores[0], |best, s| if s.mean_validation_hinge < best.mean_validation_hinge { s } else { best });
    Ok(CvResult {
        chosen: best.c,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic;

    #[test]
    fn singleton_grid() {
        let ds = Arc::new(synthetic::uniform(20, 2, 1));
        let r = select_c(ds, KernelSpec::Linear, &[1.0], 5, 0, &SolverParams::default()).unwrap();
        assert_eq!(r.chosen, 1.0);
    }

    #[test]
    fn deterministic_and_minimal() {
        let ds = Arc::new(synthetic::gaussian_blobs(60, 2, 4.0, 9));
        let run = || select_c(Arc::clone(&ds), KernelSpec::Linear, &default_grid(), 5, 17, &SolverParams::default()).unwrap();
        let a = run();
        assert_eq!(a, run());
        let chosen = a.scores.iter().find(|s| s.c == a.chosen).unwrap();
        assert!(a.scores.iter().all(|s| chosen.mean_validation_hinge <= s.mean_validation_hinge));
    }

    #[test]
    fn folds_partition_rows() {
        let f = fold_assignment(23, 5, 3);
        for fold in 0..5 {
            let size = f.iter().filter(|&&k| k == fold).count();
            assert!(size == 4 || size == 5);
        }
    }

    #[test]
    fn rejects_bad_folds() {
        let ds = Arc::new(synthetic::uniform(4, 2, 1));
        assert!(select_c(Arc::clone(&ds), KernelSpec::Linear, &[1.0], 1, 0, &SolverParams::default()).is_err());
        assert!(select_c(ds, KernelSpec::Linear, &[1.0], 5, 0, &SolverParams::default()).is_err());
    }
}
