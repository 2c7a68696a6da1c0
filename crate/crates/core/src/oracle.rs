//! Independent ground truth for small instances.
//!
//! [`qp_reference_solve`] maximises the restricted dual by projected gradient
//! ascent with an exact Euclidean projection onto
//! `{α : Σ α_j y_j = 0} ∩ [0, C]^m`, using kernel values evaluated directly
//! rather than the solver's Gram cache. [`brute_force_enumerate`] solves every
//! one of the `2^n` subsets with it. Neither shares code with the SMO solver
//! or the heap search, so agreement between the two paths is meaningful.
//!
//! When a restricted dual has a whole face of maximisers, the support of
//! "the" solution depends on which point a solver lands on. The oracle
//! certifies uniqueness of every subproblem optimum and [`compare`] demands
//! exact support agreement only when all of them are unique.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::data::Dataset;
use crate::enumerator::EnumeratedModel;
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::kernel::KernelSpec;
use crate::solver::{DualSolution, SolverParams};

/// Largest dataset [`brute_force_enumerate`] accepts.
pub const MAX_BRUTE_FORCE_N: usize = 12;
/// Largest index set [`qp_reference_solve`] accepts.
pub const MAX_REFERENCE_SIZE: usize = 64;

const ITERATION_CAP: usize = 2_000_000;
const BISECTION_STEPS: usize = 200;

/// One distinct support set and the best objective reached with it.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEntry {
    pub support: IndexSet,
    pub objective: f64,
}

/// Result of solving every subset of a small dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleListing {
    n: usize,
    /// Distinct supports, objective descending, then support ascending.
    pub entries: Vec<OracleEntry>,
    optimum: Vec<f64>,
    ambiguous: Vec<IndexSet>,
}

impl OracleListing {
    /// Optimal restricted objective for `set`.
    pub fn optimum_of(&self, set: &IndexSet) -> f64 {
        self.optimum[mask_of(set)]
    }

    /// Index sets whose restricted optimum is attained at more than one point.
    pub fn ambiguous(&self) -> &[IndexSet] {
        &self.ambiguous
    }

    pub fn is_ambiguous(&self) -> bool {
        !self.ambiguous.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn mask_of(set: &IndexSet) -> usize {
    set.iter().fold(0, |m, j| m | (1 << j))
}

/// Dense dual objective over all pairs.
fn dense_objective(alpha: &[f64], q: &[Vec<f64>]) -> f64 {
    let linear: f64 = alpha.iter().sum();
    let mut quadratic = 0.0;
    for (i, row) in q.iter().enumerate() {
        for (j, &qij) in row.iter().enumerate() {
            quadratic += alpha[i] * alpha[j] * qij;
        }
    }
    linear - 0.5 * quadratic
}

/// Euclidean projection of `v` onto `{Σ a_j y_j = 0, 0 ≤ a_j ≤ c}`.
///
/// The projection is `clip(v - λ y, 0, c)` for the multiplier `λ` at which
/// `h(λ) = Σ y_j clip(v_j - λ y_j, 0, c)` vanishes. `h` is non-increasing and
/// piecewise linear, so `λ` is bracketed by bisection and then solved exactly
/// on the linear piece that contains it.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let clip = |lambda: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(&vj, &yj)| (vj - lambda * yj).clamp(0.0, c))
            .collect()
    };
    let h = |lambda: f64| -> f64 { clip(lambda).iter().zip(y).map(|(a, yj)| a * yj).sum() };

    let reach = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-reach, reach);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);

    // On the piece around `mid`, h(λ) = fixed - |free| λ.
    let mut fixed = 0.0;
    let mut free = 0usize;
    for (&vj, &yj) in v.iter().zip(y) {
        let t = vj - mid * yj;
        if t <= 0.0 {
        } else if t >= c {
            fixed += c * yj;
        } else {
            fixed += yj * vj;
            free += 1;
        }
    }
    if free > 0 {
        let exact = fixed / free as f64;
        if exact >= lo && exact <= hi {
            return clip(exact);
        }
    }
    clip(mid)
}

/// Reference solution of the dual restricted to `index_set`.
///
/// Runs projected gradient ascent with step `1/L` (`L` a Gershgorin bound
/// on the curvature) until no multiplier moves by more than `1e-13·max(C, 1)`
/// in one step.
pub fn qp_reference_solve(ds: &Dataset, index_set: &IndexSet, c: f64, kernel: &KernelSpec) -> Result<DualSolution> {
    reference_solve(ds, index_set, c, kernel).map(|(sol, _)| sol)
}

fn reference_solve(ds: &Dataset, index_set: &IndexSet, c: f64, kernel: &KernelSpec) -> Result<(DualSolution, bool)> {
    let members: Vec<usize> = index_set.iter().collect();
    let m = members.len();
    if m > MAX_REFERENCE_SIZE {
        return Err(Error::OracleTooLarge {
            n: m,
            max: MAX_REFERENCE_SIZE,
        });
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
    }
    let threshold = SolverParams::default().threshold(c);
    let y: Vec<f64> = members.iter().map(|&j| ds.y(j)).collect();
    let zero = || DualSolution::from_dense(ds, index_set.clone(), &vec![0.0; ds.n()], 0.0, c, *kernel, threshold, 0);
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Ok((zero()?, true));
    }

    let q: Vec<Vec<f64>> = members
        .iter()
        .map(|&i| {
            members
                .iter()
                .map(|&j| ds.y(i) * ds.y(j) * kernel.eval(ds.x(i), ds.x(j)).expect("rows share a dimension"))
                .collect()
        })
        .collect();
    let lipschitz = q
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
    let move_tol = 1e-13 * c.max(1.0);

    let mut alpha = vec![0.0; m];
    let mut iterations = 0;
    loop {
        if iterations == ITERATION_CAP {
            return Err(Error::OracleIterationCap(ITERATION_CAP));
        }
        iterations += 1;
        let ascent: Vec<f64> = (0..m)
            .map(|i| alpha[i] + step * (1.0 - q[i].iter().zip(&alpha).map(|(qij, aj)| qij * aj).sum::<f64>()))
            .collect();
        let next = project(&ascent, &y, c);
        let moved = next.iter().zip(&alpha).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        alpha = next;
        if moved <= move_tol {
            break;
        }
    }

    let mut dense = vec![0.0; ds.n()];
    for (k, &j) in members.iter().enumerate() {
        if alpha[k] > threshold {
            dense[j] = alpha[k];
        }
    }
    let kept: Vec<f64> = alpha.iter().map(|&a| if a > threshold { a } else { 0.0 }).collect();
    let objective = dense_objective(&kept, &q);
    let unique = optimum_is_unique(&q, &y, &alpha, c);
    let sol = DualSolution::from_dense(ds, index_set.clone(), &dense, objective, c, *kernel, threshold, iterations)?;
    Ok((sol, unique))
}

/// Orthonormal basis (as columns) of the null space of `m`, which must have
/// at least as many rows as columns.
fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let largest = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = 1e-9 * largest.max(1.0);
    let rows: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol)
        .collect();
    DMatrix::from_fn(m.ncols(), rows.len(), |r, k| v_t[(rows[k], r)])
}

/// Whether `alpha` is the only maximiser of the restricted dual.
///
/// Every maximiser shares `Qα` and `Σα`, so another one exists iff some
/// nonzero direction `d` has `Qd = 0`, `Σd = 0`, `y·d = 0` and respects the
/// active bounds (`d_j ≥ 0` at 0, `d_j ≤ 0` at `C`). That cone is nontrivial
/// iff it contains a line or has an extreme ray, and extreme rays are the
/// one-dimensional solutions obtained by making some bounds tight.
fn optimum_is_unique(q: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64) -> bool {
    let m = alpha.len();
    let mut base = DMatrix::zeros(m + 2, m);
    for i in 0..m {
        for j in 0..m {
            base[(i, j)] = q[i][j];
        }
        base[(m, i)] = 1.0;
        base[(m + 1, i)] = y[i];
    }
    let basis = null_space(&base);
    if basis.ncols() == 0 {
        return true;
    }
    let bound_tol = 1e-7 * c;
    let bounded: Vec<(usize, f64)> = (0..m)
        .filter_map(|j| {
            if alpha[j] <= bound_tol {
                Some((j, 1.0))
            } else if alpha[j] >= c - bound_tol {
                Some((j, -1.0))
            } else {
                None
            }
        })
        .collect();
    let respects_bounds = |d: &[f64]| bounded.iter().all(|&(j, s)| s * d[j] >= -1e-9);
    let dim = basis.ncols();
    for tight in 0u32..(1 << bounded.len()) {
        let rows: Vec<usize> = (0..bounded.len()).filter(|&k| tight & (1 << k) != 0).map(|k| bounded[k].0).collect();
        // Restrict the basis coefficients so the tight coordinates vanish.
        let mut constraint = DMatrix::zeros(rows.len().max(dim), dim);
        for (r, &j) in rows.iter().enumerate() {
            for k in 0..dim {
                constraint[(r, k)] = basis[(j, k)];
            }
        }
        let coeffs = null_space(&constraint);
        if coeffs.ncols() == 0 {
            continue;
        }
        if rows.len() == bounded.len() {
            return false;
        }
        if coeffs.ncols() == 1 {
            let d: Vec<f64> = (&basis * coeffs.column(0)).iter().copied().collect();
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            if respects_bounds(&d) || respects_bounds(&neg) {
                return false;
            }
        }
    }
    true
}

/// Solves all `2^n` subsets, keeps the best objective per distinct support
/// and sorts by objective descending, then support lexicographically.
pub fn brute_force_enumerate(ds: &Dataset, c: f64, kernel: &KernelSpec) -> Result<OracleListing> {
    let n = ds.n();
    if n > MAX_BRUTE_FORCE_N {
        return Err(Error::OracleTooLarge {
            n,
            max: MAX_BRUTE_FORCE_N,
        });
    }
    let mut best: HashMap<IndexSet, f64> = HashMap::new();
    let mut optimum = Vec::with_capacity(1 << n);
    let mut ambiguous = Vec::new();
    for mask in 0usize..(1 << n) {
        let set = IndexSet::from_indices(n, (0..n).filter(|&j| mask & (1 << j) != 0))?;
        let (sol, unique) = reference_solve(ds, &set, c, kernel)?;
        optimum.push(sol.objective());
        if !unique {
            ambiguous.push(set);
        }
        let entry = best.entry(sol.support().clone()).or_insert(f64::NEG_INFINITY);
        *entry = entry.max(sol.objective());
    }
    let mut entries: Vec<OracleEntry> = best
        .into_iter()
        .map(|(support, objective)| OracleEntry { support, objective })
        .collect();
    entries.sort_by(|a, b| {
        b.objective
            .total_cmp(&a.objective)
            .then_with(|| a.support.lex_cmp(&b.support))
    });
    Ok(OracleListing {
        n,
        entries,
        optimum,
        ambiguous,
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}

/// Differences between a brute-force listing and an exhausted enumeration.
///
/// Always checked, within `rel_tol` relative:
/// - emitted objectives never increase;
/// - each emitted objective equals the oracle optimum on its own support;
/// - the emitted objectives and the subset optima form the same value set;
/// - every oracle support is dominated by an emitted model whose support it
///   contains.
///
/// When every subset optimum is unique, supports must also agree position
/// by position, except inside runs of equal objectives, where only the set
/// of supports in the run has to match.
pub fn compare(oracle: &OracleListing, models: &[EnumeratedModel], rel_tol: f64) -> Vec<String> {
    let mut problems = Vec::new();
    for w in models.windows(2) {
        if w[1].objective() > w[0].objective() && !close(w[0].objective(), w[1].objective(), rel_tol) {
            problems.push(format!(
                "rank {}: objective {} rises above rank {} ({})",
                w[1].rank,
                w[1].objective(),
                w[0].rank,
                w[0].objective()
            ));
        }
    }
    for m in models {
        let expected = oracle.optimum_of(m.support());
        if !close(expected, m.objective(), rel_tol) {
            problems.push(format!(
                "rank {}: support {} has optimum {} but was emitted with {}",
                m.rank,
                m.support(),
                expected,
                m.objective()
            ));
        }
    }
    for (mask, &value) in oracle.optimum.iter().enumerate() {
        if !models.iter().any(|m| close(value, m.objective(), rel_tol)) {
            problems.push(format!("subset mask {mask:#b}: optimum {value} not among emitted objectives"));
        }
    }
    for e in &oracle.entries {
        let dominated = models
            .iter()
            .any(|m| m.support().is_subset(&e.support) && (m.objective() >= e.objective || close(m.objective(), e.objective, rel_tol)));
        if !dominated {
            problems.push(format!("oracle support {} (objective {}) has no emitted witness", e.support, e.objective));
        }
    }
    if oracle.is_ambiguous() {
        return problems;
    }

    let oracle = &oracle.entries;
    if oracle.len() != models.len() {
        problems.push(format!(
            "oracle lists {} distinct supports, enumeration emitted {}",
            oracle.len(),
            models.len()
        ));
    }
    let len = oracle.len().min(models.len());
    for k in 0..len {
        if !close(oracle[k].objective, models[k].objective(), rel_tol) {
            problems.push(format!(
                "rank {}: oracle objective {} vs enumerated {}",
                k + 1,
                oracle[k].objective,
                models[k].objective()
            ));
        }
    }
    let mut start = 0;
    while start < len {
        let mut end = start + 1;
        while end < len && close(oracle[end - 1].objective, oracle[end].objective, rel_tol) {
            end += 1;
        }
        let mut expected: Vec<&IndexSet> = oracle[start..end].iter().map(|e| &e.support).collect();
        let mut actual: Vec<&IndexSet> = models[start..end].iter().map(|m| m.support()).collect();
        expected.sort_by(|a, b| a.lex_cmp(b));
        actual.sort_by(|a, b| a.lex_cmp(b));
        if expected != actual {
            problems.push(format!(
                "ranks {}..={}: oracle supports {:?} vs enumerated {:?}",
                start + 1,
                end,
                expected.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                actual.iter().map(|s| s.to_string()).collect::<Vec<_>>()
            ));
        }
        start = end;
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic;
    use crate::solver::{solve_constrained, SvmProblem};

    fn two_point() -> Dataset {
        Dataset::from_rows(vec![vec![-1.0, 0.0], vec![1.0, 0.0]], vec![-1.0, 1.0]).unwrap()
    }

    #[test]
    fn projection_is_feasible_and_fixed_on_feasible_points() {
        let y = [1.0, -1.0, 1.0, -1.0];
        let p = project(&[3.0, -2.0, 0.4, 0.9], &y, 1.0);
        let balance: f64 = p.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!(balance.abs() < 1e-15);
        assert!(p.iter().all(|&a| (0.0..=1.0).contains(&a)));
        let feasible = [0.25, 0.5, 0.75, 0.5];
        assert_eq!(project(&feasible, &y, 1.0), feasible.to_vec());
    }

    #[test]
    fn reference_two_point() {
        let ds = two_point();
        let sol = qp_reference_solve(&ds, &IndexSet::full(2), 1.0, &KernelSpec::Linear).unwrap();
        assert!((sol.alpha(0) - 0.5).abs() < 1e-8);
        assert!((sol.alpha(1) - 0.5).abs() < 1e-8);
        assert!((sol.objective() - 0.5).abs() < 1e-8);
    }

    #[test]
    fn reference_one_class_is_zero() {
        let ds = Dataset::from_rows(vec![vec![1.0], vec![0.5], vec![2.0]], vec![1.0; 3]).unwrap();
        let sol = qp_reference_solve(&ds, &IndexSet::full(3), 1.0, &KernelSpec::Linear).unwrap();
        assert!(sol.is_zero());
        let all = brute_force_enumerate(&ds, 1.0, &KernelSpec::Linear).unwrap();
        assert_eq!(all.entries, vec![OracleEntry { support: IndexSet::empty(3), objective: 0.0 }]);
        assert!(!all.is_ambiguous());
    }

    #[test]
    fn brute_force_two_point() {
        let listing = brute_force_enumerate(&two_point(), 1.0, &KernelSpec::Linear).unwrap();
        assert!(!listing.is_ambiguous());
        assert!((listing.optimum_of(&IndexSet::full(2)) - 0.5).abs() < 1e-8);
        let all = listing.entries;
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].support, IndexSet::full(2));
        assert!((all[0].objective - 0.5).abs() < 1e-8);
        assert_eq!(all[1], OracleEntry { support: IndexSet::empty(2), objective: 0.0 });
    }

    #[test]
    fn brute_force_rejects_large_inputs() {
        let ds = synthetic::uniform(13, 2, 0);
        assert!(matches!(
            brute_force_enumerate(&ds, 1.0, &KernelSpec::Linear),
            Err(Error::OracleTooLarge { n: 13, max: 12 })
        ));
    }

    #[test]
    fn reference_matches_smo_on_random_instances() {
        for seed in 0..30 {
            for c in [0.1, 1.0, 10.0] {
                let ds = synthetic::uniform(8, 2, seed);
                let full = IndexSet::full(8);
                let reference = qp_reference_solve(&ds, &full, c, &KernelSpec::Linear).unwrap();
                let p = SvmProblem::new(ds, c, KernelSpec::Linear).unwrap();
                let smo = solve_constrained(&p, &full, &SolverParams::default()).unwrap();
                let scale = reference.objective().abs().max(1.0);
                assert!(
                    (reference.objective() - smo.objective()).abs() <= 1e-6 * scale,
                    "seed {seed} C {c}: {} vs {}",
                    reference.objective(),
                    smo.objective()
                );
            }
        }
    }

    #[test]
    fn compare_tolerates_reordered_ties_only() {
        let s = |v: &[usize]| IndexSet::from_indices(4, v.iter().copied()).unwrap();
        let oracle = OracleListing {
            n: 4,
            entries: vec![
                OracleEntry { support: s(&[0, 1]), objective: 1.0 },
                OracleEntry { support: s(&[2, 3]), objective: 1.0 },
                OracleEntry { support: s(&[]), objective: 0.0 },
            ],
            optimum: (0..16).map(|m| if m & 0b11 == 0b11 || m & 0b1100 == 0b1100 { 1.0 } else { 0.0 }).collect(),
            ambiguous: Vec::new(),
        };
        let ds = synthetic::uniform(4, 2, 1);
        let make = |rank, support: IndexSet, objective| EnumeratedModel {
            rank,
            solution: DualSolution::from_dense(
                &ds,
                IndexSet::full(4),
                &(0..4).map(|j| if support.contains(j) { 0.5 } else { 0.0 }).collect::<Vec<_>>(),
                objective,
                1.0,
                KernelSpec::Linear,
                1e-8,
                0,
            )
            .unwrap(),
            objective_ratio: 1.0,
            parent_rank: None,
        };
        let swapped = vec![make(1, s(&[2, 3]), 1.0), make(2, s(&[0, 1]), 1.0), make(3, s(&[]), 0.0)];
        assert!(compare(&oracle, &swapped, 1e-6).is_empty());
        let wrong = vec![make(1, s(&[2, 3]), 1.0), make(2, s(&[]), 0.0), make(3, s(&[0, 1]), 1.0)];
        assert!(!compare(&oracle, &wrong, 1e-6).is_empty());
    }

    #[test]
    fn uniqueness_certificate() {
        // Strictly concave in the only feasible direction.
        let q = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        assert!(optimum_is_unique(&q, &[1.0, -1.0], &[0.5, 0.5], 1.0));
        // Q = 0: every balanced point with the same Σα is optimal.
        let zero = vec![vec![0.0; 4]; 4];
        let y = [1.0, 1.0, -1.0, -1.0];
        assert!(!optimum_is_unique(&zero, &y, &[0.5, 0.5, 0.5, 0.5], 1.0));
        // Same flat objective, but all multipliers pinned at C.
        assert!(optimum_is_unique(&zero, &y, &[1.0, 1.0, 1.0, 1.0], 1.0));
    }

    #[test]
    fn detects_flat_optimal_face() {
        // One positive point inside the hull of the negatives: w = 0 is
        // reachable in many ways once the positive multiplier hits C.
        let ds = Dataset::from_rows(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![1.0, -1.0, -1.0, -1.0, -1.0],
        )
        .unwrap();
        let (sol, unique) = reference_solve(&ds, &IndexSet::full(5), 0.1, &KernelSpec::Linear).unwrap();
        assert!((sol.objective() - 0.2).abs() < 1e-9);
        assert!(!unique);
        let listing = brute_force_enumerate(&ds, 0.1, &KernelSpec::Linear).unwrap();
        assert!(listing.ambiguous().contains(&IndexSet::full(5)));
    }
}
