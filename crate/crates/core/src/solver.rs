//! Deterministic solver for the dual SVM problem restricted to an index set.
//!
//! The dual objective is
//!
//! ```text
//! f(α) = Σ_j α_j − ½ Σ_i Σ_j α_i α_j y_i y_j K(x_i, x_j)
//! ```
//!
//! maximised over `0 ≤ α_j ≤ C`, `Σ_j α_j y_j = 0`, and `α_j = 0` outside the
//! index set `I`. Because `f` only depends on the examples with non-zero
//! multipliers, the restricted problem is solved as the ordinary problem on
//! the sub-dataset `S_I` and the result is re-expanded to all `n` examples.
//!
//! The SMO loop always starts from `α = 0`, picks the maximal violating pair
//! and breaks ties towards the smallest index, so a solve is a pure function
//! of `(S_I, C, K)`.

use std::sync::Arc;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::kernel::{GramMatrix, KernelSpec};

/// Curvature floor for degenerate pairs (identical points).
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Stop once the maximal KKT violation drops below this.
    pub kkt_tolerance: f64,
    /// Pair-update cap. `None` means `10_000 * |I|`.
    pub max_iterations: Option<usize>,
    /// Multipliers at or below this are treated as zero. `None` means `1e-8 * C`.
    pub support_threshold: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            kkt_tolerance: 1e-6,
            max_iterations: None,
            support_threshold: None,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.kkt_tolerance) {
            return Err(Error::InvalidParameter("kkt_tolerance must be positive".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        if let Some(t) = self.support_threshold {
            if !positive(t) {
                return Err(Error::InvalidParameter("support_threshold must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn threshold(&self, c: f64) -> f64 {
        self.support_threshold.unwrap_or(1e-8 * c)
    }

    fn iteration_cap(&self, size: usize) -> usize {
        self.max_iterations.unwrap_or(10_000 * size.max(1))
    }
}

/// A dataset together with `C`, the kernel and (below the size cap) a
/// precomputed Gram matrix. Shared read-only by every solve of a session.
#[derive(Debug)]
pub struct SvmProblem {
    dataset: Arc<Dataset>,
    kernel: KernelSpec,
    c: f64,
    gram: Option<GramMatrix>,
}

impl SvmProblem {
    /// Datasets up to this many rows get a dense Gram matrix.
    pub const DEFAULT_GRAM_CAP: usize = 4096;

    pub fn new(dataset: impl Into<Arc<Dataset>>, c: f64, kernel: KernelSpec) -> Result<Self> {
        Self::with_gram_cap(dataset, c, kernel, Self::DEFAULT_GRAM_CAP)
    }

    pub fn with_gram_cap(
        dataset: impl Into<Arc<Dataset>>,
        c: f64,
        kernel: KernelSpec,
        gram_cap: usize,
    ) -> Result<Self> {
        let dataset = dataset.into();
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {c}")));
        }
        kernel.validate()?;
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let gram = (dataset.n() <= gram_cap).then(|| GramMatrix::compute(&kernel, &dataset));
        Ok(SvmProblem {
            dataset,
            kernel,
            c,
            gram,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn shared_dataset(&self) -> Arc<Dataset> {
        Arc::clone(&self.dataset)
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn n(&self) -> usize {
        self.dataset.n()
    }

    pub fn has_gram(&self) -> bool {
        self.gram.is_some()
    }

    #[inline]
    fn k(&self, i: usize, j: usize) -> f64 {
        match &self.gram {
            Some(g) => g.get(i, j),
            None => self.kernel.eval_unchecked(self.dataset.x(i), self.dataset.x(j)),
        }
    }
}

/// Optimal multipliers of the dual problem restricted to an index set.
///
/// Multipliers are stored sparsely: only the support carries non-zero values.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    n: usize,
    index_set: IndexSet,
    support: IndexSet,
    alpha: Vec<(usize, f64)>,
    objective: f64,
    bias: f64,
    c: f64,
    kernel: KernelSpec,
    iterations: usize,
}

impl DualSolution {
    fn zero(problem: &SvmProblem, index_set: IndexSet) -> Self {
        let n = problem.n();
        DualSolution {
            n,
            index_set,
            support: IndexSet::empty(n),
            alpha: Vec::new(),
            objective: 0.0,
            bias: 0.0,
            c: problem.c,
            kernel: problem.kernel,
            iterations: 0,
        }
    }

    /// Builds a solution from a dense multiplier vector computed elsewhere.
    /// Entries at or below `threshold` are dropped; the bias is recomputed.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_dense(
        ds: &Dataset,
        index_set: IndexSet,
        alpha: &[f64],
        objective: f64,
        c: f64,
        kernel: KernelSpec,
        threshold: f64,
        iterations: usize,
    ) -> Result<Self> {
        let n = ds.n();
        let coefficients: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|(j, &a)| a > threshold && index_set.contains(*j))
            .map(|(j, &a)| (j, a))
            .collect();
        let support = IndexSet::from_indices(n, coefficients.iter().map(|&(j, _)| j))?;
        let mut sol = DualSolution {
            n,
            index_set,
            support,
            alpha: coefficients,
            objective,
            bias: 0.0,
            c,
            kernel,
            iterations,
        };
        sol.bias = bias_with(&sol, threshold, |j| ds.y(j), |a, b| kernel.eval_unchecked(ds.x(a), ds.x(b)));
        Ok(sol)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The index set `I` this solution was computed for.
    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn support(&self) -> &IndexSet {
        &self.support
    }

    /// `(index, α)` pairs of the support in ascending index order.
    pub fn coefficients(&self) -> &[(usize, f64)] {
        &self.alpha
    }

    pub fn alpha(&self, j: usize) -> f64 {
        self.alpha
            .binary_search_by_key(&j, |&(i, _)| i)
            .map_or(0.0, |k| self.alpha[k].1)
    }

    pub fn dense_alpha(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for &(j, a) in &self.alpha {
            out[j] = a;
        }
        out
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    /// SMO pair updates spent producing this solution.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `Σ_j α_j y_j K(x_j, x) + b` with `train` the dataset the solution was fit on.
    pub fn decision_value(&self, train: &Dataset, x: &[f64]) -> Result<f64> {
        if x.len() != train.d() {
            return Err(Error::DimensionMismatch {
                expected: train.d(),
                actual: x.len(),
            });
        }
        let mut s = 0.0;
        for &(j, a) in &self.alpha {
            s += a * train.y(j) * self.kernel.eval_unchecked(train.x(j), x);
        }
        Ok(s + self.bias)
    }

    /// Sign of the decision value, with `sgn(0) = +1`.
    pub fn predict(&self, train: &Dataset, x: &[f64]) -> Result<f64> {
        Ok(if self.decision_value(train, x)? >= 0.0 { 1.0 } else { -1.0 })
    }
}

/// JSON form: `{"I":[..],"support":[..],"alpha":{"j":value,..},"objective":..,"bias":..}`
/// with one-based indices.
impl Serialize for DualSolution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct SparseAlpha<'a>(&'a [(usize, f64)]);
        impl Serialize for SparseAlpha<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = serializer.serialize_map(Some(self.0.len()))?;
                for (j, a) in self.0 {
                    map.serialize_entry(&(j + 1).to_string(), a)?;
                }
                map.end()
            }
        }
        let mut s = serializer.serialize_struct("DualSolution", 5)?;
        s.serialize_field("I", &self.index_set.to_one_based())?;
        s.serialize_field("support", &self.support.to_one_based())?;
        s.serialize_field("alpha", &SparseAlpha(&self.alpha))?;
        s.serialize_field("objective", &self.objective)?;
        s.serialize_field("bias", &self.bias)?;
        s.end()
    }
}

/// `{ j : α_j > threshold }`.
pub fn support_of(alpha: &[f64], threshold: f64) -> IndexSet {
    let mut set = IndexSet::empty(alpha.len());
    for (j, &a) in alpha.iter().enumerate() {
        if a > threshold {
            set.insert(j);
        }
    }
    set
}

/// Sums over the non-zero multipliers only, in ascending index order, so the
/// value is identical whether computed on `S` or on `S_I` for any `I`
/// containing the support.
fn objective_sparse(alpha: &[(usize, f64)], y: impl Fn(usize) -> f64, k: impl Fn(usize, usize) -> f64) -> f64 {
    let mut linear = 0.0;
    let mut quadratic = 0.0;
    for &(i, ai) in alpha {
        linear += ai;
        let mut row = 0.0;
        for &(j, aj) in alpha {
            row += aj * y(j) * k(i, j);
        }
        quadratic += ai * y(i) * row;
    }
    linear - 0.5 * quadratic
}

/// Dual objective `f(α)` for a dense multiplier vector.
pub fn objective(alpha: &[f64], ds: &Dataset, kernel: &KernelSpec) -> Result<f64> {
    if alpha.len() != ds.n() {
        return Err(Error::DimensionMismatch {
            expected: ds.n(),
            actual: alpha.len(),
        });
    }
    let sparse: Vec<(usize, f64)> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0.0)
        .map(|(j, &a)| (j, a))
        .collect();
    Ok(objective_sparse(&sparse, |j| ds.y(j), |i, j| kernel.eval_unchecked(ds.x(i), ds.x(j))))
}

/// Membership test for the constrained feasible set `F(I)` using the default
/// tolerances (`1e-9·C` box slack, `1e-9·C·n` on the equality, `1e-8·C`
/// support threshold outside `I`).
pub fn is_feasible(alpha: &[f64], ds: &Dataset, c: f64, index_set: &IndexSet) -> bool {
    if alpha.len() != ds.n() {
        return false;
    }
    let slack = 1e-9 * c;
    let threshold = SolverParams::default().threshold(c);
    let balance: f64 = alpha.iter().zip(ds.labels()).map(|(a, y)| a * y).sum();
    balance.abs() <= slack * ds.n() as f64
        && alpha.iter().all(|&a| a >= -slack && a <= c + slack)
        && alpha
            .iter()
            .enumerate()
            .all(|(j, &a)| index_set.contains(j) || a <= threshold)
}

/// Threshold `b`: the mean of `y_i - Σ_j α_j y_j K(x_j, x_i)` over free
/// multipliers, or the midpoint of the KKT interval when none is free.
fn bias_with(
    sol: &DualSolution,
    threshold: f64,
    y: impl Fn(usize) -> f64,
    k: impl Fn(usize, usize) -> f64,
) -> f64 {
    if sol.is_zero() {
        return 0.0;
    }
    let c = sol.c;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in sol.index_set.iter() {
        let mut s = 0.0;
        for &(j, a) in &sol.alpha {
            s += a * y(j) * k(j, i);
        }
        let yi = y(i);
        let g = yi - s;
        let a = sol.alpha(i);
        let below_upper = a < c - threshold;
        let above_lower = a > threshold;
        if below_upper && above_lower {
            free_sum += g;
            free_count += 1;
        }
        if (below_upper && yi > 0.0) || (above_lower && yi < 0.0) {
            lower = lower.max(g);
        }
        if (below_upper && yi < 0.0) || (above_lower && yi > 0.0) {
            upper = upper.min(g);
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else if upper.is_finite() {
        upper
    } else {
        0.0
    }
}

/// Recomputes the threshold of `sol` from the training data.
pub fn bias(sol: &DualSolution, ds: &Dataset) -> f64 {
    let threshold = SolverParams::default().threshold(sol.c);
    let kernel = sol.kernel;
    bias_with(sol, threshold, |j| ds.y(j), |i, j| kernel.eval_unchecked(ds.x(i), ds.x(j)))
}

/// Solves the dual problem restricted to `index_set`.
///
/// Empty, single-example and single-class index sets yield the zero
/// solution. Running out of iterations returns [`Error::NotConverged`]
/// carrying the best iterate.
pub fn solve_constrained(problem: &SvmProblem, index_set: &IndexSet, params: &SolverParams) -> Result<DualSolution> {
    if index_set.universe() != problem.n() {
        return Err(Error::DimensionMismatch {
            expected: problem.n(),
            actual: index_set.universe(),
        });
    }
    let ds = problem.dataset();
    let members: Vec<usize> = index_set.iter().collect();
    let m = members.len();
    let has_pos = members.iter().any(|&j| ds.y(j) > 0.0);
    let has_neg = members.iter().any(|&j| ds.y(j) < 0.0);
    if !(has_pos && has_neg) {
        return Ok(DualSolution::zero(problem, index_set.clone()));
    }

    let c = problem.c;
    let eps = params.kkt_tolerance;
    let cap = params.iteration_cap(m);
    let y: Vec<f64> = members.iter().map(|&j| ds.y(j)).collect();
    let diag: Vec<f64> = members.iter().map(|&j| problem.k(j, j)).collect();
    let mut alpha = vec![0.0; m];
    // Gradient of the minimisation form ½αᵀQα − Σα, with Q_ij = y_i y_j K_ij.
    let mut grad = vec![-1.0; m];

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        // Maximal violating pair; strict comparisons keep the smallest index on ties.
        let mut i_best = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j_best = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..m {
            let v = -y[t] * grad[t];
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > g_max {
                g_max = v;
                i_best = t;
            }
            if low && v < g_min {
                g_min = v;
                j_best = t;
            }
        }
        if i_best == usize::MAX || j_best == usize::MAX || g_max - g_min < eps {
            converged = true;
            break;
        }
        iterations += 1;

        let (i, j) = (i_best, j_best);
        let (pi, pj) = (members[i], members[j]);
        let q_ij = y[i] * y[j] * problem.k(pi, pj);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (diag[i] + diag[j] + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (diag[i] + diag[j] - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        if di != 0.0 || dj != 0.0 {
            for t in 0..m {
                let pt = members[t];
                grad[t] += y[t] * (y[i] * problem.k(pi, pt) * di + y[j] * problem.k(pj, pt) * dj);
            }
        }
    }

    let threshold = params.threshold(c);
    let coefficients: Vec<(usize, f64)> = members
        .iter()
        .zip(&alpha)
        .filter(|(_, &a)| a > threshold)
        .map(|(&j, &a)| (j, a))
        .collect();
    let n = problem.n();
    let support = IndexSet::from_indices(n, coefficients.iter().map(|&(j, _)| j))?;
    let objective = objective_sparse(&coefficients, |j| ds.y(j), |a, b| problem.k(a, b));
    let mut sol = DualSolution {
        n,
        index_set: index_set.clone(),
        support,
        alpha: coefficients,
        objective,
        bias: 0.0,
        c,
        kernel: problem.kernel,
        iterations,
    };
    sol.bias = bias_with(&sol, threshold, |j| ds.y(j), |a, b| problem.k(a, b));

    if converged {
        Ok(sol)
    } else {
        Err(Error::NotConverged {
            size: m,
            iterations,
            best: Box::new(sol),
        })
    }
}

/// Largest KKT violation of `sol` over its index set, measured on the
/// functional margins `y_i f(x_i)`. Zero means every condition holds exactly.
pub fn kkt_violation(sol: &DualSolution, ds: &Dataset) -> Result<f64> {
    let threshold = SolverParams::default().threshold(sol.c);
    let mut worst: f64 = 0.0;
    for i in sol.index_set.iter() {
        let margin = ds.y(i) * sol.decision_value(ds, ds.x(i))?;
        let a = sol.alpha(i);
        let violation = if a <= threshold {
            1.0 - margin
        } else if a >= sol.c - threshold {
            margin - 1.0
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    Ok(worst)
}
