//! Best-first enumeration of SVM models with distinct support sets.
//!
//! The search follows Lawler's k-best scheme. A max-heap holds triples
//! `(α, I, B)` where `α` is the optimal solution restricted to the index set
//! `I` and `B` is a forbidden set. Popping a triple emits `α` unless its
//! support was emitted before, then branches on every `j ∈ supp(α) \ B` in
//! ascending order: the child `I \ {j}` is solved and pushed with the
//! forbidden set as it stands, after which `j` joins `B` so later siblings
//! keep `j`. Distinct subproblems therefore never overlap, and because a
//! child's optimum can never exceed its parent's, models come out in
//! non-increasing objective order.
//!
//! Equal objectives are ordered by the lexicographically smallest index set
//! so ranks are reproducible.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::kernel::KernelSpec;
use crate::solver::{solve_constrained, DualSolution, SolverParams, SvmProblem};

const SNAPSHOT_VERSION: u32 = 1;

fn is_false(b: &bool) -> bool {
    !*b
}

fn default_max_heap() -> usize {
    EnumConfig::DEFAULT_MAX_HEAP
}

/// Fixed configuration of an enumeration session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    #[serde(default)]
    pub params: SolverParams,
    /// Heap capacity; exceeding it is an error rather than unbounded growth.
    #[serde(default = "default_max_heap")]
    pub max_heap: usize,
    /// Fault injection for negative controls: pops the smallest key first.
    #[doc(hidden)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub invert_order: bool,
}

impl EnumConfig {
    pub const DEFAULT_MAX_HEAP: usize = 1_000_000;

    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        EnumConfig {
            c,
            kernel,
            params: SolverParams::default(),
            max_heap: Self::DEFAULT_MAX_HEAP,
            invert_order: false,
        }
    }
}

/// A heap entry: a solution, the index set it was solved on and the
/// forbidden set.
#[derive(Debug, Clone)]
pub struct SearchTriple {
    solution: DualSolution,
    forbidden: IndexSet,
}

impl SearchTriple {
    pub fn solution(&self) -> &DualSolution {
        &self.solution
    }

    pub fn index_set(&self) -> &IndexSet {
        self.solution.index_set()
    }

    pub fn forbidden(&self) -> &IndexSet {
        &self.forbidden
    }
}

#[derive(Debug)]
struct HeapEntry {
    key: f64,
    triple: SearchTriple,
    parent_rank: Option<usize>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.triple.index_set().lex_cmp(self.triple.index_set()))
    }
}

/// A model emitted by a session.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedModel {
    pub rank: usize,
    pub solution: DualSolution,
    /// `f(α^(k)) / f(α^(1))`, or 1 when the first objective is zero.
    pub objective_ratio: f64,
    /// Rank of the model whose support the branching parent carried.
    pub parent_rank: Option<usize>,
}

impl EnumeratedModel {
    pub fn objective(&self) -> f64 {
        self.solution.objective()
    }

    pub fn support(&self) -> &IndexSet {
        self.solution.support()
    }

    pub fn index_set(&self) -> &IndexSet {
        self.solution.index_set()
    }
}

#[derive(Debug, Clone)]
pub enum StepEvent {
    Emitted(EnumeratedModel),
    /// The popped support had already been emitted with this rank.
    Duplicate { rank: usize },
    Exhausted,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnumStats {
    pub solver_calls: usize,
    pub heap_pops: usize,
    pub duplicates: usize,
    pub insertions: usize,
    /// One-based index sets whose solve did not converge; those children
    /// were not inserted.
    pub failed_children: Vec<Vec<usize>>,
    pub peak_heap: usize,
}

/// Lazy enumeration state: the heap, the registry of emitted supports and
/// counters. Single owner; callers serialise access.
pub struct EnumSession {
    problem: Arc<SvmProblem>,
    config: EnumConfig,
    heap: BinaryHeap<HeapEntry>,
    emitted: Vec<EnumeratedModel>,
    registry: HashMap<IndexSet, usize>,
    stats: EnumStats,
}

impl EnumSession {
    /// Solves the full problem and seeds the heap with `(A([n]), [n], ∅)`.
    pub fn new(dataset: impl Into<Arc<Dataset>>, config: EnumConfig) -> Result<Self> {
        let problem = SvmProblem::new(dataset, config.c, config.kernel)?;
        Self::with_problem(Arc::new(problem), config)
    }

    /// Uses a prepared problem; `config.c` and `config.kernel` must match it.
    pub fn with_problem(problem: Arc<SvmProblem>, config: EnumConfig) -> Result<Self> {
        let mut session = Self::empty(problem, config)?;
        let n = session.problem.n();
        let root = solve_constrained(&session.problem, &IndexSet::full(n), &session.config.params)?;
        session.stats.solver_calls += 1;
        session.push(HeapEntry {
            key: 0.0,
            triple: SearchTriple {
                solution: root,
                forbidden: IndexSet::empty(n),
            },
            parent_rank: None,
        })?;
        Ok(session)
    }

    fn empty(problem: Arc<SvmProblem>, config: EnumConfig) -> Result<Self> {
        if problem.c() != config.c || problem.kernel() != config.kernel {
            return Err(Error::InvalidParameter("problem does not match session config".into()));
        }
        config.params.validate()?;
        if config.max_heap == 0 {
            return Err(Error::InvalidParameter("max_heap must be positive".into()));
        }
        Ok(EnumSession {
            problem,
            config,
            heap: BinaryHeap::new(),
            emitted: Vec::new(),
            registry: HashMap::new(),
            stats: EnumStats::default(),
        })
    }

    fn push(&mut self, mut entry: HeapEntry) -> Result<()> {
        if self.heap.len() >= self.config.max_heap {
            return Err(Error::HeapOverflow(self.config.max_heap));
        }
        let objective = entry.triple.solution.objective();
        entry.key = if self.config.invert_order { -objective } else { objective };
        self.heap.push(entry);
        self.stats.peak_heap = self.stats.peak_heap.max(self.heap.len());
        Ok(())
    }

    pub fn problem(&self) -> &SvmProblem {
        &self.problem
    }

    pub fn dataset(&self) -> &Dataset {
        self.problem.dataset()
    }

    pub fn config(&self) -> &EnumConfig {
        &self.config
    }

    pub fn stats(&self) -> &EnumStats {
        &self.stats
    }

    pub fn emitted(&self) -> &[EnumeratedModel] {
        &self.emitted
    }

    pub fn heap_len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.heap.is_empty()
    }

    /// Triples currently waiting in the heap, in no particular order.
    pub fn pending(&self) -> impl Iterator<Item = &SearchTriple> {
        self.heap.iter().map(|e| &e.triple)
    }

    /// One iteration of the main loop: pop, emit or suppress, branch.
    pub fn step(&mut self) -> Result<StepEvent> {
        let Some(entry) = self.heap.pop() else {
            return Ok(StepEvent::Exhausted);
        };
        self.stats.heap_pops += 1;

        let support = entry.triple.solution.support().clone();
        let event = match self.registry.get(&support) {
            Some(&rank) => {
                self.stats.duplicates += 1;
                StepEvent::Duplicate { rank }
            }
            None => {
                let rank = self.emitted.len() + 1;
                let first = self.emitted.first().map_or(entry.triple.solution.objective(), |m| m.objective());
                let objective_ratio = if first == 0.0 {
                    1.0
                } else {
                    entry.triple.solution.objective() / first
                };
                let model = EnumeratedModel {
                    rank,
                    solution: entry.triple.solution.clone(),
                    objective_ratio,
                    parent_rank: entry.parent_rank,
                };
                self.registry.insert(support.clone(), rank);
                self.emitted.push(model.clone());
                StepEvent::Emitted(model)
            }
        };
        let own_rank = match &event {
            StepEvent::Emitted(m) => m.rank,
            StepEvent::Duplicate { rank } => *rank,
            StepEvent::Exhausted => unreachable!(),
        };
        self.branch(entry.triple, own_rank)?;
        Ok(event)
    }

    fn branch(&mut self, triple: SearchTriple, rank: usize) -> Result<()> {
        let index_set = triple.solution.index_set();
        let branch_on: Vec<usize> = triple.solution.support().difference(&triple.forbidden).iter().collect();
        let problem = &*self.problem;
        let params = &self.config.params;
        // Children are solved in parallel but inserted in ascending j order.
        let children: Vec<(usize, Result<DualSolution>)> = branch_on
            .par_iter()
            .map(|&j| (j, solve_constrained(problem, &index_set.without(j), params)))
            .collect();
        self.stats.solver_calls += children.len();

        let mut forbidden = triple.forbidden.clone();
        for (j, child) in children {
            match child {
                Ok(solution) => {
                    debug_assert!(recomputed_objective_matches(&self.problem, &solution));
                    self.push(HeapEntry {
                        key: 0.0,
                        triple: SearchTriple {
                            solution,
                            forbidden: forbidden.clone(),
                        },
                        parent_rank: Some(rank),
                    })?;
                    self.stats.insertions += 1;
                }
                Err(Error::NotConverged { .. }) => {
                    self.stats.failed_children.push(index_set.without(j).to_one_based());
                }
                Err(e) => return Err(e),
            }
            forbidden.insert(j);
        }
        Ok(())
    }

    /// Steps until the next distinct model or exhaustion.
    pub fn next_model(&mut self) -> Result<Option<EnumeratedModel>> {
        loop {
            match self.step()? {
                StepEvent::Emitted(model) => return Ok(Some(model)),
                StepEvent::Duplicate { .. } => continue,
                StepEvent::Exhausted => return Ok(None),
            }
        }
    }

    pub fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            n: self.problem.n(),
            emitted: self
                .emitted
                .iter()
                .map(|m| SnapshotModel {
                    rank: m.rank,
                    index_set: m.index_set().to_one_based(),
                    objective: m.objective(),
                    parent_rank: m.parent_rank,
                })
                .collect(),
            heap: self
                .heap
                .iter()
                .map(|e| SnapshotTriple {
                    index_set: e.triple.index_set().to_one_based(),
                    forbidden: e.triple.forbidden.to_one_based(),
                    objective: e.triple.solution.objective(),
                    parent_rank: e.parent_rank,
                })
                .collect(),
            stats: self.stats.clone(),
        }
    }

    /// Rebuilds a session by re-solving every stored index set. The solver is
    /// deterministic, so each recomputed objective must match bit for bit.
    pub fn restore(dataset: impl Into<Arc<Dataset>>, snapshot: SessionSnapshot) -> Result<Self> {
        let config = snapshot.config.clone();
        let problem = Arc::new(SvmProblem::new(dataset, config.c, config.kernel)?);
        Self::restore_with_problem(problem, snapshot)
    }

    pub fn restore_with_problem(problem: Arc<SvmProblem>, snapshot: SessionSnapshot) -> Result<Self> {
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::SnapshotMismatch(format!("unsupported version {}", snapshot.version)));
        }
        let n = problem.n();
        if snapshot.n != n {
            return Err(Error::SnapshotMismatch(format!("snapshot has n={}, dataset has n={n}", snapshot.n)));
        }
        let mut session = Self::empty(problem, snapshot.config)?;
        let params = session.config.params;
        let problem = &*session.problem;
        let resolve = |index_set: &[usize], objective: f64| -> Result<DualSolution> {
            let set = IndexSet::from_one_based(n, index_set)?;
            let solution = match solve_constrained(problem, &set, &params) {
                Ok(s) => s,
                Err(Error::NotConverged { best, .. }) => *best,
                Err(e) => return Err(e),
            };
            if solution.objective().to_bits() != objective.to_bits() {
                return Err(Error::SnapshotMismatch(format!(
                    "index set {set} re-solved to {} but the snapshot recorded {objective}",
                    solution.objective()
                )));
            }
            Ok(solution)
        };

        let emitted = snapshot
            .emitted
            .par_iter()
            .map(|m| resolve(&m.index_set, m.objective))
            .collect::<Result<Vec<_>>>()?;
        let pending = snapshot
            .heap
            .par_iter()
            .map(|t| resolve(&t.index_set, t.objective))
            .collect::<Result<Vec<_>>>()?;

        let first = emitted.first().map(DualSolution::objective);
        for (record, solution) in snapshot.emitted.iter().zip(emitted) {
            let objective_ratio = match first {
                Some(f) if f != 0.0 => solution.objective() / f,
                _ => 1.0,
            };
            session.registry.insert(solution.support().clone(), record.rank);
            session.emitted.push(EnumeratedModel {
                rank: record.rank,
                solution,
                objective_ratio,
                parent_rank: record.parent_rank,
            });
        }
        for (record, solution) in snapshot.heap.iter().zip(pending) {
            session.push(HeapEntry {
                key: 0.0,
                triple: SearchTriple {
                    solution,
                    forbidden: IndexSet::from_one_based(n, &record.forbidden)?,
                },
                parent_rank: record.parent_rank,
            })?;
        }
        session.stats = snapshot.stats;
        Ok(session)
    }
}

impl Iterator for EnumSession {
    type Item = Result<EnumeratedModel>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_model().transpose()
    }
}

fn recomputed_objective_matches(problem: &SvmProblem, solution: &DualSolution) -> bool {
    let Ok(f) = crate::solver::objective(&solution.dense_alpha(), problem.dataset(), &problem.kernel()) else {
        return false;
    };
    (f - solution.objective()).abs() <= 1e-8 * f.abs().max(1e-12)
}

/// Persistable session state. Multipliers are not stored; they are re-solved
/// from the index sets on restore.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub version: u32,
    pub config: EnumConfig,
    pub n: usize,
    pub emitted: Vec<SnapshotModel>,
    pub heap: Vec<SnapshotTriple>,
    pub stats: EnumStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotModel {
    pub rank: usize,
    #[serde(rename = "I")]
    pub index_set: Vec<usize>,
    pub objective: f64,
    pub parent_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotTriple {
    #[serde(rename = "I")]
    pub index_set: Vec<usize>,
    #[serde(rename = "B")]
    pub forbidden: Vec<usize>,
    pub objective: f64,
    pub parent_rank: Option<usize>,
}

/// The first `min(k, total)` models of a fresh session.
pub fn top_k(dataset: impl Into<Arc<Dataset>>, config: EnumConfig, k: usize) -> Result<Vec<EnumeratedModel>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    EnumSession::new(dataset, config)?.take(k).collect()
}
