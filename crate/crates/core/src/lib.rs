//! Enumeration of support vector machine models with distinct support sets.
//!
//! Given a binary classification dataset, a regularization constant `C` and a
//! kernel, the enumerator lists the optimal solutions of the dual SVM problem
//! restricted to every subset of the training examples, deduplicated by
//! support set and ordered from the largest dual objective downwards. The
//! first model is the ordinary SVM; every later model is the best one that
//! drops at least one support vector of the models listed before it.
//!
//! The crate is organised as:
//!
//! - [`data`]: datasets, loaders, splitting and label-flip injection.
//! - [`kernel`]: kernel functions and the cached Gram matrix.
//! - [`solver`]: the deterministic SMO solver for the restricted dual problem.
//! - [`enumerator`]: the best-first branching search over index sets.
//! - [`metrics`]: hinge loss, misclassification and demographic parity.
//! - [`oracle`]: an independent projected-gradient solver and brute-force
//!   enumeration used to cross-check the main path.
//! - [`cv`]: k-fold selection of `C`.

pub mod cv;
pub mod data;
pub mod enumerator;
mod error;
mod index_set;
pub mod kernel;
pub mod metrics;
pub mod oracle;
pub mod solver;

pub use data::Dataset;
pub use enumerator::{top_k, EnumConfig, EnumSession, EnumStats, EnumeratedModel, StepEvent};
pub use error::{Error, Result};
pub use index_set::IndexSet;
pub use kernel::{GramMatrix, KernelSpec};
pub use metrics::{ModelMetrics, ModelRecord};
pub use solver::{DualSolution, SolverParams, SvmProblem};
