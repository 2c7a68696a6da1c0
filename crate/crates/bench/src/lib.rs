//! Shared fixtures for the criterion benches in `benches/`.

use std::sync::Arc;

use svmenum::data::synthetic;
use svmenum::Dataset;

/// Overlapping two-class Gaussian data; many points end up as support
/// vectors, which is the expensive case for branching.
pub fn overlapping(n: usize, seed: u64) -> Arc<Dataset> {
    Arc::new(synthetic::gaussian_blobs(n, 2, 1.0, seed))
}
