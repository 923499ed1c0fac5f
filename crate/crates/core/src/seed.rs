//! Seed derivation. Every random stream in the crate is a ChaCha8 generator
//! keyed by a 64-bit seed derived from a root seed and the coordinates of
//! the work item, so results never depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `root`: `h = mix64(h + GOLDEN + part)` for each part.
pub fn derive(root: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(root), |h, &p| mix64(h.wrapping_add(GOLDEN).wrapping_add(p)))
}

/// Seed for one (N, M, seed index) cell of a contamination sweep.
pub fn cell_seed(root: u64, n_reference: usize, m_contaminants: usize, seed_index: usize) -> u64 {
    derive(
        root,
        &[n_reference as u64, m_contaminants as u64, seed_index as u64],
    )
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
