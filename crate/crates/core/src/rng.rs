//! Seeded randomness.
//!
//! Every random draw in the crate goes through [`PipelineRng`], which is
//! ChaCha8: a counter-based generator whose output stream is fixed by its
//! 64-bit seed across platforms. One top-level seed is split into one
//! independent ChaCha stream per pipeline stage.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PipelineRng = ChaCha8Rng;

/// Pipeline stages that consume randomness. The discriminant is the ChaCha
/// stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    Grid = 1,
    Keypoints = 2,
    Render = 3,
    Eval = 4,
}

pub fn seeded(seed: u64) -> PipelineRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream of the top-level `seed` for `stage`.
pub fn stage_rng(seed: u64, stage: Stage) -> PipelineRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}
