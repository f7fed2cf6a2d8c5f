//! Magnitude-weighted keypoint sampling on a jittered candidate grid.
//!
//! Candidates sit on a regular grid of stride `λ` whose origin is offset by a
//! random amount in `[0, λ)` along each axis. Each candidate is weighted by the
//! first-frame flow magnitude at its pixel; a sample count `N` is drawn
//! uniformly from `1..=n_max` and `N` distinct candidates are chosen by
//! successive weighted draws, renormalizing after every removal.
//!
//! Probabilities are kept in `f64` whatever the flow scalar is.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::flow::FlowField;
use crate::rng::{seeded, PipelineRng};
use crate::scalar::Scalar;

pub const DEFAULT_STRIDE: usize = 16;
pub const DEFAULT_N_MAX: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateGrid {
    stride: usize,
    offset_w: usize,
    offset_h: usize,
    positions: Vec<(usize, usize)>,
}

impl CandidateGrid {
    /// Grid with explicit offsets. Positions are enumerated row-major.
    pub fn with_offsets(width: usize, height: usize, stride: usize, offset_w: usize, offset_h: usize) -> Result<Self> {
        if stride == 0 {
            return Err(invalid!("grid stride must be at least 1"));
        }
        if stride > width.min(height) {
            return Err(invalid!("grid stride {stride} exceeds frame size {width}x{height}"));
        }
        if offset_w >= stride || offset_h >= stride {
            return Err(invalid!("grid offsets ({offset_w}, {offset_h}) must lie in [0, {stride})"));
        }
        let positions = (offset_h..height)
            .step_by(stride)
            .flat_map(|y| (offset_w..width).step_by(stride).map(move |x| (x, y)))
            .collect();
        Ok(Self { stride, offset_w, offset_h, positions })
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn offsets(&self) -> (usize, usize) {
        (self.offset_w, self.offset_h)
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Draws both offsets uniformly from `0..stride` and builds the grid.
pub fn build_candidate_grid<R: Rng + ?Sized>(width: usize, height: usize, stride: usize, rng: &mut R) -> Result<CandidateGrid> {
    if stride == 0 {
        return Err(invalid!("grid stride must be at least 1"));
    }
    if stride > width.min(height) {
        return Err(invalid!("grid stride {stride} exceeds frame size {width}x{height}"));
    }
    let offset_w = rng.gen_range(0..stride as u64) as usize;
    let offset_h = rng.gen_range(0..stride as u64) as usize;
    CandidateGrid::with_offsets(width, height, stride, offset_w, offset_h)
}

/// Normalized flow magnitudes at the grid positions. A static first frame
/// (all magnitudes zero) yields the uniform distribution.
pub fn candidate_probabilities<T: Scalar>(flow0: &FlowField<T>, grid: &CandidateGrid) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(invalid!("candidate grid is empty"));
    }
    let magnitudes = grid
        .positions()
        .iter()
        .map(|&(x, y)| flow0.magnitude_at(x, y).map(|m| m.as_f64()))
        .collect::<Result<Vec<_>>>()?;
    Ok(normalize(&magnitudes))
}

/// Normalizes nonnegative weights, falling back to uniform when they sum to 0.
pub fn normalize(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / weights.len() as f64; weights.len()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    probabilities: Vec<f64>,
    n_max: usize,
    seed: u64,
}

impl SamplingPlan {
    pub fn new(probabilities: Vec<f64>, n_max: usize, seed: u64) -> Result<Self> {
        if n_max == 0 {
            return Err(invalid!("n_max must be at least 1"));
        }
        if probabilities.is_empty() {
            return Err(invalid!("sampling plan has no candidates"));
        }
        if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid!("probabilities must be finite and nonnegative"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid!("probabilities sum to {total}, expected 1"));
        }
        Ok(Self { probabilities, n_max, seed })
    }

    /// Plan for `grid` weighted by the magnitudes of `flow0`.
    pub fn from_flow<T: Scalar>(flow0: &FlowField<T>, grid: &CandidateGrid, n_max: usize, seed: u64) -> Result<Self> {
        Self::new(candidate_probabilities(flow0, grid)?, n_max, seed)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Fresh generator seeded from the plan.
    pub fn rng(&self) -> PipelineRng {
        seeded(self.seed)
    }

    pub fn support_size(&self) -> usize {
        self.probabilities.iter().filter(|&&p| p > 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeypointSet {
    points: Vec<(usize, usize)>,
}

impl KeypointSet {
    pub fn new(points: Vec<(usize, usize)>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid!("keypoint set is empty"));
        }
        let mut sorted = points.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid!("keypoints must be distinct"));
        }
        Ok(Self { points })
    }

    /// Points in draw order.
    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `N ~ Uniform{1, ..., n_max}`.
pub fn draw_sample_count<R: Rng + ?Sized>(n_max: usize, rng: &mut R) -> Result<usize> {
    if n_max == 0 {
        return Err(invalid!("n_max must be at least 1"));
    }
    Ok(rng.gen_range(1..=n_max as u64) as usize)
}

/// One weighted draw among the entries of `weights` not yet `taken`.
/// Returns `None` when no remaining entry has positive weight.
pub fn weighted_draw<R: Rng + ?Sized>(weights: &[f64], taken: &[bool], rng: &mut R) -> Option<usize> {
    let live = |i: &usize| !taken[*i] && weights[*i] > 0.0;
    let total: f64 = (0..weights.len()).filter(live).map(|i| weights[i]).sum();
    if total <= 0.0 {
        return None;
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for i in (0..weights.len()).filter(live) {
        acc += weights[i];
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    // rounding left target at or past the accumulated total
    last
}

/// Successive sampling: `n` distinct indices, each drawn with probability
/// proportional to its weight among the candidates still available. Stops
/// early when the positive-weight support is exhausted.
pub fn select_without_replacement<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut taken = vec![false; weights.len()];
    let mut picked = Vec::with_capacity(n.min(weights.len()));
    while picked.len() < n {
        match weighted_draw(weights, &taken, rng) {
            Some(i) => {
                taken[i] = true;
                picked.push(i);
            }
            None => break,
        }
    }
    picked
}

/// Draws `N` from the plan's budget, caps it at the support size and selects
/// that many distinct candidates, returned in draw order.
pub fn sample_keypoints<R: Rng + ?Sized>(grid: &CandidateGrid, plan: &SamplingPlan, rng: &mut R) -> Result<KeypointSet> {
    let count = draw_sample_count(plan.n_max(), rng)?;
    sample_keypoints_n(grid, plan, count, rng)
}

/// As [`sample_keypoints`] with a fixed draw count `n` (still capped at the
/// support size).
pub fn sample_keypoints_n<R: Rng + ?Sized>(grid: &CandidateGrid, plan: &SamplingPlan, n: usize, rng: &mut R) -> Result<KeypointSet> {
    if grid.is_empty() {
        return Err(invalid!("candidate grid is empty"));
    }
    if plan.probabilities().len() != grid.len() {
        return Err(invalid!(
            "plan has {} probabilities for {} candidates",
            plan.probabilities().len(),
            grid.len()
        ));
    }
    let n = n.min(plan.support_size());
    let picked = select_without_replacement(plan.probabilities(), n, rng);
    KeypointSet::new(picked.into_iter().map(|i| grid.positions()[i]).collect())
}
