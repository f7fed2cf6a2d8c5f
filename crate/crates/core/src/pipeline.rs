//! Stage wiring shared by the CLI and the integration tests.

use crate::error::{invalid, Result};
use crate::flow::{estimate_flow, FlowField, FlowParams};
use crate::frame::Frame;
use crate::rng::{stage_rng, Stage};
use crate::sampler::{build_candidate_grid, sample_keypoints, CandidateGrid, KeypointSet, SamplingPlan};
use crate::scalar::Scalar;
use crate::tracker::{propagate_with, Interpolation, TrajectorySet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackConfig {
    pub stride: usize,
    pub n_max: usize,
    pub seed: u64,
    pub interpolation: Interpolation,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            stride: crate::sampler::DEFAULT_STRIDE,
            n_max: crate::sampler::DEFAULT_N_MAX,
            seed: 0,
            interpolation: Interpolation::Bilinear,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tracked<T> {
    pub grid: CandidateGrid,
    pub plan: SamplingPlan,
    pub keypoints: KeypointSet,
    pub trajectories: TrajectorySet<T>,
}

/// Flow between every consecutive pair of frames.
pub fn flow_sequence<T: Scalar>(frames: &[Frame<T>], params: &FlowParams<T>) -> Result<Vec<FlowField<T>>> {
    if frames.len() < 2 {
        return Err(invalid!("need at least 2 frames, got {}", frames.len()));
    }
    frames.windows(2).map(|w| estimate_flow(&w[0], &w[1], params)).collect()
}

/// Grid, plan, keypoints and trajectories for a flow sequence. The grid
/// offsets and the keypoint draws use separate streams of `config.seed`.
pub fn track<T: Scalar>(flows: &[FlowField<T>], config: &TrackConfig) -> Result<Tracked<T>> {
    let first = flows.first().ok_or_else(|| invalid!("flow sequence is empty"))?;
    let grid = build_candidate_grid(first.width(), first.height(), config.stride, &mut stage_rng(config.seed, Stage::Grid))?;
    let plan = SamplingPlan::from_flow(first, &grid, config.n_max, config.seed)?;
    let keypoints = sample_keypoints(&grid, &plan, &mut stage_rng(config.seed, Stage::Keypoints))?;
    let trajectories = propagate_with(&keypoints, flows, config.interpolation)?;
    Ok(Tracked { grid, plan, keypoints, trajectories })
}

/// Mean per-step displacement over all trajectories and steps.
pub fn mean_step_displacement<T: Scalar>(set: &TrajectorySet<T>) -> Option<(f64, f64)> {
    let mut sum = (0.0, 0.0);
    let mut n = 0usize;
    for traj in set.trajectories() {
        for w in traj.positions.windows(2) {
            sum.0 += (w[1].0 - w[0].0).as_f64();
            sum.1 += (w[1].1 - w[0].1).as_f64();
            n += 1;
        }
    }
    (n > 0).then(|| (sum.0 / n as f64, sum.1 / n as f64))
}
