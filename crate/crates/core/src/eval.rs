//! Oracle-based metrics: flow endpoint error, trajectory error and the
//! chi-square fit of first-draw sampling frequencies.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::flow::FlowField;
use crate::sampler::{weighted_draw, CandidateGrid, SamplingPlan};
use crate::scalar::Scalar;
use crate::tracker::TrajectorySet;

/// 99th percentile of the chi-square distribution, indexed by degrees of
/// freedom (index 0 unused).
pub const CHI2_P99: [f64; 11] = [0.0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209];

pub const MIN_FIT_TRIALS: usize = 1000;
pub const MAX_FIT_CANDIDATES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub mean_epe: f64,
    pub max_epe: f64,
    pub per_step_trajectory_error: f64,
    pub chi_square_stat: f64,
    pub sample_count: usize,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Mean and max of `|estimated - truth|` over the pixels where `mask` is set
/// (all pixels when `mask` is `None`).
pub fn endpoint_error<T: Scalar>(estimated: &FlowField<T>, truth: &FlowField<T>, mask: Option<&[bool]>) -> Result<(f64, f64)> {
    if !estimated.same_dims(truth) {
        return Err(invalid!(
            "flow dimensions differ: {}x{} vs {}x{}",
            estimated.width(),
            estimated.height(),
            truth.width(),
            truth.height()
        ));
    }
    let n = estimated.width() * estimated.height();
    if let Some(m) = mask {
        if m.len() != n {
            return Err(invalid!("mask has {} entries, expected {n}", m.len()));
        }
    }
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        let du = (estimated.u()[i] - truth.u()[i]).as_f64();
        let dv = (estimated.v()[i] - truth.v()[i]).as_f64();
        let e = du.hypot(dv);
        sum += e;
        max = max.max(e);
        count += 1;
    }
    if count == 0 {
        return Err(invalid!("endpoint-error mask selects no pixels"));
    }
    Ok((sum / count as f64, max))
}

/// Mean over trajectories and positions of the distance to the matching
/// oracle sequence. `oracle[i]` corresponds to the `i`-th trajectory.
pub fn trajectory_error<T: Scalar>(observed: &TrajectorySet<T>, oracle: &[Vec<(T, T)>]) -> Result<f64> {
    if observed.len() != oracle.len() {
        return Err(invalid!("{} trajectories but {} oracle sequences", observed.len(), oracle.len()));
    }
    if observed.is_empty() {
        return Err(invalid!("no trajectories to compare"));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (traj, truth) in observed.trajectories().iter().zip(oracle) {
        if traj.positions.len() != truth.len() {
            return Err(invalid!(
                "trajectory {} has {} positions, oracle has {}",
                traj.point_id,
                traj.positions.len(),
                truth.len()
            ));
        }
        for (&(x, y), &(ox, oy)) in traj.positions.iter().zip(truth) {
            sum += (x - ox).as_f64().hypot((y - oy).as_f64());
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Chi-square statistic of `trials` first draws from the plan against the
/// plan's probabilities.
pub fn sampling_fit<R: Rng + ?Sized>(grid: &CandidateGrid, plan: &SamplingPlan, trials: usize, rng: &mut R) -> Result<f64> {
    let none_taken = vec![false; plan.probabilities().len()];
    sampling_fit_with(grid, plan, trials, || {
        weighted_draw(plan.probabilities(), &none_taken, rng).expect("plan has positive support")
    })
}

/// As [`sampling_fit`] with an arbitrary drawing procedure returning a
/// candidate index per call.
pub fn sampling_fit_with(
    grid: &CandidateGrid,
    plan: &SamplingPlan,
    trials: usize,
    mut draw: impl FnMut() -> usize,
) -> Result<f64> {
    let probs = plan.probabilities();
    if probs.len() != grid.len() {
        return Err(invalid!("plan has {} probabilities for {} candidates", probs.len(), grid.len()));
    }
    if trials < MIN_FIT_TRIALS {
        return Err(invalid!("sampling fit needs at least {MIN_FIT_TRIALS} trials, got {trials}"));
    }
    if probs.len() > MAX_FIT_CANDIDATES {
        return Err(invalid!("sampling fit supports at most {MAX_FIT_CANDIDATES} candidates, got {}", probs.len()));
    }
    if plan.support_size() == 0 {
        return Err(invalid!("sampling plan has no support"));
    }
    let mut counts = vec![0usize; probs.len()];
    for _ in 0..trials {
        let i = draw();
        if i >= counts.len() {
            return Err(invalid!("draw returned index {i} outside {} candidates", counts.len()));
        }
        counts[i] += 1;
    }
    Ok(chi_square(&counts, probs))
}

/// Pearson statistic over the categories with positive expectation. Any hit
/// on a zero-probability category makes the statistic infinite.
pub fn chi_square(counts: &[usize], probabilities: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probabilities) {
        let expected = p * total as f64;
        if expected > 0.0 {
            let d = c as f64 - expected;
            stat += d * d / expected;
        } else if c > 0 {
            return f64::INFINITY;
        }
    }
    stat
}
