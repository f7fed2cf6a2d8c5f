//! Coarse-to-fine Horn–Schunck estimation.
//!
//! Each pyramid level warps the second frame by the current flow, linearizes
//! brightness constancy around it and runs Jacobi-style Horn–Schunck sweeps
//! on the total flow. Every sweep reads only the previous iterate, so the
//! result does not depend on traversal order.

use crate::error::{invalid, Result};
use crate::flow::plane::Plane;
use crate::flow::FlowField;
use crate::frame::Frame;
use crate::scalar::{c, Scalar};

/// Coarsest pyramid level allowed, in pixels per side.
const MIN_LEVEL_SIDE: usize = 8;

/// Intensities are rescaled from `[0, 1]` to this range before solving, so
/// `regularization_alpha` has its customary 8-bit magnitude.
const INTENSITY_SCALE: f64 = 255.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams<T> {
    /// Number of pyramid levels, clamped so the coarsest is at least 8x8.
    pub pyramid_levels: usize,
    pub iterations_per_level: usize,
    /// Smoothness weight, in 8-bit intensity units.
    pub regularization_alpha: T,
    /// Stop a level early once the mean absolute update drops below this.
    pub convergence_epsilon: T,
}

impl<T: Scalar> Default for FlowParams<T> {
    fn default() -> Self {
        Self {
            pyramid_levels: 4,
            iterations_per_level: 100,
            regularization_alpha: c(15.0),
            convergence_epsilon: c(1e-4),
        }
    }
}

impl<T: Scalar> FlowParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels < 1 {
            return Err(invalid!("pyramid_levels must be at least 1"));
        }
        if self.iterations_per_level < 1 {
            return Err(invalid!("iterations_per_level must be at least 1"));
        }
        if !self.regularization_alpha.is_finite() || self.regularization_alpha <= T::zero() {
            return Err(invalid!("regularization_alpha must be positive, got {}", self.regularization_alpha));
        }
        if !self.convergence_epsilon.is_finite() || self.convergence_epsilon < T::zero() {
            return Err(invalid!("convergence_epsilon must be nonnegative, got {}", self.convergence_epsilon));
        }
        Ok(())
    }
}

/// Dense flow from `prev` to `next`.
pub fn estimate_flow<T: Scalar>(prev: &Frame<T>, next: &Frame<T>, params: &FlowParams<T>) -> Result<FlowField<T>> {
    params.validate()?;
    if prev.width() != next.width() || prev.height() != next.height() {
        return Err(invalid!(
            "frame dimensions differ: {}x{} vs {}x{}",
            prev.width(),
            prev.height(),
            next.width(),
            next.height()
        ));
    }
    if prev.data().iter().chain(next.data()).any(|v| !v.is_finite()) {
        return Err(invalid!("non-finite intensity in input frame"));
    }

    let scale: T = c(INTENSITY_SCALE);
    let to_plane = |f: &Frame<T>| Plane::new(f.width(), f.height(), f.data().iter().map(|&v| v * scale).collect());
    let first = build_pyramid(to_plane(prev), params.pyramid_levels);
    let second = build_pyramid(to_plane(next), params.pyramid_levels);

    let coarsest = first.last().expect("pyramid has at least one level");
    let mut u = Plane::zeros(coarsest.width, coarsest.height);
    let mut v = Plane::zeros(coarsest.width, coarsest.height);
    for (level, (i1, i2)) in first.iter().zip(&second).enumerate().rev() {
        if level + 1 < first.len() {
            u = u.upsample_flow(i1.width, i1.height);
            v = v.upsample_flow(i1.width, i1.height);
        }
        refine_level(i1, i2, &mut u, &mut v, params);
    }
    FlowField::new(prev.width(), prev.height(), u.data, v.data)
}

/// Level 0 is the input; each further level halves the resolution while both
/// sides stay at least [`MIN_LEVEL_SIDE`].
fn build_pyramid<T: Scalar>(base: Plane<T>, levels: usize) -> Vec<Plane<T>> {
    let mut pyramid = vec![base];
    while pyramid.len() < levels {
        let top = pyramid.last().unwrap();
        let (w, h) = (top.width.div_ceil(2), top.height.div_ceil(2));
        if w < MIN_LEVEL_SIDE || h < MIN_LEVEL_SIDE {
            break;
        }
        let next = top.downsample();
        pyramid.push(next);
    }
    pyramid
}

fn refine_level<T: Scalar>(i1: &Plane<T>, i2: &Plane<T>, u: &mut Plane<T>, v: &mut Plane<T>, params: &FlowParams<T>) {
    let n = i1.data.len();
    let half: T = c(0.5);
    let warped = i2.warp(u, v);
    let (gx1, gy1) = i1.gradients();
    let (gx2, gy2) = warped.gradients();
    let ix: Vec<T> = gx1.data.iter().zip(&gx2.data).map(|(&a, &b)| half * (a + b)).collect();
    let iy: Vec<T> = gy1.data.iter().zip(&gy2.data).map(|(&a, &b)| half * (a + b)).collect();
    let it: Vec<T> = warped.data.iter().zip(&i1.data).map(|(&a, &b)| a - b).collect();

    let alpha2 = params.regularization_alpha * params.regularization_alpha;
    let denom: Vec<T> = ix.iter().zip(&iy).map(|(&gx, &gy)| alpha2 + gx * gx + gy * gy).collect();
    let u0 = u.data.clone();
    let v0 = v.data.clone();

    let mut u_avg = Plane::zeros(u.width, u.height);
    let mut v_avg = Plane::zeros(v.width, v.height);
    let inv_count = T::one() / T::of((2 * n) as f64);
    for _ in 0..params.iterations_per_level {
        u.neighbour_average_into(&mut u_avg);
        v.neighbour_average_into(&mut v_avg);
        let mut change = T::zero();
        for i in 0..n {
            let ub = u_avg.data[i];
            let vb = v_avg.data[i];
            let r = (ix[i] * (ub - u0[i]) + iy[i] * (vb - v0[i]) + it[i]) / denom[i];
            let un = ub - ix[i] * r;
            let vn = vb - iy[i] * r;
            change = change + (un - u.data[i]).abs() + (vn - v.data[i]).abs();
            u.data[i] = un;
            v.data[i] = vn;
        }
        if change * inv_count < params.convergence_epsilon {
            break;
        }
    }
}
