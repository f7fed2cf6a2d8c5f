//! Scratch single-channel buffers for the estimator. Borders replicate.

use crate::flow::{cell, lerp2};
use crate::scalar::{c, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![T::zero(); width * height])
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Replicate-border lookup.
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> T {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.at(x, y)
    }

    pub fn sample(&self, x: T, y: T) -> T {
        let (x0, x1, fx) = cell(x, self.width);
        let (y0, y1, fy) = cell(y, self.height);
        lerp2(self.at(x0, y0), self.at(x1, y0), self.at(x0, y1), self.at(x1, y1), fx, fy)
    }

    /// Separable 5-tap binomial filter `[1 4 6 4 1] / 16`.
    pub fn binomial5(&self) -> Self {
        let taps: [T; 5] = [c(1.0 / 16.0), c(4.0 / 16.0), c(6.0 / 16.0), c(4.0 / 16.0), c(1.0 / 16.0)];
        let (w, h) = (self.width, self.height);
        let mut tmp = Plane::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                let mut acc = T::zero();
                for (k, &t) in taps.iter().enumerate() {
                    acc = acc + t * self.at_clamped(x as isize + k as isize - 2, y as isize);
                }
                tmp.data[y * w + x] = acc;
            }
        }
        let mut out = Plane::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                let mut acc = T::zero();
                for (k, &t) in taps.iter().enumerate() {
                    acc = acc + t * tmp.at_clamped(x as isize, y as isize + k as isize - 2);
                }
                out.data[y * w + x] = acc;
            }
        }
        out
    }

    /// Pre-filters and keeps every second pixel in each direction.
    pub fn downsample(&self) -> Self {
        let blurred = self.binomial5();
        let (w, h) = (self.width.div_ceil(2), self.height.div_ceil(2));
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(blurred.at(2 * x, 2 * y));
            }
        }
        Plane::new(w, h, data)
    }

    /// Resamples a coarse flow component onto a `width x height` grid and
    /// doubles it.
    pub fn upsample_flow(&self, width: usize, height: usize) -> Self {
        let half: T = c(0.5);
        let two: T = c(2.0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let cx = T::of(x as f64) * half;
                let cy = T::of(y as f64) * half;
                data.push(two * self.sample(cx, cy));
            }
        }
        Plane::new(width, height, data)
    }

    /// Central differences `(d/dx, d/dy)`.
    pub fn gradients(&self) -> (Self, Self) {
        let (w, h) = (self.width, self.height);
        let half: T = c(0.5);
        let mut gx = Plane::zeros(w, h);
        let mut gy = Plane::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                let (xi, yi) = (x as isize, y as isize);
                gx.data[y * w + x] = half * (self.at_clamped(xi + 1, yi) - self.at_clamped(xi - 1, yi));
                gy.data[y * w + x] = half * (self.at_clamped(xi, yi + 1) - self.at_clamped(xi, yi - 1));
            }
        }
        (gx, gy)
    }

    /// `out(x, y) = self(x + u(x, y), y + v(x, y))`.
    pub fn warp(&self, u: &Plane<T>, v: &Plane<T>) -> Self {
        let (w, h) = (self.width, self.height);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                data.push(self.sample(T::of(x as f64) + u.data[i], T::of(y as f64) + v.data[i]));
            }
        }
        Plane::new(w, h, data)
    }

    /// Horn–Schunck neighbourhood average: weight 1/6 on the four direct
    /// neighbours and 1/12 on the diagonals.
    pub fn neighbour_average_into(&self, out: &mut Plane<T>) {
        let (w, h) = (self.width, self.height);
        let edge: T = c(1.0 / 6.0);
        let diag: T = c(1.0 / 12.0);
        for y in 0..h {
            for x in 0..w {
                let (xi, yi) = (x as isize, y as isize);
                let direct = self.at_clamped(xi - 1, yi)
                    + self.at_clamped(xi + 1, yi)
                    + self.at_clamped(xi, yi - 1)
                    + self.at_clamped(xi, yi + 1);
                let corners = self.at_clamped(xi - 1, yi - 1)
                    + self.at_clamped(xi + 1, yi - 1)
                    + self.at_clamped(xi - 1, yi + 1)
                    + self.at_clamped(xi + 1, yi + 1);
                out.data[y * w + x] = edge * direct + diag * corners;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_preserves_constants() {
        let p = Plane::new(5, 4, vec![0.75f64; 20]);
        assert!(p.binomial5().data.iter().all(|&v| (v - 0.75).abs() < 1e-15));
        let d = p.downsample();
        assert_eq!((d.width, d.height), (3, 2));
    }

    #[test]
    fn gradients_of_ramp() {
        let p = Plane::new(4, 3, (0..12).map(|i| (i % 4) as f64 * 2.0).collect());
        let (gx, gy) = p.gradients();
        assert_eq!(gx.at(1, 1), 2.0);
        // replicate border halves the one-sided difference
        assert_eq!(gx.at(0, 1), 1.0);
        assert!(gy.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_warp_is_identity() {
        let p = Plane::new(3, 3, (0..9).map(|i| i as f64 / 9.0).collect());
        let z = Plane::zeros(3, 3);
        assert_eq!(p.warp(&z, &z), p);
    }
}
