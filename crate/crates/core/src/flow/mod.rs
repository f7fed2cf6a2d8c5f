//! Dense flow fields: estimation, sub-pixel sampling and Middlebury I/O.
//!
//! Flow is stored in image coordinates: `u` points right, `v` points down, in
//! pixels per frame step.

mod estimate;
mod flo;
pub(crate) mod plane;

pub use estimate::{estimate_flow, FlowParams};
pub use flo::{read_flo, write_flo, FLO_MAGIC, FLO_TAG_FLOAT};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Per-pixel 2D displacement field.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField<T> {
    width: usize,
    height: usize,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> FlowField<T> {
    pub fn new(width: usize, height: usize, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid!("flow dimensions must be positive, got {width}x{height}"));
        }
        let n = width * height;
        if u.len() != n || v.len() != n {
            return Err(invalid!(
                "flow components have lengths {} and {}, expected {n}",
                u.len(),
                v.len()
            ));
        }
        if u.iter().chain(&v).any(|c| !c.is_finite()) {
            return Err(invalid!("flow contains non-finite displacement"));
        }
        Ok(Self { width, height, u, v })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![T::zero(); n], vec![T::zero(); n])
    }

    pub fn constant(width: usize, height: usize, u: T, v: T) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![u; n], vec![v; n])
    }

    /// Evaluates `f(x, y) -> (u, v)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> (T, T)) -> Result<Self> {
        let n = width * height;
        let (mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        Self::new(width, height, u, v)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (T, T) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn same_dims(&self, other: &FlowField<T>) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Multiplies every displacement by `factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.u.iter().map(|&a| a * factor).collect(),
            self.v.iter().map(|&a| a * factor).collect(),
        )
    }

    /// Largest absolute component over the field.
    pub fn max_abs(&self) -> T {
        self.u.iter().chain(&self.v).fold(T::zero(), |m, c| m.max(c.abs()))
    }

    pub fn cast<U: Scalar>(&self) -> FlowField<U> {
        FlowField {
            width: self.width,
            height: self.height,
            u: self.u.iter().map(|a| U::of(a.as_f64())).collect(),
            v: self.v.iter().map(|a| U::of(a.as_f64())).collect(),
        }
    }

    /// Bilinear interpolation of the displacement at a sub-pixel position.
    ///
    /// Coordinates are clamped into `[0, width-1] x [0, height-1]`. Integer
    /// coordinates return the stored value exactly, and the result never leaves
    /// the componentwise range of the four surrounding samples.
    pub fn sample_bilinear(&self, x: T, y: T) -> Result<(T, T)> {
        if !x.is_finite() || !y.is_finite() {
            return Err(invalid!("non-finite sample coordinate ({x}, {y})"));
        }
        let (x0, x1, fx) = cell(x, self.width);
        let (y0, y1, fy) = cell(y, self.height);
        let i00 = y0 * self.width + x0;
        let i10 = y0 * self.width + x1;
        let i01 = y1 * self.width + x0;
        let i11 = y1 * self.width + x1;
        let u = lerp2(self.u[i00], self.u[i10], self.u[i01], self.u[i11], fx, fy);
        let v = lerp2(self.v[i00], self.v[i10], self.v[i01], self.v[i11], fx, fy);
        Ok((u, v))
    }

    /// Euclidean norm of the displacement at an integer pixel.
    pub fn magnitude_at(&self, x: usize, y: usize) -> Result<T> {
        if x >= self.width || y >= self.height {
            return Err(invalid!(
                "pixel ({x}, {y}) outside {}x{} flow field",
                self.width,
                self.height
            ));
        }
        let (u, v) = self.get(x, y);
        Ok(u.hypot(v))
    }
}

/// Splits a coordinate into the two neighbouring grid indices and the
/// fractional weight of the upper one.
#[inline]
pub(crate) fn cell<T: Scalar>(x: T, len: usize) -> (usize, usize, T) {
    let max = T::of((len - 1) as f64);
    let x = x.max(T::zero()).min(max);
    let x0 = x.floor();
    let i0 = x0.to_usize().unwrap_or(0).min(len - 1);
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, x - x0)
}

#[inline]
pub(crate) fn lerp2<T: Scalar>(a00: T, a10: T, a01: T, a11: T, fx: T, fy: T) -> T {
    let top = a00 + fx * (a10 - a00);
    let bottom = a01 + fx * (a11 - a01);
    let value = top + fy * (bottom - top);
    let lo = a00.min(a10).min(a01).min(a11);
    let hi = a00.max(a10).max(a01).max(a11);
    value.max(lo).min(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    #[test]
    fn bilinear_of_constant_is_constant() {
        let f = FlowField::constant(8, 8, 2.0, -1.0).unwrap();
        assert_eq!(f.sample_bilinear(3.7, 5.2).unwrap(), (2.0, -1.0));
    }

    #[test]
    fn bilinear_at_integer_is_lookup() {
        let f = FlowField::from_fn(8, 8, |x, y| (x as f64 * 0.37 - y as f64, (x * y) as f64 / 7.0)).unwrap();
        assert_eq!(f.sample_bilinear(4.0, 4.0).unwrap(), f.get(4, 4));
    }

    #[test]
    fn bilinear_hand_evaluated() {
        // u = [[0, 1], [0, 1]]: u(x, y) = x, so u(0.25, 0.5) = 0.25
        let f = FlowField::new(2, 2, vec![0.0, 1.0, 0.0, 1.0], vec![0.0; 4]).unwrap();
        assert_eq!(f.sample_bilinear(0.25, 0.5).unwrap(), (0.25, 0.0));
    }

    #[test]
    fn bilinear_rejects_non_finite() {
        let f = FlowField::<f64>::zeros(4, 4).unwrap();
        assert!(matches!(f.sample_bilinear(f64::NAN, 1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(f.sample_bilinear(1.0, f64::INFINITY), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn magnitudes() {
        let f = FlowField::new(3, 1, vec![3.0f64, 0.0, 1.0], vec![4.0, 0.0, 1.0]).unwrap();
        assert_eq!(f.magnitude_at(0, 0).unwrap(), 5.0);
        assert_eq!(f.magnitude_at(1, 0).unwrap(), 0.0);
        assert!((f.magnitude_at(2, 0).unwrap() - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(matches!(f.magnitude_at(3, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(FlowField::new(2, 2, vec![0.0; 4], vec![0.0; 3]).is_err());
        assert!(FlowField::new(1, 1, vec![f64::NAN], vec![0.0]).is_err());
    }

    proptest! {
        #[test]
        fn bilinear_is_bounded_by_corners(
            vals in proptest::collection::vec(-50.0f64..50.0, 32),
            x in 0.0f64..3.0, y in 0.0f64..3.0,
        ) {
            let f = FlowField::new(4, 4, vals[..16].to_vec(), vals[16..].to_vec()).unwrap();
            let (u, v) = f.sample_bilinear(x, y).unwrap();
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let corners = [(x0, y0), ((x0 + 1).min(3), y0), (x0, (y0 + 1).min(3)), ((x0 + 1).min(3), (y0 + 1).min(3))];
            let us: Vec<f64> = corners.iter().map(|&(a, b)| f.get(a, b).0).collect();
            let vs: Vec<f64> = corners.iter().map(|&(a, b)| f.get(a, b).1).collect();
            prop_assert!(u >= us.iter().cloned().fold(f64::INFINITY, f64::min));
            prop_assert!(u <= us.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
            prop_assert!(v >= vs.iter().cloned().fold(f64::INFINITY, f64::min));
            prop_assert!(v <= vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }

        #[test]
        fn bilinear_exact_on_integers(vals in proptest::collection::vec(-50.0f32..50.0, 50), x in 0usize..5, y in 0usize..5) {
            let f = FlowField::new(5, 5, vals[..25].to_vec(), vals[25..].to_vec()).unwrap();
            prop_assert_eq!(f.sample_bilinear(x as f32, y as f32).unwrap(), f.get(x, y));
        }
    }
}
