//! Sparse conditioning maps.
//!
//! [`rasterize`] stamps each trajectory's step displacement at its rounded
//! position into two sparse flow channels plus an occupancy mask, and
//! [`smooth`] convolves all three with a normalized isotropic Gaussian using
//! zero padding outside the frame:
//!
//! ```text
//! S~(u, v) = sum_{i=-k..k} sum_{j=-k..k} G(i, j) * S(u - i, v - j)
//! ```
//!
//! Maps are exported in a three-plane binary: the tag `TSKC`, then width,
//! height and plane count (3) as little-endian `i32`, then the `sx`, `sy` and
//! `mask` planes, row-major little-endian `f32`.

use crate::error::{format_err, invalid, Result};
use crate::scalar::Scalar;
use crate::tracker::TrajectorySet;

pub const COND_MAGIC: [u8; 4] = *b"TSKC";
pub const COND_PLANES: i32 = 3;
pub const DEFAULT_RADIUS: usize = 4;
pub const DEFAULT_SIGMA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseFlowMap<T> {
    width: usize,
    height: usize,
    pub sx: Vec<T>,
    pub sy: Vec<T>,
    pub mask: Vec<T>,
}

impl<T: Scalar> SparseFlowMap<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        let n = width * height;
        Self { width, height, sx: vec![T::zero(); n], sy: vec![T::zero(); n], mask: vec![T::zero(); n] }
    }

    pub fn new(width: usize, height: usize, sx: Vec<T>, sy: Vec<T>, mask: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid!("map dimensions must be positive, got {width}x{height}"));
        }
        let n = width * height;
        if sx.len() != n || sy.len() != n || mask.len() != n {
            return Err(invalid!("map planes must each hold {n} values"));
        }
        if sx.iter().chain(&sy).chain(&mask).any(|v| !v.is_finite()) {
            return Err(invalid!("map contains non-finite values"));
        }
        Ok(Self { width, height, sx, sy, mask })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// `(sx, sy, mask)` at a pixel.
    pub fn get(&self, x: usize, y: usize) -> (T, T, T) {
        let i = self.index(x, y);
        (self.sx[i], self.sy[i], self.mask[i])
    }

    pub fn planes(&self) -> [&[T]; 3] {
        [&self.sx, &self.sy, &self.mask]
    }

    /// `a * self + b * other`, planewise.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.width != other.width || self.height != other.height {
            return Err(invalid!("map dimensions differ"));
        }
        let mix = |p: &[T], q: &[T]| p.iter().zip(q).map(|(&x, &y)| a * x + b * y).collect();
        Ok(Self {
            width: self.width,
            height: self.height,
            sx: mix(&self.sx, &other.sx),
            sy: mix(&self.sy, &other.sy),
            mask: mix(&self.mask, &other.mask),
        })
    }
}

/// Stamps the step-`t` displacement of every non-exited trajectory at its
/// position at `t`, rounded half away from zero. Colliding stamps add.
pub fn rasterize<T: Scalar>(set: &TrajectorySet<T>, t: usize) -> Result<SparseFlowMap<T>> {
    if t + 1 >= set.frames() {
        return Err(invalid!("step {t} out of range for {} frames", set.frames()));
    }
    let mut map = SparseFlowMap::zeros(set.width(), set.height());
    for traj in set.trajectories().iter().filter(|tr| !tr.exited) {
        let (du, dv) = traj.displacement_at(t)?;
        let (x, y) = traj.positions[t];
        let px = x.round().to_usize().unwrap_or(0).min(set.width() - 1);
        let py = y.round().to_usize().unwrap_or(0).min(set.height() - 1);
        let i = map.index(px, py);
        map.sx[i] = map.sx[i] + du;
        map.sy[i] = map.sy[i] + dv;
        map.mask[i] = T::one();
    }
    Ok(map)
}

/// Square Gaussian kernel of radius `k`, normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel<T> {
    radius: usize,
    sigma: T,
    /// Normalized 1D profile; the 2D weights are its outer product.
    axis: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> GaussianKernel<T> {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Row-major `(2k+1) x (2k+1)` weights.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `G(i, j)` for offsets in `-k..=k`.
    pub fn weight(&self, i: isize, j: isize) -> T {
        let k = self.radius as isize;
        self.weights[((j + k) * (2 * k + 1) + (i + k)) as usize]
    }
}

pub fn gaussian_kernel<T: Scalar>(radius: usize, sigma: T) -> Result<GaussianKernel<T>> {
    if !sigma.is_finite() || sigma <= T::zero() {
        return Err(invalid!("sigma must be positive, got {sigma}"));
    }
    let k = radius as isize;
    let two_s2 = T::of(2.0) * sigma * sigma;
    let raw: Vec<T> = (-k..=k).map(|i| (-T::of((i * i) as f64) / two_s2).exp()).collect();
    let total = raw.iter().fold(T::zero(), |a, &b| a + b);
    let axis: Vec<T> = raw.iter().map(|&w| w / total).collect();
    // exp(-(i^2 + j^2) / 2s^2) = exp(-i^2 / 2s^2) * exp(-j^2 / 2s^2)
    let weights = axis.iter().flat_map(|&wy| axis.iter().map(move |&wx| wx * wy)).collect();
    Ok(GaussianKernel { radius, sigma, axis, weights })
}

/// Convolves all three planes with `kernel`, treating pixels outside the
/// frame as zero.
pub fn smooth<T: Scalar>(map: &SparseFlowMap<T>, kernel: &GaussianKernel<T>) -> SparseFlowMap<T> {
    let conv = |plane: &[T]| convolve_separable(plane, map.width, map.height, &kernel.axis);
    SparseFlowMap {
        width: map.width,
        height: map.height,
        sx: conv(&map.sx),
        sy: conv(&map.sy),
        mask: conv(&map.mask),
    }
}

fn convolve_separable<T: Scalar>(plane: &[T], width: usize, height: usize, axis: &[T]) -> Vec<T> {
    let k = (axis.len() / 2) as isize;
    if k == 0 {
        return plane.iter().map(|&v| v * axis[0]).collect();
    }
    let (w, h) = (width as isize, height as isize);
    let mut tmp = vec![T::zero(); plane.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for i in -k..=k {
                let sx = x - i;
                if (0..w).contains(&sx) {
                    acc = acc + axis[(i + k) as usize] * plane[(y * w + sx) as usize];
                }
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![T::zero(); plane.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for j in -k..=k {
                let sy = y - j;
                if (0..h).contains(&sy) {
                    acc = acc + axis[(j + k) as usize] * tmp[(sy * w + x) as usize];
                }
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

pub fn write_conditioning<T: Scalar>(map: &SparseFlowMap<T>) -> Vec<u8> {
    let n = map.width * map.height;
    let mut out = Vec::with_capacity(16 + 12 * n);
    out.extend_from_slice(&COND_MAGIC);
    out.extend_from_slice(&(map.width as i32).to_le_bytes());
    out.extend_from_slice(&(map.height as i32).to_le_bytes());
    out.extend_from_slice(&COND_PLANES.to_le_bytes());
    for plane in map.planes() {
        for v in plane {
            out.extend_from_slice(&v.as_f32().to_le_bytes());
        }
    }
    out
}

pub fn read_conditioning<T: Scalar>(bytes: &[u8]) -> Result<SparseFlowMap<T>> {
    if bytes.len() < 16 {
        return Err(format_err!("conditioning header truncated ({} bytes)", bytes.len()));
    }
    if bytes[..4] != COND_MAGIC {
        return Err(format_err!("bad conditioning tag {:?}", String::from_utf8_lossy(&bytes[..4])));
    }
    let field = |i: usize| i32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (width, height, planes) = (field(4), field(8), field(12));
    if width <= 0 || height <= 0 {
        return Err(format_err!("conditioning dimensions must be positive, got {width}x{height}"));
    }
    if planes != COND_PLANES {
        return Err(format_err!("expected {COND_PLANES} planes, found {planes}"));
    }
    let n = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| format_err!("conditioning dimensions overflow"))?;
    let payload = &bytes[16..];
    if payload.len() < 12 * n {
        return Err(format_err!("conditioning payload truncated: {} bytes, expected {}", payload.len(), 12 * n));
    }
    let plane = |p: usize| -> Vec<T> {
        payload[4 * n * p..4 * n * (p + 1)]
            .chunks_exact(4)
            .map(|b| T::of(f32::from_le_bytes(b.try_into().unwrap()) as f64))
            .collect()
    };
    SparseFlowMap::new(width as usize, height as usize, plane(0), plane(1), plane(2)).map_err(|e| format_err!("{e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::tracker::Trajectory;
    use proptest::prelude::*;

    fn set_of(w: usize, h: usize, trajs: &[(&[(f64, f64)], bool)]) -> TrajectorySet<f64> {
        let trajectories = trajs
            .iter()
            .enumerate()
            .map(|(i, (p, exited))| Trajectory { point_id: i, positions: p.to_vec(), exited: *exited })
            .collect();
        TrajectorySet::new(w, h, trajectories).unwrap()
    }

    #[test]
    fn single_stamp_at_rounded_position() {
        let set = set_of(10, 10, &[(&[(5.4, 5.6), (6.4, 3.6)], false)]);
        let map = rasterize(&set, 0).unwrap();
        let (sx, sy, m) = map.get(5, 6);
        assert!((sx - 1.0).abs() < 1e-12 && (sy + 2.0).abs() < 1e-12 && m == 1.0);
        let nonzero = map.mask.iter().filter(|&&m| m != 0.0).count();
        assert_eq!(nonzero, 1);
        assert_eq!(map.sx.iter().filter(|&&m| m != 0.0).count(), 1);
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let set = set_of(10, 10, &[(&[(2.5, 3.5), (2.5, 3.5)], false)]);
        let map = rasterize(&set, 0).unwrap();
        assert_eq!(map.mask[map.index(3, 4)], 1.0);
    }

    #[test]
    fn empty_set_is_all_zero() {
        let set = TrajectorySet::<f64>::with_frames(6, 4, 3, vec![]).unwrap();
        assert_eq!(rasterize(&set, 1).unwrap(), SparseFlowMap::zeros(6, 4));
        assert!(rasterize(&set, 2).is_err());
    }

    #[test]
    fn collisions_sum_in_any_order() {
        let a: &[(f64, f64)] = &[(4.2, 4.1), (5.2, 4.1)];
        let b: &[(f64, f64)] = &[(3.8, 3.9), (3.8, 4.9)];
        let ab = rasterize(&set_of(8, 8, &[(a, false), (b, false)]), 0).unwrap();
        let ba = rasterize(&set_of(8, 8, &[(b, false), (a, false)]), 0).unwrap();
        // brute force: sum of every stamp landing on (4, 4)
        let mut oracle = (0.0, 0.0);
        for p in [a, b] {
            if p[0].0.round() == 4.0 && p[0].1.round() == 4.0 {
                oracle.0 += p[1].0 - p[0].0;
                oracle.1 += p[1].1 - p[0].1;
            }
        }
        let (sx, sy, m) = ab.get(4, 4);
        assert!((sx - oracle.0).abs() < 1e-12 && (sy - oracle.1).abs() < 1e-12);
        assert!((sx - 1.0).abs() < 1e-12 && (sy - 1.0).abs() < 1e-12);
        assert_eq!(m, 1.0);
        assert_eq!(ab, ba);
    }

    #[test]
    fn exited_trajectories_are_skipped_and_t_checked() {
        let set = set_of(8, 8, &[(&[(7.0, 1.0), (7.0, 1.0)], true), (&[(1.0, 1.0), (2.0, 1.0)], false)]);
        let map = rasterize(&set, 0).unwrap();
        assert_eq!(map.mask.iter().filter(|&&m| m != 0.0).count(), 1);
        assert!(matches!(rasterize(&set, 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn kernel_special_cases() {
        let k0 = gaussian_kernel(0, 3.0).unwrap();
        assert_eq!(k0.weights(), &[1.0]);
        let flat = gaussian_kernel(1, 1e6).unwrap();
        assert!(flat.weights().iter().all(|w: &f64| (w - 1.0 / 9.0).abs() < 1e-6));
        let k = gaussian_kernel(1, 1.0f64).unwrap();
        let closed = 1.0 / (1.0 + 4.0 * (-0.5f64).exp() + 4.0 * (-1.0f64).exp());
        let direct: f64 = (-1..=1).flat_map(|i: i32| (-1..=1).map(move |j: i32| (-((i * i + j * j) as f64) / 2.0).exp())).sum();
        assert!((closed - 1.0 / direct).abs() < 1e-15);
        assert!((k.weight(0, 0) - closed).abs() < 1e-12);
        assert!((k.weight(0, 0) - 0.2042).abs() < 1e-4);
        assert!(matches!(gaussian_kernel(2, 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(gaussian_kernel(2, -1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn kernel_symmetry_is_exact() {
        let k = gaussian_kernel(5, 1.7f64).unwrap();
        let r = 5isize;
        for i in -r..=r {
            for j in -r..=r {
                let w = k.weight(i, j);
                assert_eq!(w, k.weight(-i, j));
                assert_eq!(w, k.weight(i, -j));
                assert_eq!(w, k.weight(j, i));
            }
        }
    }

    #[test]
    fn radius_zero_is_identity() {
        let mut map = SparseFlowMap::<f64>::zeros(5, 5);
        map.sx[7] = 0.3;
        map.sy[12] = -1.25;
        map.mask[7] = 1.0;
        assert_eq!(smooth(&map, &gaussian_kernel(0, 1.0).unwrap()), map);
    }

    #[test]
    fn impulse_response_and_corner_mass() {
        let k = gaussian_kernel(1, 1.0f64).unwrap();
        let mut map = SparseFlowMap::<f64>::zeros(7, 7);
        let c = map.index(3, 3);
        map.sx[c] = 1.0;
        let out = smooth(&map, &k);
        for j in -1isize..=1 {
            for i in -1isize..=1 {
                let idx = out.index((3 + i) as usize, (3 + j) as usize);
                assert!((out.sx[idx] - k.weight(i, j)).abs() < 1e-12);
            }
        }

        let mut corner = SparseFlowMap::<f64>::zeros(7, 7);
        corner.sy[0] = 1.0;
        let out = smooth(&corner, &k);
        let retained = k.weight(0, 0) + k.weight(1, 0) + k.weight(0, 1) + k.weight(1, 1);
        let total: f64 = out.sy.iter().sum();
        assert!((total - retained).abs() < 1e-12);
    }

    #[test]
    fn binary_roundtrip_and_errors() {
        let mut map = SparseFlowMap::<f32>::zeros(3, 2);
        map.sx[1] = 1.5;
        map.sy[4] = -0.125;
        map.mask[1] = 1.0;
        let bytes = write_conditioning(&map);
        assert_eq!(bytes.len(), 16 + 3 * 6 * 4);
        assert_eq!(&bytes[..4], b"TSKC");
        assert_eq!(read_conditioning::<f32>(&bytes).unwrap(), map);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_conditioning::<f32>(&bad), Err(Error::Format(_))));
        assert!(matches!(read_conditioning::<f32>(&bytes[..bytes.len() - 2]), Err(Error::Format(_))));
        let mut planes = bytes;
        planes[12..16].copy_from_slice(&2i32.to_le_bytes());
        assert!(matches!(read_conditioning::<f32>(&planes), Err(Error::Format(_))));
    }

    fn arb_map() -> impl Strategy<Value = SparseFlowMap<f64>> {
        proptest::collection::vec(prop_oneof![3 => Just(0.0f64), 1 => -5.0f64..5.0], 3 * 12 * 10)
            .prop_map(|v| SparseFlowMap::new(12, 10, v[..120].to_vec(), v[120..240].to_vec(), v[240..].to_vec()).unwrap())
    }

    proptest! {
        #[test]
        fn kernel_normalized(k in 0usize..=8, sigma in 0.5f64..8.0) {
            let g = gaussian_kernel(k, sigma).unwrap();
            prop_assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(g.weights().iter().all(|&w| w >= 0.0));
        }

        #[test]
        fn smoothing_is_linear(a in arb_map(), b in arb_map(), s in -3.0f64..3.0, t in -3.0f64..3.0, k in 0usize..4, sigma in 0.5f64..4.0) {
            let g = gaussian_kernel(k, sigma).unwrap();
            let lhs = smooth(&a.combine(s, &b, t).unwrap(), &g);
            let rhs = smooth(&a, &g).combine(s, &smooth(&b, &g), t).unwrap();
            for (x, y) in lhs.planes().iter().zip(rhs.planes()) {
                for (p, q) in x.iter().zip(y.iter()) {
                    prop_assert!((p - q).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn interior_mass_is_conserved(k in 0usize..4, sigma in 0.5f64..4.0, x in 4usize..8, y in 4usize..6, val in -4.0f64..4.0) {
            let mut map = SparseFlowMap::<f64>::zeros(12, 10);
            let i = map.index(x, y);
            map.sx[i] = val;
            let out = smooth(&map, &gaussian_kernel(k, sigma).unwrap());
            let total: f64 = out.sx.iter().sum();
            prop_assert!((total - val).abs() <= 1e-6 * val.abs().max(1e-12));
        }

        #[test]
        fn binary_roundtrip_bit_exact(vals in proptest::collection::vec(-1e4f32..1e4, 3 * 20)) {
            let map = SparseFlowMap::new(5, 4, vals[..20].to_vec(), vals[20..40].to_vec(), vals[40..].to_vec()).unwrap();
            let bytes = write_conditioning(&map);
            let back = read_conditioning::<f32>(&bytes).unwrap();
            prop_assert_eq!(write_conditioning(&back), bytes);
            prop_assert_eq!(back, map);
        }
    }
}
