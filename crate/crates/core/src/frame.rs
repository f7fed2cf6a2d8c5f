//! Single-channel intensity frames and binary PGM (P5) I/O.

use crate::error::{format_err, invalid, Result};
use crate::scalar::Scalar;

/// Row-major intensity image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid!("frame dimensions must be positive, got {width}x{height}"));
        }
        if data.len() != width * height {
            return Err(invalid!(
                "frame data has {} values, expected {}",
                data.len(),
                width * height
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid!("non-finite intensity at index {i}"));
        }
        if let Some(i) = data.iter().position(|&v| v < T::zero() || v > T::one()) {
            return Err(invalid!("intensity {} at index {i} outside [0, 1]", data[i]));
        }
        Ok(Self { width, height, data })
    }

    pub fn constant(width: usize, height: usize, value: T) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Samples `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Overwrites one pixel, clamping the value into `[0, 1]`.
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let v = if value.is_finite() { value.max(T::zero()).min(T::one()) } else { T::zero() };
        self.data[y * self.width + x] = v;
    }

    pub fn cast<U: Scalar>(&self) -> Frame<U> {
        Frame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }
}

/// A decoded PGM, keeping the source `maxval` so it can be written back
/// unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm<T> {
    pub frame: Frame<T>,
    pub maxval: u16,
}

/// Decodes a binary PGM. Samples are one byte for `maxval < 256` and two
/// big-endian bytes otherwise; intensities are divided by `maxval`.
pub fn read_pgm<T: Scalar>(bytes: &[u8]) -> Result<Pgm<T>> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor.token()?;
    if magic != b"P5" {
        return Err(format_err!("not a binary PGM (magic {:?})", String::from_utf8_lossy(magic)));
    }
    let width = cursor.number()?;
    let height = cursor.number()?;
    let maxval = cursor.number()?;
    if width == 0 || height == 0 {
        return Err(format_err!("PGM dimensions must be positive, got {width}x{height}"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format_err!("PGM maxval {maxval} outside 1..=65535"));
    }
    // exactly one whitespace byte separates the header from the raster
    if cursor.pos >= bytes.len() || !bytes[cursor.pos].is_ascii_whitespace() {
        return Err(format_err!("PGM header not terminated by whitespace"));
    }
    let raster = &bytes[cursor.pos + 1..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| format_err!("PGM dimensions overflow"))?;
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    if raster.len() < n * sample_bytes {
        return Err(format_err!(
            "PGM raster truncated: {} bytes, expected {}",
            raster.len(),
            n * sample_bytes
        ));
    }
    let scale = maxval as f64;
    let mut data = Vec::with_capacity(n);
    for i in 0..n {
        let raw = if sample_bytes == 1 {
            raster[i] as u32
        } else {
            u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as u32
        };
        if raw > maxval as u32 {
            return Err(format_err!("PGM sample {raw} exceeds maxval {maxval}"));
        }
        data.push(T::of(raw as f64 / scale));
    }
    let frame = Frame::new(width, height, data)?;
    Ok(Pgm { frame, maxval: maxval as u16 })
}

/// Encodes `frame` as a binary PGM with the given `maxval`, rounding each
/// intensity to the nearest level.
pub fn write_pgm<T: Scalar>(frame: &Frame<T>, maxval: u16) -> Result<Vec<u8>> {
    if maxval == 0 {
        return Err(invalid!("PGM maxval must be positive"));
    }
    let mut out = format!("P5\n{} {}\n{}\n", frame.width, frame.height, maxval).into_bytes();
    let scale = maxval as f64;
    for &v in &frame.data {
        let level = (v.as_f64() * scale).round().clamp(0.0, scale) as u16;
        if maxval < 256 {
            out.push(level as u8);
        } else {
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    Ok(out)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format_err!("PGM header truncated"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err!("bad PGM header field {:?}", String::from_utf8_lossy(tok)))
    }
}
