//! Middlebury `.flo` files.
//!
//! Layout, all little-endian: the tag `PIEH` (the float 202021.25), width and
//! height as `i32`, then row-major interleaved `(u, v)` pairs as `f32`.

use crate::error::{format_err, Result};
use crate::flow::FlowField;
use crate::scalar::Scalar;

pub const FLO_MAGIC: [u8; 4] = *b"PIEH";
pub const FLO_TAG_FLOAT: f32 = 202021.25;

const HEADER_LEN: usize = 12;

pub fn write_flo<T: Scalar>(flow: &FlowField<T>) -> Vec<u8> {
    let n = flow.width() * flow.height();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n);
    out.extend_from_slice(&FLO_MAGIC);
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for (u, v) in flow.u().iter().zip(flow.v()) {
        out.extend_from_slice(&u.as_f32().to_le_bytes());
        out.extend_from_slice(&v.as_f32().to_le_bytes());
    }
    out
}

pub fn read_flo<T: Scalar>(bytes: &[u8]) -> Result<FlowField<T>> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err!(".flo header truncated ({} bytes)", bytes.len()));
    }
    if bytes[..4] != FLO_MAGIC {
        return Err(format_err!("bad .flo tag {:?}", String::from_utf8_lossy(&bytes[..4])));
    }
    let width = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if width <= 0 || height <= 0 {
        return Err(format_err!(".flo dimensions must be positive, got {width}x{height}"));
    }
    let n = (width as usize)
        .checked_mul(height as usize)
        .ok_or_else(|| format_err!(".flo dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < 8 * n {
        return Err(format_err!(".flo payload truncated: {} bytes, expected {}", payload.len(), 8 * n));
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for pair in payload[..8 * n].chunks_exact(8) {
        let a = f32::from_le_bytes(pair[..4].try_into().unwrap());
        let b = f32::from_le_bytes(pair[4..].try_into().unwrap());
        if !a.is_finite() || !b.is_finite() {
            return Err(format_err!(".flo contains non-finite displacement"));
        }
        u.push(T::of(a as f64));
        v.push(T::of(b as f64));
    }
    FlowField::new(width as usize, height as usize, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;

    #[test]
    fn tag_is_the_documented_float() {
        assert_eq!(f32::from_le_bytes(FLO_MAGIC), FLO_TAG_FLOAT);
    }

    #[test]
    fn minimal_field() {
        let f = FlowField::<f32>::zeros(1, 1).unwrap();
        let bytes = write_flo(&f);
        let mut expected = b"PIEH".to_vec();
        expected.extend_from_slice(&1i32.to_le_bytes());
        expected.extend_from_slice(&1i32.to_le_bytes());
        expected.extend_from_slice(&[0; 8]);
        assert_eq!(bytes, expected);
        assert_eq!(read_flo::<f32>(&bytes).unwrap(), f);
    }

    #[test]
    fn negative_cases() {
        let good = write_flo(&FlowField::<f32>::zeros(2, 2).unwrap());
        let mut bad_magic = good.clone();
        bad_magic[..4].copy_from_slice(b"XXXX");
        assert!(matches!(read_flo::<f32>(&bad_magic), Err(Error::Format(_))));
        assert!(matches!(read_flo::<f32>(&good[..good.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(read_flo::<f32>(&good[..6]), Err(Error::Format(_))));
        let mut zero_dim = good.clone();
        zero_dim[4..8].copy_from_slice(&0i32.to_le_bytes());
        assert!(matches!(read_flo::<f32>(&zero_dim), Err(Error::Format(_))));
        let mut negative = good;
        negative[8..12].copy_from_slice(&(-3i32).to_le_bytes());
        assert!(matches!(read_flo::<f32>(&negative), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(vals in proptest::collection::vec(-1e6f32..1e6, 70)) {
            let f = FlowField::new(7, 5, vals[..35].to_vec(), vals[35..].to_vec()).unwrap();
            let bytes = write_flo(&f);
            let back = read_flo::<f32>(&bytes).unwrap();
            let bits = |f: &FlowField<f32>| f.u().iter().chain(f.v()).map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&f));
            prop_assert_eq!(write_flo(&back), bytes);
        }
    }
}
