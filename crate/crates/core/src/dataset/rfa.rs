//! RFA, the raw field array exchange format.
//!
//! A file is the ASCII magic `RFA1\n`, one JSON header line
//! `{"shape":[..],"dtype":"f32le","order":"row-major","dx":..,"origin":[..]}\n`,
//! and the node values as little-endian `f32` in row-major order. Values are
//! stored in single precision, so writing an `f64` field rounds it once;
//! fields that already hold `f32` values round-trip exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, ScalarField};

pub const MAGIC: &[u8] = b"RFA1\n";
const DTYPE: &str = "f32le";
const ORDER: &str = "row-major";

#[derive(Serialize, Deserialize)]
struct Header {
    shape: Vec<usize>,
    dtype: String,
    order: String,
    dx: f64,
    origin: Vec<f64>,
}

/// Serializes a field to bytes.
pub fn encode(field: &ScalarField) -> Vec<u8> {
    let g = field.geometry();
    let header = Header {
        shape: g.shape().to_vec(),
        dtype: DTYPE.into(),
        order: ORDER.into(),
        dx: g.spacing(),
        origin: g.origin().to_vec(),
    };
    let json = serde_json::to_string(&header).expect("header serializes");
    let mut out = Vec::with_capacity(MAGIC.len() + json.len() + 1 + 4 * field.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(json.as_bytes());
    out.push(b'\n');
    for &v in field.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

/// Parses bytes produced by [`encode`]; `path` only labels errors.
pub fn decode(bytes: &[u8], path: Option<&Path>) -> Result<ScalarField> {
    let fail = |reason: String| Error::format(path, reason);
    let rest = bytes
        .strip_prefix(MAGIC)
        .ok_or_else(|| fail("missing RFA1 magic".into()))?;
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| fail("unterminated header".into()))?;
    let header: Header = serde_json::from_slice(&rest[..end])
        .map_err(|e| fail(format!("bad header: {e}")))?;
    if header.dtype != DTYPE || header.order != ORDER {
        return Err(fail(format!(
            "unsupported layout {}/{}",
            header.dtype, header.order
        )));
    }
    let geometry = GridGeometry::with_origin(&header.shape, header.dx, &header.origin)
        .map_err(|e| fail(format!("bad geometry: {e}")))?;
    let payload = &rest[end + 1..];
    let expected = geometry.node_count() * 4;
    if payload.len() != expected {
        return Err(fail(format!(
            "payload has {} bytes, shape {:?} needs {expected}",
            payload.len(),
            header.shape
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect::<Vec<_>>();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(fail(format!("non-finite value at node {i}")));
    }
    ScalarField::new(geometry, values)
}

pub fn write(field: &ScalarField, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode(field)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<ScalarField> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, Some(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_field_round_trips_bit_for_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = GridGeometry::with_origin(&[128, 128], 0.37, &[-1.5, 2.25]).unwrap();
        let values = (0..128 * 128)
            .map(|_| rng.gen_range(-50.0f32..50.0) as f64)
            .collect();
        let field = ScalarField::new(g, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.rfa");
        write(&field, &path).unwrap();
        let back = read(&path).unwrap();
        assert_eq!(back.geometry(), field.geometry());
        for (a, b) in back.values().iter().zip(field.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn header_and_payload_sizes_for_a_cube() {
        let g = GridGeometry::new(&[64, 64, 64], 1.0).unwrap();
        let bytes = encode(&ScalarField::filled(g, 0.5).unwrap());
        let text = String::from_utf8_lossy(&bytes[..200]).into_owned();
        let line = text.lines().nth(1).unwrap();
        let header: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(header["shape"], serde_json::json!([64, 64, 64]));
        assert_eq!(header["dtype"], "f32le");
        assert_eq!(header["order"], "row-major");
        assert_eq!(bytes.len(), MAGIC.len() + line.len() + 1 + 64 * 64 * 64 * 4);
        assert!(line.starts_with(r#"{"shape":[64,64,64],"dtype":"f32le","order":"row-major","dx":1.0,"origin":["#));
    }

    #[test]
    fn malformed_files_are_rejected() {
        let g = GridGeometry::new(&[8, 8], 1.0).unwrap();
        let good = encode(&ScalarField::filled(g, 1.0).unwrap());
        let truncated = &good[..good.len() - 3];
        let mut padded = good.clone();
        padded.push(0);
        let mut bad_magic = good.clone();
        bad_magic[3] = b'2';
        let mut non_finite = good.clone();
        let n = non_finite.len();
        non_finite[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        let wrong_dtype = String::from_utf8_lossy(&good)
            .replace("f32le", "f64le")
            .into_bytes();
        for bytes in [truncated, &padded, &bad_magic, &non_finite, &wrong_dtype, b"RFA1\n{}"] {
            assert!(matches!(decode(bytes, None), Err(Error::Format { .. })));
        }
        assert!(decode(&good, None).is_ok());
    }

    #[test]
    fn doubles_are_rounded_once() {
        let g = GridGeometry::new(&[4, 4], 0.1).unwrap();
        let field = ScalarField::filled(g, 0.1).unwrap();
        let once = decode(&encode(&field), None).unwrap();
        assert_eq!(once.at(0), 0.1f32 as f64);
        assert_eq!(encode(&once), encode(&field));
    }
}
