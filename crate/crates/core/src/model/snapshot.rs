//! Parameter snapshot files.
//!
//! Layout (little-endian): three `u64` values `m, d, n`, followed by the
//! `q = m·d + d + (d+1)·n` parameters as `f64` in flat order. A single output
//! implies a sigmoid head; more than one implies softmax.

use std::path::Path;

use super::{NetworkSpec, PartitionedParams};
use crate::error::{Error, Result};

const HEADER_BYTES: usize = 24;

pub fn encode_snapshot(params: &PartitionedParams) -> Vec<u8> {
    let spec = params.spec();
    let mut out = Vec::with_capacity(HEADER_BYTES + 8 * params.len());
    for dim in [spec.inputs, spec.hidden, spec.outputs] {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for v in params.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<PartitionedParams> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::Snapshot(format!("file too short ({} bytes)", bytes.len())));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap()) as usize;
    let spec = NetworkSpec::from_dims(word(0), word(1), word(2));
    spec.validate()?;
    let body = &bytes[HEADER_BYTES..];
    if body.len() != 8 * spec.param_count() {
        return Err(Error::Snapshot(format!(
            "expected {} parameters, found {} bytes of payload",
            spec.param_count(),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PartitionedParams::from_flat(spec, values)
}

pub fn write_snapshot(path: impl AsRef<Path>, params: &PartitionedParams) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_snapshot(params)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<PartitionedParams> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes)
}
