//! Binary trace cache.
//!
//! Layout, all little-endian: 4-byte magic `TWL1`, `u64` curve hash,
//! `u64` p_max, then one `i64` trace per prime `p <= p_max` in increasing order.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::arith::primes_up_to;
use crate::error::{Error, Result};

pub const TRACE_CACHE_MAGIC: &[u8; 4] = b"TWL1";
const HEADER_LEN: usize = 4 + 8 + 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceCache {
    pub curve_hash: u64,
    pub p_max: u64,
    pub traces: Vec<i64>,
}

pub fn write_trace_cache(path: &Path, cache: &TraceCache) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Cache(e.to_string()))?;
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * cache.traces.len());
    buf.extend_from_slice(TRACE_CACHE_MAGIC);
    buf.extend_from_slice(&cache.curve_hash.to_le_bytes());
    buf.extend_from_slice(&cache.p_max.to_le_bytes());
    for t in &cache.traces {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    // write-then-rename keeps readers from seeing a partial file
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::Cache(e.to_string()))?;
    f.write_all(&buf).map_err(|e| Error::Cache(e.to_string()))?;
    fs::rename(&tmp, path).map_err(|e| Error::Cache(e.to_string()))
}

pub fn read_trace_cache(path: &Path) -> Result<TraceCache> {
    let bytes = fs::read(path).map_err(|e| Error::Cache(e.to_string()))?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != TRACE_CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let curve_hash = word(4);
    let p_max = word(12);
    let body = &bytes[HEADER_LEN..];
    if body.len() % 8 != 0 {
        return Err(Error::Cache("truncated body".into()));
    }
    let traces: Vec<i64> = body
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let expected = primes_up_to(p_max).len();
    if traces.len() != expected {
        return Err(Error::Cache(format!(
            "expected {expected} traces, found {}",
            traces.len()
        )));
    }
    Ok(TraceCache {
        curve_hash,
        p_max,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{CoefficientTable, CurveModel};

    #[test]
    fn header_layout_and_reuse() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traces.bin");
        let curve = CurveModel::congruent_number_curve();
        let built = CoefficientTable::build_cached(&curve, 1_000, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"TWL1");
        assert_eq!(
            u64::from_le_bytes(bytes[4..12].try_into().unwrap()),
            curve.hash()
        );
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 1_000);
        // first prime is 2 with the supplied trace 0, then A(3) = 0, A(5) = -2
        let first: Vec<i64> = bytes[20..44]
            .chunks(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        assert_eq!(first, vec![0, 0, -2]);

        let warm = CoefficientTable::build_cached(&curve, 500, &path).unwrap();
        for n in 1..=500 {
            assert_eq!(warm.trace(n), built.trace(n));
        }
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        fs::write(&path, b"NOPE0000000000000000").unwrap();
        assert!(read_trace_cache(&path).is_err());
    }
}
