use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::afe::CentralValue;
use crate::error::{Error, Result};

/// Cache directory: `$TWISTLAB_CACHE_DIR`, else `$HOME/.cache/twistlab`,
/// else `.twistlab-cache`.
pub fn default_cache_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("TWISTLAB_CACHE_DIR") {
        return PathBuf::from(dir);
    }
    match std::env::var_os("HOME") {
        Some(home) => PathBuf::from(home).join(".cache").join("twistlab"),
        None => PathBuf::from(".twistlab-cache"),
    }
}

#[derive(Serialize, Deserialize)]
struct OnDisk {
    curve_hash: u64,
    eps: f64,
    truncation_scale: f64,
    values: Vec<CentralValue>,
}

/// Memoized central values for one curve and truncation setting, persisted
/// as JSON. One writer per file.
#[derive(Debug)]
pub struct LValueCache {
    path: PathBuf,
    curve_hash: u64,
    eps: f64,
    truncation_scale: f64,
    values: Mutex<BTreeMap<i64, CentralValue>>,
}

impl LValueCache {
    /// Opens (or starts) the cache file for the given key inside `dir`.
    pub fn open(dir: &Path, curve_hash: u64, eps: f64, truncation_scale: f64) -> Result<Self> {
        let name = format!(
            "lvalues-{curve_hash:016x}-{:016x}-{:016x}.json",
            eps.to_bits(),
            truncation_scale.to_bits()
        );
        let path = dir.join(name);
        let mut values = BTreeMap::new();
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::Cache(e.to_string()))?;
            let disk: OnDisk =
                serde_json::from_str(&text).map_err(|e| Error::Cache(e.to_string()))?;
            if disk.curve_hash == curve_hash
                && disk.eps == eps
                && disk.truncation_scale == truncation_scale
            {
                values = disk.values.into_iter().map(|v| (v.d, v)).collect();
            }
        }
        Ok(Self {
            path,
            curve_hash,
            eps,
            truncation_scale,
            values: Mutex::new(values),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, d: i64) -> Option<CentralValue> {
        self.values.lock().expect("cache lock").get(&d).copied()
    }

    pub fn len(&self) -> usize {
        self.values.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds values and rewrites the file atomically.
    pub fn insert_and_flush(&self, fresh: &[CentralValue]) -> Result<()> {
        let mut map = self.values.lock().expect("cache lock");
        for v in fresh {
            map.insert(v.d, *v);
        }
        let disk = OnDisk {
            curve_hash: self.curve_hash,
            eps: self.eps,
            truncation_scale: self.truncation_scale,
            values: map.values().copied().collect(),
        };
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::Cache(e.to_string()))?;
        }
        let tmp = self.path.with_extension("tmp");
        let text = serde_json::to_string(&disk).map_err(|e| Error::Cache(e.to_string()))?;
        fs::write(&tmp, text).map_err(|e| Error::Cache(e.to_string()))?;
        fs::rename(&tmp, &self.path).map_err(|e| Error::Cache(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::curve::{CoefficientTable, CurveModel};
    use crate::discriminants::{enumerate, TwistClass};
    use crate::lvalue::{LValueEngine, DEFAULT_EPS};

    #[test]
    fn warm_cache_reproduces_values_bit_for_bit() {
        let dir = tempfile::tempdir().unwrap();
        let e = CurveModel::congruent_number_curve();
        let c = TwistClass::new(1, 9, &e).unwrap();
        let table = Arc::new(
            CoefficientTable::build(
                &e,
                LValueEngine::required_table_size(&e, 3_000, DEFAULT_EPS, 1.0),
            )
            .unwrap(),
        );
        let eng = LValueEngine::new(&e, &c, table, DEFAULT_EPS).unwrap();
        let ds: Vec<i64> = enumerate(&c, 3_000, false).collect();
        let cold = LValueCache::open(dir.path(), e.hash(), DEFAULT_EPS, 1.0).unwrap();
        let first = eng.central_values(&ds, Some(&cold)).unwrap();
        assert_eq!(cold.len(), ds.len());
        let warm = LValueCache::open(dir.path(), e.hash(), DEFAULT_EPS, 1.0).unwrap();
        assert_eq!(warm.len(), ds.len());
        let second = eng.central_values(&ds, Some(&warm)).unwrap();
        assert_eq!(first, second);
        let other = LValueCache::open(dir.path(), e.hash(), DEFAULT_EPS, 2.0).unwrap();
        assert!(other.is_empty());
    }
}
