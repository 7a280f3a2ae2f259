//! Append-only result cache for computed constants.
//!
//! One JSON entry per line. Entries are only served after their stored
//! witness re-verifies (right length, zero-window-free), so a stale or
//! corrupt line can never produce a wrong answer; a malformed line
//! invalidates only itself.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::engine::{zero_window_free, Seq};
use crate::ring::WeightSet;
use crate::Result;

/// Environment variable naming the cache file.
pub const CACHE_ENV: &str = "WZS_CACHE";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub n: u64,
    pub weights: String,
    pub constant: u64,
    pub witness: Vec<u64>,
    pub timestamp: u64,
    pub version: String,
}

impl CacheEntry {
    pub fn new(n: u64, weights: &WeightSet, constant: u64, witness: &Seq) -> Self {
        CacheEntry {
            n,
            weights: weights.describe(),
            constant,
            witness: witness.terms().to_vec(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cache {
    path: PathBuf,
}

impl Cache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Cache { path: path.into() }
    }

    /// The cache named by `WZS_CACHE`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).map(|p| Cache::new(PathBuf::from(p)))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// The most recent entry for `(n, weights)` whose witness re-verifies.
    pub fn lookup(&self, n: u64, weights: &WeightSet) -> Option<CacheEntry> {
        let text = std::fs::read_to_string(&self.path).ok()?;
        let key = weights.describe();
        text.lines()
            .filter_map(|line| serde_json::from_str::<CacheEntry>(line).ok())
            .filter(|e| e.n == n && e.weights == key)
            .rev()
            .find(|e| self.verify(e, weights))
    }

    fn verify(&self, entry: &CacheEntry, weights: &WeightSet) -> bool {
        if entry.constant == 0 || entry.witness.len() as u64 != entry.constant - 1 {
            return false;
        }
        let Ok(witness) = Seq::new(entry.n, entry.witness.clone()) else {
            return false;
        };
        zero_window_free(&witness, weights).unwrap_or(false)
    }

    pub fn append(&self, entry: &CacheEntry) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let mut file = std::fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        let mut line = serde_json::to_string(entry)?;
        line.push('\n');
        file.write_all(line.as_bytes())?;
        Ok(())
    }
}
