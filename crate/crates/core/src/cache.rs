//! Content-addressed result cache under `<root>/<version>/<hash>.bin`.
//!
//! Payloads are `f64` arrays stored bit-exactly with a SHA-256 trailer; an
//! entry that fails to decode is reported and treated as absent.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

/// Bump when the meaning of any cached payload changes.
pub const CACHE_VERSION: u32 = 1;

const MAGIC: &[u8; 4] = b"RGC\x01";

#[derive(Clone, Debug)]
pub struct Cache {
    root: PathBuf,
    version: u32,
}

/// Key from an ordered list of labelled parts.
pub fn cache_key(parts: &[(&str, &[u8])]) -> String {
    let mut h = Sha256::new();
    for (label, bytes) in parts {
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    crate::hamiltonian::hex(&h.finalize())
}

fn encode(payload: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * payload.len() + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    for x in payload {
        out.extend_from_slice(&x.to_bits().to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

fn decode(bytes: &[u8]) -> std::result::Result<Vec<f64>, &'static str> {
    if bytes.len() < 12 + 32 {
        return Err("truncated");
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err("checksum mismatch");
    }
    if &body[..4] != MAGIC {
        return Err("bad magic");
    }
    let n = u64::from_le_bytes(body[4..12].try_into().unwrap()) as usize;
    let data = &body[12..];
    if data.len() != 8 * n {
        return Err("length mismatch");
    }
    Ok(data
        .chunks_exact(8)
        .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
        .collect())
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self::with_version(root, CACHE_VERSION)
    }

    pub fn with_version(root: impl Into<PathBuf>, version: u32) -> Self {
        Cache {
            root: root.into(),
            version,
        }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.root
            .join(self.version.to_string())
            .join(format!("{key}.bin"))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn get(&self, key: &str) -> Option<Vec<f64>> {
        let path = self.path_for(key);
        let bytes = std::fs::read(&path).ok()?;
        match decode(&bytes) {
            Ok(v) => Some(v),
            Err(why) => {
                log::warn!("ignoring corrupt cache entry {}: {why}", path.display());
                None
            }
        }
    }

    /// Written through a temporary file so readers never see a partial entry.
    pub fn put(&self, key: &str, payload: &[f64]) -> Result<()> {
        let path = self.path_for(key);
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
        std::fs::write(&tmp, encode(payload))?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Cached value for `key`, computing and storing it on a miss.
    pub fn get_or_insert_with<F>(&self, key: &str, compute: F) -> Result<Vec<f64>>
    where
        F: FnOnce() -> Result<Vec<f64>>,
    {
        if let Some(v) = self.get(key) {
            return Ok(v);
        }
        let v = compute()?;
        self.put(key, &v)?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let payload = vec![0.1, -0.0, f64::MIN_POSITIVE, 1e300, f64::NAN];
        let key = cache_key(&[("g", &1.0f64.to_le_bytes())]);
        cache.put(&key, &payload).unwrap();
        let back = cache.get(&key).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&payload));
    }

    #[test]
    fn misses_on_changed_key_version_or_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path());
        let k1 = cache_key(&[("g", &1.0f64.to_le_bytes())]);
        let k2 = cache_key(&[("g", &0.44f64.to_le_bytes())]);
        assert_ne!(k1, k2);
        cache.put(&k1, &[1.0, 2.0]).unwrap();
        assert!(cache.get(&k2).is_none());
        assert!(Cache::with_version(dir.path(), CACHE_VERSION + 1)
            .get(&k1)
            .is_none());
        let path = cache.path_for(&k1);
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[14] ^= 0xff;
        std::fs::write(&path, bytes).unwrap();
        assert!(cache.get(&k1).is_none());
        let v = cache.get_or_insert_with(&k1, || Ok(vec![3.0])).unwrap();
        assert_eq!(v, vec![3.0]);
        assert_eq!(cache.get(&k1), Some(vec![3.0]));
    }
}
