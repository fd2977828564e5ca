//! Content-addressed result cache: one JSON file per result, keyed by a
//! hash of every input that affects the value. Corrupt entries are
//! recomputed, never trusted; writes go through a temporary file and a
//! rename, so concurrent invocations cannot observe partial results.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: PathBuf) -> Self {
        Cache { dir }
    }

    /// Where the entry for `key` lives: two-character fanout directory,
    /// then the full hash.
    fn entry_path(&self, key: &str) -> PathBuf {
        let digest = hex::encode(Sha256::digest(key.as_bytes()));
        self.dir.join(&digest[..2]).join(format!("{digest}.json"))
    }

    /// Fetch a previously stored JSON object, or `None` when the entry is
    /// missing or fails to parse.
    pub fn lookup(&self, key: &str) -> Option<serde_json::Value> {
        let text = fs::read_to_string(self.entry_path(key)).ok()?;
        let value: serde_json::Value = serde_json::from_str(&text).ok()?;
        value.is_object().then_some(value)
    }

    /// Store `document` under `key` atomically.
    pub fn store(&self, key: &str, document: &str) -> anyhow::Result<PathBuf> {
        let path = self.entry_path(key);
        atomic_write(&path, document.as_bytes())?;
        Ok(path)
    }
}

/// Write via a sibling temporary file plus rename. The temporary lives in
/// the destination directory so the rename never crosses filesystems.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&parent)
        .with_context(|| format!("creating {}", parent.display()))?;
    let mut temp = tempfile::NamedTempFile::new_in(&parent)
        .with_context(|| format!("creating a temporary file in {}", parent.display()))?;
    std::io::Write::write_all(&mut temp, bytes)?;
    temp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn store_then_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().to_path_buf());
        assert!(cache.lookup("a-key").is_none());
        cache.store("a-key", "{\"r\":1.0}\n").unwrap();
        let value = cache.lookup("a-key").unwrap();
        assert_eq!(value["r"].as_f64().unwrap(), 1.0);
        assert!(cache.lookup("another-key").is_none());
    }

    #[test]
    fn corrupt_entries_read_as_missing() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().to_path_buf());
        let path = cache.store("key", "{\"ok\":true}").unwrap();
        fs::write(&path, "{truncated").unwrap();
        assert!(cache.lookup("key").is_none());
        // non-object JSON is rejected too
        fs::write(&path, "42").unwrap();
        assert!(cache.lookup("key").is_none());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/deep/file.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
    }
}
