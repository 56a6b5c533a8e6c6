//! Content-addressed record store with atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use mqb_core::comparison::RunErrors;
use mqb_core::pipeline::{PointKey, PointStore, Producer};
use mqb_core::CODE_VERSION;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Serialize, Deserialize)]
struct Entry<K, V> {
    code_version: String,
    key: K,
    value: V,
}

/// Records keyed by the SHA-256 of their JSON key material and the code version.
///
/// Key material must carry everything the value depends on, tolerances included.
#[derive(Debug)]
pub struct ResultCache {
    dir: Option<PathBuf>,
    computed: AtomicUsize,
    hits: AtomicUsize,
}

impl ResultCache {
    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: Some(dir.as_ref().to_path_buf()),
            computed: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        })
    }

    /// Computes everything and stores nothing.
    pub fn disabled() -> Self {
        Self {
            dir: None,
            computed: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn key<K: Serialize>(material: &K) -> String {
        let body = serde_json::to_vec(&(CODE_VERSION, material)).expect("key material serializes");
        hex::encode(Sha256::digest(&body))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        Some(self.dir.as_ref()?.join(&key[..2]).join(format!("{key}.json")))
    }

    /// Producer calls so far.
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::SeqCst)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn get_or_compute<K, V, E>(&self, material: &K, producer: impl FnOnce() -> Result<V, E>) -> Result<V, E>
    where
        K: Serialize + DeserializeOwned + PartialEq,
        V: Serialize + DeserializeOwned,
    {
        let key = Self::key(material);
        let Some(path) = self.path(&key) else {
            self.computed.fetch_add(1, Ordering::SeqCst);
            return producer();
        };
        if let Some(v) = self.read::<K, V>(&path, material) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(v);
        }
        self.computed.fetch_add(1, Ordering::SeqCst);
        let value = producer()?;
        let entry = Entry {
            code_version: CODE_VERSION.to_string(),
            key: material,
            value: &value,
        };
        if let Err(e) = write_atomic(&path, &serde_json::to_vec(&entry).expect("record serializes")) {
            log::warn!("could not store cache entry {}: {e}", path.display());
        }
        Ok(value)
    }

    fn read<K, V>(&self, path: &Path, material: &K) -> Option<V>
    where
        K: DeserializeOwned + PartialEq,
        V: DeserializeOwned,
    {
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                log::warn!("unreadable cache entry {}: {e}; recomputing", path.display());
                return None;
            }
        };
        match serde_json::from_slice::<Entry<K, V>>(&bytes) {
            Ok(entry) if entry.code_version == CODE_VERSION && &entry.key == material => Some(entry.value),
            Ok(_) => {
                log::warn!("cache entry {} does not match its key; recomputing", path.display());
                None
            }
            Err(e) => {
                log::warn!("corrupt cache entry {}: {e}; recomputing", path.display());
                None
            }
        }
    }
}

/// Writes a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PointMaterial {
    record: String,
    point: PointKey,
}

impl PointStore for ResultCache {
    fn get_or_compute(&self, key: &PointKey, producer: &Producer<'_>) -> mqb_core::Result<RunErrors> {
        let material = PointMaterial {
            record: "run_errors".into(),
            point: key.clone(),
        };
        ResultCache::get_or_compute(self, &material, producer)
    }
}
