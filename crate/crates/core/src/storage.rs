//! Cloud-storage stand-in: an untrusted byte store for sealed envelopes and
//! ACL backups, plus the binary envelope codec.
//!
//! On-disk layout under `root`:
//!
//! ```text
//! objects/<key>      sealed envelopes
//! policy.json        live policy database
//! acl-backup.json    mirror of the policy database
//! ```
//!
//! Envelope layout, all integers big-endian:
//!
//! ```text
//! "IFSC" | version u8 | mode u8 | n u8 | symbol_width u8 | block_bytes u32 | plaintext_len u64 | payload
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::authz::PolicyDb;
use crate::cipher::{
    CipherEnvelope, CipherError, CipherMode, EnvelopeHeader, ENVELOPE_MAGIC, ENVELOPE_VERSION, HEADER_LEN,
};
use crate::hash::fnv1a64_parts;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("bad envelope header: {0}")]
    BadHeader(&'static str),
    #[error("envelope truncated: payload needs {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("object {0} not found")]
    NotFound(String),
    #[error("invalid object key {0:?}")]
    InvalidKey(String),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed policy database: {0}")]
    Json(#[from] serde_json::Error),
    #[error("inconsistent policy database: {0}")]
    Integrity(String),
}

impl From<CipherError> for StorageError {
    fn from(err: CipherError) -> Self {
        match err {
            CipherError::BadHeader(msg) => StorageError::BadHeader(msg),
            _ => StorageError::BadHeader("invalid header fields"),
        }
    }
}

pub fn encode_envelope(envelope: &CipherEnvelope) -> Vec<u8> {
    let h = &envelope.header;
    let mut out = Vec::with_capacity(HEADER_LEN + envelope.payload.len());
    out.extend_from_slice(&ENVELOPE_MAGIC);
    out.push(ENVELOPE_VERSION);
    out.push(h.mode.tag());
    out.push(h.n);
    out.push(h.symbol_width);
    out.extend_from_slice(&h.block_bytes.to_be_bytes());
    out.extend_from_slice(&h.plaintext_len.to_be_bytes());
    out.extend_from_slice(&envelope.payload);
    out
}

/// Rejects bad magic, unknown versions, out-of-range header fields, and
/// payloads that disagree with `plaintext_len * symbol_width`.
pub fn decode_envelope(bytes: &[u8]) -> Result<CipherEnvelope, StorageError> {
    if bytes.len() < HEADER_LEN {
        return Err(StorageError::BadHeader("shorter than the fixed header"));
    }
    if bytes[..4] != ENVELOPE_MAGIC {
        return Err(StorageError::BadHeader("bad magic"));
    }
    if bytes[4] != ENVELOPE_VERSION {
        return Err(StorageError::BadHeader("unsupported version"));
    }
    let mode = CipherMode::from_tag(bytes[5]).ok_or(StorageError::BadHeader("unknown mode"))?;
    let header = EnvelopeHeader {
        mode,
        n: bytes[6],
        symbol_width: bytes[7],
        block_bytes: u32::from_be_bytes(bytes[8..12].try_into().expect("4 bytes")),
        plaintext_len: u64::from_be_bytes(bytes[12..20].try_into().expect("8 bytes")),
    };
    header.validate()?;
    let payload = &bytes[HEADER_LEN..];
    let expected = header
        .plaintext_len
        .checked_mul(u64::from(header.symbol_width))
        .ok_or(StorageError::BadHeader("declared length overflows"))?;
    let actual = payload.len() as u64;
    if actual < expected {
        return Err(StorageError::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(StorageError::BadHeader("trailing bytes after payload"));
    }
    Ok(CipherEnvelope {
        header,
        payload: payload.to_vec(),
    })
}

/// Content-addressed key: `hex(fnv1a64(file_id || version_be))`.
pub fn object_key(file_id: &str, version: u32) -> String {
    format!("{:016x}", fnv1a64_parts(&[file_id.as_bytes(), &version.to_be_bytes()]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub key: String,
    pub length: u64,
}

pub const POLICY_FILE: &str = "policy.json";
pub const ACL_BACKUP_FILE: &str = "acl-backup.json";

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Writes through a uniquely named temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StorageError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("object");
    let tmp = dir.join(format!(
        ".{name}.{}.{}.tmp",
        std::process::id(),
        TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

#[derive(Debug, Clone)]
pub struct ObjectStore {
    root: PathBuf,
}

impl ObjectStore {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let root = root.into();
        let objects = root.join("objects");
        fs::create_dir_all(&objects).map_err(io_err(&objects))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn object_path(&self, key: &str) -> Result<PathBuf, StorageError> {
        let valid = !key.is_empty()
            && key != "."
            && key != ".."
            && key
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
        if !valid {
            return Err(StorageError::InvalidKey(key.to_owned()));
        }
        Ok(self.root.join("objects").join(key))
    }

    pub fn put_object(&self, key: &str, bytes: &[u8]) -> Result<Receipt, StorageError> {
        let path = self.object_path(key)?;
        write_atomic(&path, bytes)?;
        Ok(Receipt {
            key: key.to_owned(),
            length: bytes.len() as u64,
        })
    }

    pub fn get_object(&self, key: &str) -> Result<Vec<u8>, StorageError> {
        let path = self.object_path(key)?;
        match fs::read(&path) {
            Ok(bytes) => Ok(bytes),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StorageError::NotFound(key.to_owned())),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    /// Keys of every stored object.
    pub fn keys(&self) -> Result<Vec<String>, StorageError> {
        let dir = self.root.join("objects");
        let mut keys = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let entry = entry.map_err(io_err(&dir))?;
            if let Some(name) = entry.file_name().to_str() {
                if !name.starts_with('.') {
                    keys.push(name.to_owned());
                }
            }
        }
        keys.sort();
        Ok(keys)
    }

    pub fn put_envelope(&self, key: &str, envelope: &CipherEnvelope) -> Result<Receipt, StorageError> {
        self.put_object(key, &encode_envelope(envelope))
    }

    pub fn get_envelope(&self, key: &str) -> Result<CipherEnvelope, StorageError> {
        decode_envelope(&self.get_object(key)?)
    }

    pub fn acl_backup_path(&self) -> PathBuf {
        self.root.join(ACL_BACKUP_FILE)
    }

    pub fn default_policy_path(&self) -> PathBuf {
        self.root.join(POLICY_FILE)
    }

    /// Mirrors the policy database into `acl-backup.json`.
    pub fn backup_policy(&self, db: &PolicyDb) -> Result<(), StorageError> {
        save_policy(&self.acl_backup_path(), db)
    }

    pub fn load_acl_backup(&self) -> Result<PolicyDb, StorageError> {
        load_policy(&self.acl_backup_path())
    }
}

pub fn save_policy(path: &Path, db: &PolicyDb) -> Result<(), StorageError> {
    let json = serde_json::to_vec_pretty(db)?;
    write_atomic(path, &json)
}

pub fn load_policy(path: &Path) -> Result<PolicyDb, StorageError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let db: PolicyDb = serde_json::from_slice(&bytes)?;
    db.check_integrity().map_err(StorageError::Integrity)?;
    Ok(db)
}
