//! `VSIX` snapshot files: the durable image of an [`Index`].
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "VSIX" 0x01                      magic + version
//! u32 dim, u64 record_count
//! per record:
//!   u16 id_len, id bytes
//!   u8 status                      0 = pending, 1 = fact_checked
//!   u32 text_len, text bytes
//!   u32 meta_len, metadata as JSON object with keys sorted bytewise
//!   dim x f32 vector
//! u32 CRC-32 (IEEE, reflected) of every preceding byte
//! ```

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::index::{DocStatus, DocumentRecord, Index, IndexError, Metadata};

pub const MAGIC: [u8; 4] = *b"VSIX";
pub const VERSION: u8 = 1;
/// Bytes before the first record.
pub const HEADER_LEN: usize = 4 + 1 + 4 + 8;
pub const CRC_LEN: usize = 4;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a VSIX snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    UnsupportedVersion(u8),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("snapshot is truncated")]
    TruncatedFile,
    #[error("corrupt record {record}: {reason}")]
    Corrupt { record: u64, reason: String },
    #[error("invalid record: {0}")]
    Index(#[from] IndexError),
}

/// Serializes the index into a byte buffer.
pub fn encode(index: &Index) -> Vec<u8> {
    let dim = index.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + CRC_LEN + index.len() * (dim * 4 + 64));
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for doc in index.iter() {
        // Length limits are enforced by `Index::upsert`.
        out.extend_from_slice(&(doc.id.len() as u16).to_le_bytes());
        out.extend_from_slice(doc.id.as_bytes());
        out.push(match doc.status {
            DocStatus::Pending => 0,
            DocStatus::FactChecked => 1,
        });
        out.extend_from_slice(&(doc.text.len() as u32).to_le_bytes());
        out.extend_from_slice(doc.text.as_bytes());
        let meta = serde_json::to_vec(doc.metadata).expect("string map serializes");
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        for v in doc.vector {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.buf.len() < n {
            return Err(SnapshotError::TruncatedFile);
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], SnapshotError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

/// Parses a snapshot. Checks, in order: magic, checksum, version.
pub fn decode(bytes: &[u8]) -> Result<Index, SnapshotError> {
    if bytes.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(bytes) { SnapshotError::TruncatedFile } else { SnapshotError::BadMagic });
    }
    if bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if bytes.len() < HEADER_LEN + CRC_LEN {
        return Err(SnapshotError::TruncatedFile);
    }
    let (body, trailer) = bytes.split_at(bytes.len() - CRC_LEN);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(SnapshotError::CrcMismatch { stored, computed });
    }
    if body[4] != VERSION {
        return Err(SnapshotError::UnsupportedVersion(body[4]));
    }

    let mut cur = Cursor { buf: &body[5..] };
    let dim = u32::from_le_bytes(cur.array()?) as usize;
    let count = u64::from_le_bytes(cur.array()?);
    let mut index = Index::new(dim)?;
    for record in 0..count {
        let corrupt = |reason: &str| SnapshotError::Corrupt { record, reason: reason.to_owned() };
        let id_len = u16::from_le_bytes(cur.array()?) as usize;
        let id = std::str::from_utf8(cur.take(id_len)?).map_err(|_| corrupt("id is not UTF-8"))?;
        let status = match cur.array::<1>()?[0] {
            0 => DocStatus::Pending,
            1 => DocStatus::FactChecked,
            _ => return Err(corrupt("unknown status byte")),
        };
        let text_len = u32::from_le_bytes(cur.array()?) as usize;
        let text = std::str::from_utf8(cur.take(text_len)?).map_err(|_| corrupt("text is not UTF-8"))?;
        let meta_len = u32::from_le_bytes(cur.array()?) as usize;
        let metadata: Metadata =
            serde_json::from_slice(cur.take(meta_len)?).map_err(|e| corrupt(&format!("metadata: {e}")))?;
        let raw = cur.take(dim.checked_mul(4).ok_or(SnapshotError::TruncatedFile)?)?;
        let vector = raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        if index.contains(id) {
            return Err(corrupt("duplicate id"));
        }
        index.upsert(DocumentRecord { id: id.to_owned(), vector, text: text.to_owned(), status, metadata })?;
    }
    if !cur.buf.is_empty() {
        return Err(SnapshotError::Corrupt { record: count, reason: "trailing bytes after last record".into() });
    }
    Ok(index)
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Writes the snapshot next to `path` and renames it into place, so readers
/// never observe a partially written file. Returns the number of bytes written.
pub fn save_snapshot(index: &Index, path: impl AsRef<Path>) -> Result<u64, SnapshotError> {
    let path = path.as_ref();
    let bytes = encode(index);
    let tmp = temp_path(path);
    let result = (|| {
        let mut file = File::create(&tmp)?;
        file.write_all(&bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(bytes.len() as u64)
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Index, SnapshotError> {
    decode(&fs::read(path)?)
}
