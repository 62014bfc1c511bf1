//! Exact cosine-similarity index over unit vectors.
//!
//! Vectors live in one contiguous row-major buffer so a search is a single
//! linear dot-product scan. Removal swaps the last row into the freed slot,
//! which keeps the buffer dense without tombstones.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

pub const MAX_ID_BYTES: usize = 256;
pub const MAX_METADATA_ENTRIES: usize = 64;
pub const MAX_METADATA_FIELD_BYTES: usize = 4096;
/// Allowed deviation of a stored or query vector's norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-4;

pub type Metadata = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocStatus {
    Pending,
    FactChecked,
}

impl DocStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DocStatus::Pending => "pending",
            DocStatus::FactChecked => "fact_checked",
        }
    }
}

impl fmt::Display for DocStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pending" => Ok(DocStatus::Pending),
            "fact_checked" => Ok(DocStatus::FactChecked),
            other => Err(format!("unknown status `{other}` (expected pending or fact_checked)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentRecord {
    pub id: String,
    pub vector: Vec<f32>,
    pub text: String,
    pub status: DocStatus,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityHit {
    pub id: String,
    pub score: f64,
    pub text: String,
    pub status: DocStatus,
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub dim: usize,
    pub document_count: usize,
    pub fact_checked_count: usize,
    pub bytes_resident: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upsert {
    Inserted,
    Replaced,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("index dimension must be at least 1")]
    InvalidDimension,
    #[error("dimension mismatch: index has {expected}, vector has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector is not unit length (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("document id must not be empty")]
    EmptyId,
    #[error("document id is {0} bytes, limit is {MAX_ID_BYTES}")]
    IdTooLong(usize),
    #[error("invalid metadata: {0}")]
    InvalidMetadata(String),
}

#[derive(Debug, Clone)]
struct Slot {
    id: String,
    text: String,
    status: DocStatus,
    metadata: Metadata,
}

/// Borrowed view of a stored document.
#[derive(Debug, Clone, Copy)]
pub struct DocumentRef<'a> {
    pub id: &'a str,
    pub vector: &'a [f32],
    pub text: &'a str,
    pub status: DocStatus,
    pub metadata: &'a Metadata,
}

impl DocumentRef<'_> {
    pub fn to_record(&self) -> DocumentRecord {
        DocumentRecord {
            id: self.id.to_owned(),
            vector: self.vector.to_vec(),
            text: self.text.to_owned(),
            status: self.status,
            metadata: self.metadata.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Index {
    dim: usize,
    vectors: Vec<f32>,
    slots: Vec<Slot>,
    slot_of: HashMap<String, usize>,
    fact_checked: usize,
}

fn check_unit(vector: &[f32], dim: usize) -> Result<(), IndexError> {
    if vector.len() != dim {
        return Err(IndexError::DimensionMismatch { expected: dim, found: vector.len() });
    }
    let norm = linalg::norm(vector);
    if norm.is_nan() || (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(IndexError::NotNormalized { norm });
    }
    Ok(())
}

fn check_metadata(metadata: &Metadata) -> Result<(), IndexError> {
    if metadata.len() > MAX_METADATA_ENTRIES {
        return Err(IndexError::InvalidMetadata(format!(
            "{} entries, limit is {MAX_METADATA_ENTRIES}",
            metadata.len()
        )));
    }
    for (key, value) in metadata {
        if key.len() > MAX_METADATA_FIELD_BYTES || value.len() > MAX_METADATA_FIELD_BYTES {
            return Err(IndexError::InvalidMetadata(format!(
                "entry `{}` exceeds {MAX_METADATA_FIELD_BYTES} bytes",
                key.chars().take(32).collect::<String>()
            )));
        }
    }
    Ok(())
}

impl Index {
    pub fn new(dim: usize) -> Result<Self, IndexError> {
        if dim == 0 {
            return Err(IndexError::InvalidDimension);
        }
        Ok(Index { dim, vectors: Vec::new(), slots: Vec::new(), slot_of: HashMap::new(), fact_checked: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.slot_of.contains_key(id)
    }

    pub fn stats(&self) -> IndexStats {
        let strings: usize = self
            .slots
            .iter()
            .map(|s| 2 * s.id.len() + s.text.len() + s.metadata.iter().map(|(k, v)| k.len() + v.len()).sum::<usize>())
            .sum();
        let bytes_resident = self.vectors.capacity() * std::mem::size_of::<f32>()
            + self.slots.capacity() * std::mem::size_of::<Slot>()
            + self.slot_of.capacity() * (std::mem::size_of::<String>() + std::mem::size_of::<usize>())
            + strings;
        IndexStats {
            dim: self.dim,
            document_count: self.slots.len(),
            fact_checked_count: self.fact_checked,
            bytes_resident,
        }
    }

    /// Inserts a record, or atomically replaces every field of an existing one.
    pub fn upsert(&mut self, record: DocumentRecord) -> Result<Upsert, IndexError> {
        if record.id.is_empty() {
            return Err(IndexError::EmptyId);
        }
        if record.id.len() > MAX_ID_BYTES {
            return Err(IndexError::IdTooLong(record.id.len()));
        }
        if u32::try_from(record.text.len()).is_err() {
            return Err(IndexError::InvalidMetadata("text longer than 4 GiB".into()));
        }
        check_unit(&record.vector, self.dim)?;
        check_metadata(&record.metadata)?;

        let DocumentRecord { id, vector, text, status, metadata } = record;
        if status == DocStatus::FactChecked {
            self.fact_checked += 1;
        }
        match self.slot_of.get(&id) {
            Some(&slot) => {
                if self.slots[slot].status == DocStatus::FactChecked {
                    self.fact_checked -= 1;
                }
                self.vectors[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(&vector);
                self.slots[slot] = Slot { id, text, status, metadata };
                Ok(Upsert::Replaced)
            }
            None => {
                self.slot_of.insert(id.clone(), self.slots.len());
                self.vectors.extend_from_slice(&vector);
                self.slots.push(Slot { id, text, status, metadata });
                Ok(Upsert::Inserted)
            }
        }
    }

    /// Removes a document, moving the last row into its slot.
    pub fn remove(&mut self, id: &str) -> bool {
        let Some(slot) = self.slot_of.remove(id) else {
            return false;
        };
        let last = self.slots.len() - 1;
        if slot != last {
            self.vectors.copy_within(last * self.dim..(last + 1) * self.dim, slot * self.dim);
            self.slot_of.insert(self.slots[last].id.clone(), slot);
        }
        self.vectors.truncate(last * self.dim);
        let removed = self.slots.swap_remove(slot);
        if removed.status == DocStatus::FactChecked {
            self.fact_checked -= 1;
        }
        true
    }

    /// Changes a document's status in place. Returns the previous status.
    pub fn set_status(&mut self, id: &str, status: DocStatus) -> Option<DocStatus> {
        let slot = *self.slot_of.get(id)?;
        let previous = std::mem::replace(&mut self.slots[slot].status, status);
        match (previous, status) {
            (DocStatus::Pending, DocStatus::FactChecked) => self.fact_checked += 1,
            (DocStatus::FactChecked, DocStatus::Pending) => self.fact_checked -= 1,
            _ => {}
        }
        Some(previous)
    }

    pub fn get(&self, id: &str) -> Option<DocumentRef<'_>> {
        self.slot_of.get(id).map(|&slot| self.doc(slot))
    }

    fn doc(&self, slot: usize) -> DocumentRef<'_> {
        let s = &self.slots[slot];
        DocumentRef {
            id: &s.id,
            vector: &self.vectors[slot * self.dim..(slot + 1) * self.dim],
            text: &s.text,
            status: s.status,
            metadata: &s.metadata,
        }
    }

    /// Documents in storage order.
    pub fn iter(&self) -> impl Iterator<Item = DocumentRef<'_>> + '_ {
        (0..self.slots.len()).map(move |slot| self.doc(slot))
    }

    /// Exact top-`k` search by dot product against a unit query.
    ///
    /// Every hit has `score >= threshold` and passes `status_filter` when one is
    /// given. Order is descending score; ties go to the smaller id bytes.
    pub fn search(
        &self,
        query: &[f32],
        k: usize,
        threshold: f64,
        status_filter: Option<DocStatus>,
    ) -> Result<Vec<SimilarityHit>, IndexError> {
        check_unit(query, self.dim)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut candidates: Vec<(f64, usize)> = self
            .vectors
            .chunks_exact(self.dim)
            .enumerate()
            .filter(|(slot, _)| status_filter.is_none_or(|s| self.slots[*slot].status == s))
            .map(|(slot, row)| (linalg::dot(query, row).clamp(-1.0, 1.0), slot))
            .filter(|(score, _)| *score >= threshold)
            .collect();

        let rank = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then_with(|| self.slots[a.1].id.as_bytes().cmp(self.slots[b.1].id.as_bytes()))
        };
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, rank);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(rank);
        Ok(candidates
            .into_iter()
            .map(|(score, slot)| {
                let s = &self.slots[slot];
                SimilarityHit {
                    id: s.id.clone(),
                    score,
                    text: s.text.clone(),
                    status: s.status,
                    metadata: s.metadata.clone(),
                }
            })
            .collect())
    }
}
