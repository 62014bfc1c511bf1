//! Pretrained word-embedding models and vector-space queries.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::linalg;

pub mod word2vec;

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed header, expected `<vocab_size> <dim>`: {0:?}")]
    MalformedHeader(String),
    #[error("truncated file: header promises {expected} rows, found {read}")]
    TruncatedFile { expected: usize, read: usize },
    #[error("duplicate word `{0}`")]
    DuplicateWord(String),
    #[error("zero vector: {0}")]
    ZeroVector(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid word in row {row}: {reason}")]
    InvalidWord { row: usize, reason: String },
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("unknown word `{0}`")]
    UnknownWord(String),
}

/// On-disk model encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelFormat {
    Binary,
    Text,
    /// Sniff the body after the header.
    #[default]
    Auto,
}

impl FromStr for ModelFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" | "bin" => Ok(ModelFormat::Binary),
            "text" | "txt" => Ok(ModelFormat::Text),
            "auto" => Ok(ModelFormat::Auto),
            other => Err(format!("unknown model format `{other}` (expected binary, text or auto)")),
        }
    }
}

impl fmt::Display for ModelFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFormat::Binary => "binary",
            ModelFormat::Text => "text",
            ModelFormat::Auto => "auto",
        })
    }
}

/// A word with its cosine similarity to some query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredWord {
    pub word: String,
    pub score: f64,
}

/// An immutable vocabulary of unit-length word vectors.
///
/// Rows are L2-normalized when the model is built, so the cosine between two
/// rows is their dot product. The raw magnitudes from the file are discarded.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<f32>,
    word_index: HashMap<String, usize>,
}

impl EmbeddingModel {
    /// Builds a model from row-major raw vectors, normalizing each row.
    pub fn from_rows(words: Vec<String>, vectors: Vec<f32>, dim: usize) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::MalformedHeader("dimension must be positive".into()));
        }
        if words.is_empty() {
            return Err(ModelError::MalformedHeader("vocabulary must not be empty".into()));
        }
        if vectors.len() != words.len() * dim {
            return Err(ModelError::DimensionMismatch { expected: words.len() * dim, found: vectors.len() });
        }
        let mut word_index = HashMap::with_capacity(words.len());
        for (row, word) in words.iter().enumerate() {
            if word_index.insert(word.clone(), row).is_some() {
                return Err(ModelError::DuplicateWord(word.clone()));
            }
        }
        let mut normalized = Vec::with_capacity(vectors.len());
        for (word, row) in words.iter().zip(vectors.chunks_exact(dim)) {
            let norm = linalg::norm(row);
            if norm.is_nan() || norm < ZERO_NORM || norm.is_infinite() {
                return Err(ModelError::ZeroVector(format!("row for word `{word}` has norm {norm:e}")));
            }
            normalized.extend(linalg::normalized(row, norm));
        }
        Ok(EmbeddingModel { dim, words, vectors: normalized, word_index })
    }

    /// Loads a model file in the given format.
    pub fn load(path: impl AsRef<Path>, format: ModelFormat) -> Result<Self, ModelError> {
        let file = File::open(path)?;
        Self::read(BufReader::with_capacity(1 << 16, file), format)
    }

    pub fn read<R: io::BufRead>(reader: R, format: ModelFormat) -> Result<Self, ModelError> {
        let raw = word2vec::read_rows(reader, format)?;
        Self::from_rows(raw.words, raw.vectors, raw.dim)
    }

    /// Reads only the `(vocab_size, dim)` header of a model file.
    pub fn read_header(path: impl AsRef<Path>) -> Result<(usize, usize), ModelError> {
        let mut reader = BufReader::new(File::open(path)?);
        word2vec::read_header(&mut reader)
    }

    /// Writes the (normalized) model. [`ModelFormat::Auto`] writes binary.
    pub fn save(&self, path: impl AsRef<Path>, format: ModelFormat) -> Result<(), ModelError> {
        let out = BufWriter::new(File::create(path)?);
        match format {
            ModelFormat::Text => word2vec::write_text(out, &self.words, &self.vectors, self.dim)?,
            _ => word2vec::write_binary(out, &self.words, &self.vectors, self.dim)?,
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Row-major normalized vectors, `vocab_size * dim` values.
    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn row(&self, index: usize) -> &[f32] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn row_of(&self, token: &str) -> Option<usize> {
        self.word_index.get(token).copied()
    }

    /// Exact-match lookup of a token's normalized vector.
    pub fn lookup(&self, token: &str) -> Option<&[f32]> {
        self.row_of(token).map(|row| self.row(row))
    }

    /// The `k` vocabulary words most similar to `query`, skipping `exclude`.
    ///
    /// Results are sorted by descending cosine; equal scores keep vocabulary
    /// order.
    pub fn nearest_words(&self, query: &[f32], k: usize, exclude: &[&str]) -> Result<Vec<ScoredWord>, ModelError> {
        if query.len() != self.dim {
            return Err(ModelError::DimensionMismatch { expected: self.dim, found: query.len() });
        }
        let query_norm = linalg::norm(query);
        if query_norm.is_nan() || query_norm < ZERO_NORM {
            return Err(ModelError::ZeroVector("query".into()));
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let excluded: HashSet<usize> = exclude.iter().filter_map(|w| self.row_of(w)).collect();
        let mut scored: Vec<(f64, usize)> = self
            .vectors
            .chunks_exact(self.dim)
            .enumerate()
            .filter(|(row, _)| !excluded.contains(row))
            .map(|(row, v)| ((linalg::dot(query, v) / query_norm).clamp(-1.0, 1.0), row))
            .collect();
        let by_rank = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_rank);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_rank);
        Ok(scored.into_iter().map(|(score, row)| ScoredWord { word: self.words[row].clone(), score }).collect())
    }

    /// Solves `a : b :: c : ?` with 3CosAdd: ranks the vocabulary against
    /// `vec(b) - vec(a) + vec(c)`, never returning an input word.
    pub fn analogy(&self, a: &str, b: &str, c: &str, k: usize) -> Result<Vec<ScoredWord>, ModelError> {
        let lookup = |w: &str| self.lookup(w).ok_or_else(|| ModelError::UnknownWord(w.to_owned()));
        let (va, vb, vc) = (lookup(a)?, lookup(b)?, lookup(c)?);
        let target: Vec<f32> = va
            .iter()
            .zip(vb)
            .zip(vc)
            .map(|((&a, &b), &c)| (f64::from(b) - f64::from(a) + f64::from(c)) as f32)
            .collect();
        let target_norm = linalg::norm(&target);
        if target_norm.is_nan() || target_norm < ZERO_NORM {
            return Err(ModelError::ZeroVector(format!("analogy target {b} - {a} + {c}")));
        }
        self.nearest_words(&target, k, &[a, b, c])
    }
}

/// Cosine similarity `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, ModelError> {
    if u.len() != v.len() {
        return Err(ModelError::DimensionMismatch { expected: u.len(), found: v.len() });
    }
    let (nu, nv) = (linalg::norm(u), linalg::norm(v));
    if nu.is_nan() || nv.is_nan() || nu < ZERO_NORM || nv < ZERO_NORM {
        return Err(ModelError::ZeroVector("cosine operand".into()));
    }
    Ok((linalg::dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}
