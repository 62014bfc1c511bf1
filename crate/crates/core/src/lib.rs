//! Claim matching over pretrained word embeddings.
//!
//! The crate is organised bottom-up:
//!
//! - [`embedding`]: word2vec models in binary or text format, with
//!   nearest-word queries and 3CosAdd analogies on top.
//! - [`vectorizer`]: tokenization and mean-of-word-vectors document embedding.
//! - [`index`]: an exact, contiguous dot-product index over unit vectors.
//! - [`snapshot`]: the durable `VSIX` on-disk image of an index.

pub mod embedding;
pub mod index;
pub mod snapshot;
pub mod vectorizer;

mod linalg;

pub use embedding::{cosine, EmbeddingModel, ModelError, ModelFormat, ScoredWord};
pub use index::{DocStatus, DocumentRecord, Index, IndexError, IndexStats, SimilarityHit, Upsert};
pub use snapshot::{load_snapshot, save_snapshot, SnapshotError};
pub use vectorizer::{embed_text, tokenize, DocumentVector, EmbedError, TokenizerConfig};
