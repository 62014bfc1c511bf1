//! The claim-matching workflow, independent of any transport.
//!
//! New items are vectorized and stored. A pending item is compared against
//! every fact-checked item, and each close match becomes a pending
//! [`Suggestion`] that a person later confirms or dismisses. All state changes
//! are journaled; the index itself is persisted by periodic snapshots and
//! rebuilt on boot from snapshot plus journal.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock, RwLockReadGuard, RwLockWriteGuard};

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;
use vsim_core::index::{DocumentRef, Metadata};
use vsim_core::{
    embed_text, load_snapshot, save_snapshot, DocStatus, DocumentRecord, DocumentVector, EmbedError, EmbeddingModel,
    Index, IndexError, IndexStats, SimilarityHit, SnapshotError, TokenizerConfig,
};

use crate::config::MatchSettings;
use crate::journal::{self, Event, Journal, JournalError};
use crate::suggestions::{DecisionKind, StateCounts, Suggestion, SuggestionState, SuggestionStore};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    InvalidInput(String),
    #[error("item `{0}` already exists")]
    DuplicateId(String),
    #[error("text cannot be vectorized: {0}")]
    Unvectorizable(EmbedError),
    #[error("model produces {model}-dimensional vectors but the index stores {index}")]
    DimensionMismatch { model: usize, index: usize },
    #[error("{kind} `{id}` not found")]
    NotFound { kind: &'static str, id: String },
    #[error("suggestion `{id}` was already {state}")]
    AlreadyDecided { id: String, state: SuggestionState },
    #[error("illegal status transition {from} -> {to}")]
    IllegalTransition { from: DocStatus, to: DocStatus },
    #[error("storage failure: {0}")]
    Storage(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::InvalidInput(_) => "BadRequest",
            ServiceError::DuplicateId(_) => "DuplicateId",
            ServiceError::Unvectorizable(_) => "Unvectorizable",
            ServiceError::DimensionMismatch { .. } => "DimensionMismatch",
            ServiceError::NotFound { .. } => "NotFound",
            ServiceError::AlreadyDecided { .. } => "AlreadyDecided",
            ServiceError::IllegalTransition { .. } => "IllegalTransition",
            ServiceError::Storage(_) => "StorageError",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self {
            ServiceError::InvalidInput(_) => 400,
            ServiceError::NotFound { .. } => 404,
            ServiceError::DuplicateId(_)
            | ServiceError::AlreadyDecided { .. }
            | ServiceError::IllegalTransition { .. } => 409,
            ServiceError::Unvectorizable(_) => 422,
            ServiceError::DimensionMismatch { .. } | ServiceError::Storage(_) => 500,
        }
    }
}

impl From<JournalError> for ServiceError {
    fn from(e: JournalError) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

fn index_error(e: IndexError) -> ServiceError {
    match e {
        IndexError::DimensionMismatch { expected, found } => {
            ServiceError::DimensionMismatch { model: found, index: expected }
        }
        other => ServiceError::InvalidInput(other.to_string()),
    }
}

#[derive(Debug, Error)]
pub enum BootError {
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("cannot load index snapshot: {0}")]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("model produces {model}-dimensional vectors but the index stores {index}")]
    DimensionMismatch { model: usize, index: usize },
    #[error("journal replay failed at event {event}: {reason}")]
    Replay { event: usize, reason: String },
}

/// A stored text as exposed by the API.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TextItem {
    pub id: String,
    pub text: String,
    pub status: DocStatus,
    pub metadata: Metadata,
    /// Absent for items bulk-loaded straight into the snapshot.
    pub created_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone)]
pub struct NewText {
    pub id: String,
    pub text: String,
    pub status: DocStatus,
    pub metadata: Metadata,
}

#[derive(Debug, Clone)]
pub struct Submission {
    pub item: TextItem,
    pub suggestions: Vec<Suggestion>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimilarQuery {
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub status: Option<DocStatus>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ServiceStats {
    #[serde(flatten)]
    pub index: IndexStats,
    pub suggestions: StateCounts,
}

#[derive(Debug)]
struct Items {
    index: Index,
    created_at: HashMap<String, DateTime<Utc>>,
}

impl Items {
    fn item(&self, doc: DocumentRef<'_>) -> TextItem {
        TextItem {
            id: doc.id.to_owned(),
            text: doc.text.to_owned(),
            status: doc.status,
            metadata: doc.metadata.clone(),
            created_at: self.created_at.get(doc.id).copied(),
        }
    }
}

#[derive(Debug)]
pub struct Service {
    model: Arc<EmbeddingModel>,
    tokenizer: TokenizerConfig,
    settings: MatchSettings,
    // Lock order: items, then suggestions. The journal has its own lock.
    items: RwLock<Items>,
    suggestions: Mutex<SuggestionStore>,
    journal: Journal,
    dirty: AtomicBool,
}

impl Service {
    /// Loads the snapshot (if present) and replays the journal on top of it.
    pub fn open(model: Arc<EmbeddingModel>, settings: MatchSettings) -> Result<Service, BootError> {
        settings.validate().map_err(BootError::Settings)?;
        let index = if settings.index_path.exists() {
            load_snapshot(&settings.index_path)?
        } else {
            Index::new(model.dim()).map_err(|e| BootError::Settings(e.to_string()))?
        };
        if index.dim() != model.dim() {
            return Err(BootError::DimensionMismatch { model: model.dim(), index: index.dim() });
        }
        let (journal, events) = Journal::open(&settings.journal_path)?;
        let service = Service {
            model,
            tokenizer: TokenizerConfig::default(),
            settings,
            items: RwLock::new(Items { index, created_at: HashMap::new() }),
            suggestions: Mutex::new(SuggestionStore::default()),
            journal,
            dirty: AtomicBool::new(false),
        };
        let replayed = events.len();
        for (n, (event, _)) in events.into_iter().enumerate() {
            service.replay(event).map_err(|reason| BootError::Replay { event: n + 1, reason })?;
        }
        if replayed > 0 {
            tracing::info!(events = replayed, "replayed journal");
        }
        Ok(service)
    }

    // Replaying from an older snapshot is idempotent: the snapshot only saves
    // re-embedding texts it already holds.
    fn replay(&self, event: Event) -> Result<(), String> {
        match event {
            Event::ItemCreated(e) => {
                let mut items = self.items_mut();
                let cached = items.index.get(&e.id).filter(|d| d.text == e.text).map(|d| d.vector.to_vec());
                let vector = match cached {
                    Some(v) => v,
                    None => embed_text(&self.model, &e.text, &self.tokenizer).map_err(|err| err.to_string())?.values,
                };
                let record =
                    DocumentRecord { id: e.id.clone(), vector, text: e.text, status: e.status, metadata: e.metadata };
                items.index.upsert(record).map_err(|err| err.to_string())?;
                items.created_at.insert(e.id, e.created_at);
                self.dirty.store(true, Ordering::Release);
            }
            Event::StatusUpdated(e) => {
                self.items_mut().index.set_status(&e.id, e.status);
                self.dirty.store(true, Ordering::Release);
            }
            Event::ItemDeleted(e) => {
                let mut items = self.items_mut();
                items.index.remove(&e.id);
                items.created_at.remove(&e.id);
                self.dirty.store(true, Ordering::Release);
            }
            Event::SuggestionCreated(s) => self.suggestions_lock().insert(s),
            Event::Decision(d) => {
                let mut store = self.suggestions_lock();
                let s =
                    store.get_mut(&d.suggestion_id).ok_or_else(|| format!("unknown suggestion {}", d.suggestion_id))?;
                s.state = d.state;
                s.decided_at = Some(d.decided_at);
            }
        }
        Ok(())
    }

    fn items(&self) -> RwLockReadGuard<'_, Items> {
        self.items.read().unwrap_or_else(|e| e.into_inner())
    }

    fn items_mut(&self) -> RwLockWriteGuard<'_, Items> {
        self.items.write().unwrap_or_else(|e| e.into_inner())
    }

    fn suggestions_lock(&self) -> MutexGuard<'_, SuggestionStore> {
        self.suggestions.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    pub fn settings(&self) -> &MatchSettings {
        &self.settings
    }

    fn vectorize(&self, text: &str) -> Result<DocumentVector, ServiceError> {
        embed_text(&self.model, text, &self.tokenizer).map_err(ServiceError::Unvectorizable)
    }

    /// Stores a new item. Pending items get one suggestion per sufficiently
    /// similar fact-checked item; fact-checked items only become targets.
    pub fn submit_text(&self, new: NewText) -> Result<Submission, ServiceError> {
        if new.id.is_empty() {
            return Err(ServiceError::InvalidInput("id must not be empty".into()));
        }
        let vector = self.vectorize(&new.text)?;
        let now = Utc::now();
        let NewText { id, text, status, metadata } = new;

        let mut items = self.items_mut();
        if items.index.contains(&id) {
            return Err(ServiceError::DuplicateId(id));
        }
        let record = DocumentRecord {
            id: id.clone(),
            vector: vector.values,
            text: text.clone(),
            status,
            metadata: metadata.clone(),
        };
        items.index.upsert(record).map_err(index_error)?;
        let created =
            Event::ItemCreated(journal::ItemCreated { id: id.clone(), text, status, metadata, created_at: now });
        if let Err(e) = self.journal.append(&created, now) {
            items.index.remove(&id);
            return Err(e.into());
        }
        items.created_at.insert(id.clone(), now);
        self.dirty.store(true, Ordering::Release);

        let mut suggestions = Vec::new();
        if status == DocStatus::Pending {
            let doc = items.index.get(&id).expect("just inserted");
            let hits = items
                .index
                .search(
                    doc.vector,
                    self.settings.suggestion_k,
                    self.settings.suggestion_threshold,
                    Some(DocStatus::FactChecked),
                )
                .map_err(index_error)?;
            let mut store = self.suggestions_lock();
            for hit in hits.into_iter().filter(|h| h.id != id) {
                let suggestion = Suggestion {
                    suggestion_id: store.next_id(),
                    source_id: id.clone(),
                    target_id: hit.id,
                    score: hit.score,
                    state: SuggestionState::Pending,
                    created_at: now,
                    decided_at: None,
                };
                self.journal.append(&Event::SuggestionCreated(suggestion.clone()), now)?;
                store.insert(suggestion.clone());
                suggestions.push(suggestion);
            }
        }
        let item = items.item(items.index.get(&id).expect("just inserted"));
        Ok(Submission { item, suggestions })
    }

    pub fn get_text(&self, id: &str) -> Option<TextItem> {
        let items = self.items();
        items.index.get(id).map(|doc| items.item(doc))
    }

    pub fn delete_text(&self, id: &str) -> Result<(), ServiceError> {
        let mut items = self.items_mut();
        if !items.index.contains(id) {
            return Err(ServiceError::NotFound { kind: "item", id: id.to_owned() });
        }
        self.journal.append(&Event::ItemDeleted(journal::ItemDeleted { id: id.to_owned() }), Utc::now())?;
        items.index.remove(id);
        items.created_at.remove(id);
        self.dirty.store(true, Ordering::Release);
        Ok(())
    }

    /// Only `pending -> fact_checked` changes anything; setting the current
    /// status again is a no-op.
    pub fn update_status(&self, id: &str, status: DocStatus) -> Result<TextItem, ServiceError> {
        let mut items = self.items_mut();
        let current = items
            .index
            .get(id)
            .map(|d| d.status)
            .ok_or_else(|| ServiceError::NotFound { kind: "item", id: id.to_owned() })?;
        match (current, status) {
            (DocStatus::Pending, DocStatus::FactChecked) => {
                let event = Event::StatusUpdated(journal::StatusUpdated { id: id.to_owned(), status });
                self.journal.append(&event, Utc::now())?;
                items.index.set_status(id, status);
                self.dirty.store(true, Ordering::Release);
            }
            (from, to) if from == to => {}
            (from, to) => return Err(ServiceError::IllegalTransition { from, to }),
        }
        Ok(items.item(items.index.get(id).expect("present")))
    }

    /// Read-only search; unset parameters fall back to the service defaults.
    pub fn query_similar(&self, text: &str, query: SimilarQuery) -> Result<Vec<SimilarityHit>, ServiceError> {
        let k = query.k.unwrap_or(self.settings.suggestion_k);
        let threshold = query.threshold.unwrap_or(self.settings.suggestion_threshold);
        if k == 0 {
            return Err(ServiceError::InvalidInput("k must be at least 1".into()));
        }
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(ServiceError::InvalidInput(format!("threshold {threshold} is outside [-1, 1]")));
        }
        let vector = self.vectorize(text)?;
        self.items().index.search(&vector.values, k, threshold, query.status).map_err(index_error)
    }

    pub fn list_suggestions(&self, state: Option<SuggestionState>, source_id: Option<&str>) -> Vec<Suggestion> {
        self.suggestions_lock().list(state, source_id)
    }

    pub fn get_suggestion(&self, id: &str) -> Option<Suggestion> {
        self.suggestions_lock().get(id).cloned()
    }

    /// Records a human decision. Decisions are final.
    pub fn decide_suggestion(&self, id: &str, decision: DecisionKind) -> Result<Suggestion, ServiceError> {
        let mut store = self.suggestions_lock();
        let current = store.get(id).ok_or_else(|| ServiceError::NotFound { kind: "suggestion", id: id.to_owned() })?;
        if current.state != SuggestionState::Pending {
            return Err(ServiceError::AlreadyDecided { id: id.to_owned(), state: current.state });
        }
        let now = Utc::now();
        let state = decision.outcome();
        let event = Event::Decision(journal::Decision { suggestion_id: id.to_owned(), state, decided_at: now });
        self.journal.append(&event, now)?;
        let s = store.get_mut(id).expect("checked above");
        s.state = state;
        s.decided_at = Some(now);
        Ok(s.clone())
    }

    pub fn stats(&self) -> ServiceStats {
        let index = self.items().index.stats();
        ServiceStats { index, suggestions: self.suggestions_lock().counts() }
    }

    pub fn is_dirty(&self) -> bool {
        self.dirty.load(Ordering::Acquire)
    }

    /// Writes a point-in-time snapshot of the index to the configured path.
    pub fn snapshot(&self) -> Result<u64, SnapshotError> {
        self.snapshot_to(&self.settings.index_path)
    }

    pub fn snapshot_to(&self, path: &Path) -> Result<u64, SnapshotError> {
        let items = self.items();
        // Writers are excluded while the read lock is held.
        let was_dirty = self.dirty.swap(false, Ordering::AcqRel);
        save_snapshot(&items.index, path).inspect_err(|_| {
            if was_dirty {
                self.dirty.store(true, Ordering::Release);
            }
        })
    }

    pub fn snapshot_if_dirty(&self) -> Result<Option<u64>, SnapshotError> {
        if self.is_dirty() {
            self.snapshot().map(Some)
        } else {
            Ok(None)
        }
    }
}
