//! Append-only JSON-lines journal of item and suggestion events.
//!
//! Each line is `{"event": <name>, "data": {...}, "at": <RFC 3339>}` and is
//! written with a single `write_all`, so after a crash a record is either
//! complete or a torn tail. Torn tails are dropped when the journal is opened.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use vsim_core::index::Metadata;
use vsim_core::DocStatus;

use crate::suggestions::{Suggestion, SuggestionState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemCreated {
    pub id: String,
    pub text: String,
    pub status: DocStatus,
    pub metadata: Metadata,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusUpdated {
    pub id: String,
    pub status: DocStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDeleted {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub suggestion_id: String,
    pub state: SuggestionState,
    pub decided_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    ItemCreated(ItemCreated),
    StatusUpdated(StatusUpdated),
    ItemDeleted(ItemDeleted),
    SuggestionCreated(Suggestion),
    Decision(Decision),
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::ItemCreated(_) => "item_created",
            Event::StatusUpdated(_) => "item_status_updated",
            Event::ItemDeleted(_) => "item_deleted",
            Event::SuggestionCreated(_) => "suggestion_created",
            Event::Decision(_) => "decision",
        }
    }

    fn data(&self) -> serde_json::Result<serde_json::Value> {
        match self {
            Event::ItemCreated(d) => serde_json::to_value(d),
            Event::StatusUpdated(d) => serde_json::to_value(d),
            Event::ItemDeleted(d) => serde_json::to_value(d),
            Event::SuggestionCreated(d) => serde_json::to_value(d),
            Event::Decision(d) => serde_json::to_value(d),
        }
    }

    fn from_parts(name: &str, data: serde_json::Value) -> Result<Self, String> {
        let parsed = match name {
            "item_created" => serde_json::from_value(data).map(Event::ItemCreated),
            "item_status_updated" => serde_json::from_value(data).map(Event::StatusUpdated),
            "item_deleted" => serde_json::from_value(data).map(Event::ItemDeleted),
            "suggestion_created" => serde_json::from_value(data).map(Event::SuggestionCreated),
            "decision" => serde_json::from_value(data).map(Event::Decision),
            other => return Err(format!("unknown event `{other}`")),
        };
        parsed.map_err(|e| format!("{name}: {e}"))
    }
}

#[derive(Serialize, Deserialize)]
struct Line {
    event: String,
    data: serde_json::Value,
    at: String,
}

#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("journal I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt journal line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
}

/// An event with the time it was journaled.
pub type Entry = (Event, DateTime<Utc>);

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
}

impl Journal {
    /// Opens (creating if needed) the journal and returns it together with
    /// every complete event already recorded.
    pub fn open(path: impl AsRef<Path>) -> Result<(Journal, Vec<Entry>), JournalError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().read(true).create(true).append(true).open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        if complete < bytes.len() {
            tracing::warn!(path = %path.display(), bytes = bytes.len() - complete, "dropping torn journal tail");
            file.set_len(complete as u64)?;
            file.seek(SeekFrom::End(0))?;
        }

        let mut events = Vec::new();
        for (n, raw) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
            if raw.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let corrupt = |reason: String| JournalError::Corrupt { line: n + 1, reason };
            let line: Line = serde_json::from_slice(raw).map_err(|e| corrupt(e.to_string()))?;
            let at = DateTime::parse_from_rfc3339(&line.at).map_err(|e| corrupt(e.to_string()))?.with_timezone(&Utc);
            events.push((Event::from_parts(&line.event, line.data).map_err(corrupt)?, at));
        }
        Ok((Journal { path, file: Mutex::new(file) }, events))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one event as a single line and syncs it to disk.
    pub fn append(&self, event: &Event, at: DateTime<Utc>) -> Result<(), JournalError> {
        let line = Line {
            event: event.name().to_owned(),
            data: event.data().map_err(io::Error::other)?,
            at: at.to_rfc3339_opts(SecondsFormat::Micros, true),
        };
        let mut bytes = serde_json::to_vec(&line).map_err(io::Error::other)?;
        bytes.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(&bytes)?;
        file.sync_data()?;
        Ok(())
    }
}
