//! Suggestions: proposed links from a new item to an already fact-checked one,
//! waiting for a human to confirm or dismiss them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionState {
    Pending,
    Confirmed,
    Dismissed,
}

impl SuggestionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SuggestionState::Pending => "pending",
            SuggestionState::Confirmed => "confirmed",
            SuggestionState::Dismissed => "dismissed",
        }
    }
}

impl fmt::Display for SuggestionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuggestionState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pending" => Ok(SuggestionState::Pending),
            "confirmed" => Ok(SuggestionState::Confirmed),
            "dismissed" => Ok(SuggestionState::Dismissed),
            other => Err(format!("unknown suggestion state `{other}` (expected pending, confirmed or dismissed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    Confirm,
    Dismiss,
}

impl DecisionKind {
    pub fn outcome(self) -> SuggestionState {
        match self {
            DecisionKind::Confirm => SuggestionState::Confirmed,
            DecisionKind::Dismiss => SuggestionState::Dismissed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub suggestion_id: String,
    pub source_id: String,
    pub target_id: String,
    pub score: f64,
    pub state: SuggestionState,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StateCounts {
    pub pending: usize,
    pub confirmed: usize,
    pub dismissed: usize,
}

/// In-memory suggestion table keyed by id.
#[derive(Debug, Default)]
pub(crate) struct SuggestionStore {
    by_id: BTreeMap<String, Suggestion>,
    next: u64,
}

const ID_PREFIX: &str = "sug-";

impl SuggestionStore {
    /// Ids are zero-padded so that lexicographic order is creation order.
    pub fn next_id(&mut self) -> String {
        self.next += 1;
        format!("{ID_PREFIX}{:010}", self.next)
    }

    pub fn insert(&mut self, suggestion: Suggestion) {
        if let Some(n) = suggestion.suggestion_id.strip_prefix(ID_PREFIX).and_then(|n| n.parse::<u64>().ok()) {
            self.next = self.next.max(n);
        }
        self.by_id.insert(suggestion.suggestion_id.clone(), suggestion);
    }

    pub fn get(&self, id: &str) -> Option<&Suggestion> {
        self.by_id.get(id)
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut Suggestion> {
        self.by_id.get_mut(id)
    }

    /// Newest first; suggestions created together are ordered by id.
    pub fn list(&self, state: Option<SuggestionState>, source_id: Option<&str>) -> Vec<Suggestion> {
        let mut out: Vec<Suggestion> = self
            .by_id
            .values()
            .filter(|s| state.is_none_or(|st| s.state == st))
            .filter(|s| source_id.is_none_or(|src| s.source_id == src))
            .cloned()
            .collect();
        out.sort_by(|a, b| b.created_at.cmp(&a.created_at).then_with(|| a.suggestion_id.cmp(&b.suggestion_id)));
        out
    }

    pub fn counts(&self) -> StateCounts {
        let mut counts = StateCounts::default();
        for s in self.by_id.values() {
            match s.state {
                SuggestionState::Pending => counts.pending += 1,
                SuggestionState::Confirmed => counts.confirmed += 1,
                SuggestionState::Dismissed => counts.dismissed += 1,
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn sug(store: &mut SuggestionStore, source: &str, secs: i64) -> Suggestion {
        let s = Suggestion {
            suggestion_id: store.next_id(),
            source_id: source.into(),
            target_id: "t".into(),
            score: 0.9,
            state: SuggestionState::Pending,
            created_at: Utc.timestamp_opt(secs, 0).unwrap(),
            decided_at: None,
        };
        store.insert(s.clone());
        s
    }

    #[test]
    fn listing_order_and_filters() {
        let mut store = SuggestionStore::default();
        let a = sug(&mut store, "x", 10);
        let b = sug(&mut store, "x", 10);
        let c = sug(&mut store, "y", 20);
        let ids = |v: Vec<Suggestion>| v.into_iter().map(|s| s.suggestion_id).collect::<Vec<_>>();
        assert_eq!(
            ids(store.list(None, None)),
            [c.suggestion_id.as_str(), a.suggestion_id.as_str(), b.suggestion_id.as_str()]
        );
        assert_eq!(ids(store.list(None, Some("x"))), [a.suggestion_id.as_str(), b.suggestion_id.as_str()]);
        store.get_mut(&a.suggestion_id).unwrap().state = SuggestionState::Confirmed;
        assert_eq!(ids(store.list(Some(SuggestionState::Pending), Some("x"))), [b.suggestion_id.as_str()]);
        assert_eq!(store.counts(), StateCounts { pending: 2, confirmed: 1, dismissed: 0 });
    }

    #[test]
    fn ids_continue_after_replayed_inserts() {
        let mut store = SuggestionStore::default();
        let mut replayed = Suggestion {
            suggestion_id: "sug-0000000041".into(),
            source_id: "s".into(),
            target_id: "t".into(),
            score: 1.0,
            state: SuggestionState::Pending,
            created_at: Utc::now(),
            decided_at: None,
        };
        store.insert(replayed.clone());
        replayed.suggestion_id = "sug-0000000007".into();
        store.insert(replayed);
        assert_eq!(store.next_id(), "sug-0000000042");
    }

    #[test]
    fn state_parsing() {
        assert_eq!("confirmed".parse::<SuggestionState>().unwrap(), SuggestionState::Confirmed);
        assert!("maybe".parse::<SuggestionState>().is_err());
        assert_eq!(DecisionKind::Dismiss.outcome(), SuggestionState::Dismissed);
        let json = serde_json::to_value(SuggestionState::Dismissed).unwrap();
        assert_eq!(json, "dismissed");
    }
}
