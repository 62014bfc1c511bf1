use std::path::PathBuf;
use std::time::Duration;

pub const DEFAULT_PORT: u16 = 8040;
pub const DEFAULT_THRESHOLD: f64 = 0.75;
pub const DEFAULT_SUGGESTION_K: usize = 5;
pub const DEFAULT_SNAPSHOT_INTERVAL: Duration = Duration::from_secs(60);
/// Delays before the second and third webhook attempts.
pub const DEFAULT_WEBHOOK_BACKOFF: [Duration; 2] = [Duration::from_secs(1), Duration::from_secs(4)];

/// Knobs of the matching workflow itself, independent of transport.
#[derive(Debug, Clone)]
pub struct MatchSettings {
    pub index_path: PathBuf,
    pub journal_path: PathBuf,
    pub suggestion_threshold: f64,
    pub suggestion_k: usize,
}

impl MatchSettings {
    pub fn new(index_path: impl Into<PathBuf>, journal_path: impl Into<PathBuf>) -> Self {
        MatchSettings {
            index_path: index_path.into(),
            journal_path: journal_path.into(),
            suggestion_threshold: DEFAULT_THRESHOLD,
            suggestion_k: DEFAULT_SUGGESTION_K,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(-1.0..=1.0).contains(&self.suggestion_threshold) {
            return Err(format!("suggestion threshold {} is outside [-1, 1]", self.suggestion_threshold));
        }
        if self.suggestion_k == 0 {
            return Err("suggestion k must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub model_path: PathBuf,
    pub matching: MatchSettings,
    pub port: u16,
    pub callback_url: Option<String>,
    /// `*` allows any origin.
    pub ui_origin: String,
    pub snapshot_interval: Duration,
    pub webhook_backoff: Vec<Duration>,
}

/// Default journal location: next to the snapshot.
pub fn default_journal_path(index_path: &std::path::Path) -> PathBuf {
    let mut name = index_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".journal");
    index_path.with_file_name(name)
}
