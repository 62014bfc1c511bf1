//! Outbound `suggestions.created` notifications.

use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Serialize;

use crate::suggestions::Suggestion;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuggestionRef {
    pub suggestion_id: String,
    pub target_id: String,
    pub score: f64,
}

impl From<&Suggestion> for SuggestionRef {
    fn from(s: &Suggestion) -> Self {
        SuggestionRef { suggestion_id: s.suggestion_id.clone(), target_id: s.target_id.clone(), score: s.score }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WebhookPayload {
    pub event: &'static str,
    pub item_id: String,
    pub suggestions: Vec<SuggestionRef>,
    pub sent_at: DateTime<Utc>,
}

impl WebhookPayload {
    pub fn suggestions_created(item_id: &str, suggestions: &[Suggestion]) -> Self {
        WebhookPayload {
            event: "suggestions.created",
            item_id: item_id.to_owned(),
            suggestions: suggestions.iter().map(SuggestionRef::from).collect(),
            sent_at: Utc::now(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub attempts: usize,
    /// HTTP status of the last response, if any arrived.
    pub last_status: Option<u16>,
    pub delivered: bool,
}

#[derive(Debug, Clone)]
pub struct Notifier {
    client: reqwest::Client,
    url: String,
    backoff: Vec<Duration>,
}

impl Notifier {
    /// `backoff[i]` is the wait before attempt `i + 2`.
    pub fn new(url: impl Into<String>, backoff: Vec<Duration>) -> Self {
        let client = reqwest::Client::builder().timeout(Duration::from_secs(10)).build().expect("default HTTP client");
        Notifier { client, url: url.into(), backoff }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// POSTs the payload, retrying on connection errors and 5xx responses.
    pub async fn deliver(&self, payload: &WebhookPayload) -> Delivery {
        let body = serde_json::to_vec(payload).expect("payload serializes");
        let mut delivery = Delivery { attempts: 0, last_status: None, delivered: false };
        let mut delays = self.backoff.iter();
        loop {
            delivery.attempts += 1;
            let result = self
                .client
                .post(&self.url)
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.clone())
                .send()
                .await;
            let retryable = match result {
                Ok(resp) => {
                    let status = resp.status();
                    delivery.last_status = Some(status.as_u16());
                    if status.is_success() {
                        delivery.delivered = true;
                        return delivery;
                    }
                    status.is_server_error()
                }
                Err(e) => {
                    tracing::debug!(error = %e, url = %self.url, "webhook request failed");
                    true
                }
            };
            match delays.next() {
                Some(delay) if retryable => tokio::time::sleep(*delay).await,
                _ => {
                    tracing::warn!(
                        url = %self.url,
                        attempts = delivery.attempts,
                        status = ?delivery.last_status,
                        item = %payload.item_id,
                        "webhook delivery failed"
                    );
                    return delivery;
                }
            }
        }
    }
}
