mod support;

use std::sync::{Arc, Barrier};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use support::{claims_model, expected_matches, FACT_CHECKED};
use tempfile::TempDir;
use vsim_core::index::Metadata;
use vsim_core::{DocStatus, EmbedError, EmbeddingModel};
use vsim_server::config::MatchSettings;
use vsim_server::service::{NewText, Service, ServiceError, SimilarQuery};
use vsim_server::suggestions::{DecisionKind, SuggestionState};

struct Fixture {
    dir: TempDir,
    model: Arc<EmbeddingModel>,
}

impl Fixture {
    fn new() -> Self {
        Fixture { dir: tempfile::tempdir().unwrap(), model: Arc::new(claims_model()) }
    }

    fn settings(&self) -> MatchSettings {
        MatchSettings::new(self.dir.path().join("idx.vsix"), self.dir.path().join("idx.journal"))
    }

    fn open(&self) -> Service {
        Service::open(Arc::clone(&self.model), self.settings()).unwrap()
    }
}

fn text(id: &str, text: &str, status: DocStatus) -> NewText {
    NewText { id: id.into(), text: text.into(), status, metadata: Metadata::new() }
}

fn seed_fact_checked(service: &Service) {
    for (id, t) in FACT_CHECKED {
        let sub = service.submit_text(text(id, t, DocStatus::FactChecked)).unwrap();
        assert!(sub.suggestions.is_empty());
    }
}

#[test]
fn near_duplicate_gets_expected_suggestions() {
    let fx = Fixture::new();
    let service = fx.open();
    seed_fact_checked(&service);

    let incoming = "vaccines REALLY cause autism!";
    let want = expected_matches(&fx.model, FACT_CHECKED, incoming, 0.75, 5);
    assert_eq!(want.len(), 1, "fixture should produce a single match: {want:?}");
    let sub = service.submit_text(text("p-1", incoming, DocStatus::Pending)).unwrap();
    let got: Vec<_> = sub.suggestions.iter().map(|s| (s.target_id.clone(), s.score)).collect();
    assert_eq!(got.len(), want.len());
    for ((gid, gs), (wid, ws)) in got.iter().zip(&want) {
        assert_eq!(gid, wid);
        assert!((gs - ws).abs() < 1e-6, "{gs} vs {ws}");
    }
    for s in &sub.suggestions {
        assert_eq!(s.source_id, "p-1");
        assert_eq!(s.state, SuggestionState::Pending);
        assert!(s.decided_at.is_none());
    }
}

#[test]
fn identical_text_scores_one() {
    let fx = Fixture::new();
    let service = fx.open();
    seed_fact_checked(&service);
    let sub = service.submit_text(text("p-dup", FACT_CHECKED[1].1, DocStatus::Pending)).unwrap();
    assert_eq!(sub.suggestions.len(), 1);
    assert_eq!(sub.suggestions[0].target_id, "fc-moon");
    assert!((sub.suggestions[0].score - 1.0).abs() <= 1e-6);
    assert_eq!(service.list_suggestions(Some(SuggestionState::Pending), None).len(), 1);
    assert!(service.list_suggestions(Some(SuggestionState::Confirmed), None).is_empty());
}

#[test]
fn pending_into_empty_index_has_no_suggestions() {
    let fx = Fixture::new();
    let service = fx.open();
    let sub = service.submit_text(text("p", "the moon landing was staged", DocStatus::Pending)).unwrap();
    assert!(sub.suggestions.is_empty());
    // Pending items are never targets.
    let sub = service.submit_text(text("q", "the moon landing was staged", DocStatus::Pending)).unwrap();
    assert!(sub.suggestions.is_empty());
}

#[test]
fn decisions_are_final() {
    let fx = Fixture::new();
    let service = fx.open();
    seed_fact_checked(&service);
    let sub = service.submit_text(text("p", FACT_CHECKED[0].1, DocStatus::Pending)).unwrap();
    let id = &sub.suggestions[0].suggestion_id;

    let decided = service.decide_suggestion(id, DecisionKind::Confirm).unwrap();
    assert_eq!(decided.state, SuggestionState::Confirmed);
    assert!(decided.decided_at.is_some());
    let err = service.decide_suggestion(id, DecisionKind::Dismiss).unwrap_err();
    assert!(matches!(err, ServiceError::AlreadyDecided { state: SuggestionState::Confirmed, .. }), "{err:?}");
    assert_eq!(err.http_status(), 409);

    let err = service.decide_suggestion("sug-missing", DecisionKind::Confirm).unwrap_err();
    assert_eq!(err.http_status(), 404);
    assert_eq!(service.get_suggestion(id).unwrap().state, SuggestionState::Confirmed);
}

#[test]
fn rejected_submissions() {
    let fx = Fixture::new();
    let service = fx.open();
    seed_fact_checked(&service);

    let err = service.submit_text(text("fc-moon", "the moon", DocStatus::Pending)).unwrap_err();
    assert!(matches!(err, ServiceError::DuplicateId(_)));
    assert_eq!(err.http_status(), 409);

    let err = service.submit_text(text("e1", "👍👍", DocStatus::Pending)).unwrap_err();
    assert!(matches!(err, ServiceError::Unvectorizable(EmbedError::NoTokens)), "{err:?}");
    assert_eq!(err.http_status(), 422);

    let err = service.submit_text(text("e2", "zebra xylophone", DocStatus::Pending)).unwrap_err();
    assert!(matches!(err, ServiceError::Unvectorizable(EmbedError::AllOutOfVocabulary { .. })), "{err:?}");

    let err = service.submit_text(text("", "the moon", DocStatus::Pending)).unwrap_err();
    assert_eq!(err.http_status(), 400);

    assert_eq!(service.stats().index.document_count, 3);
    assert!(service.list_suggestions(None, None).is_empty());
}

#[test]
fn status_promotion_makes_future_targets() {
    let fx = Fixture::new();
    let service = fx.open();
    service.submit_text(text("a", "fluoride water is poison", DocStatus::Pending)).unwrap();

    let before = service.submit_text(text("b", "fluoride water is poison", DocStatus::Pending)).unwrap();
    assert!(before.suggestions.is_empty());

    let item = service.update_status("a", DocStatus::FactChecked).unwrap();
    assert_eq!(item.status, DocStatus::FactChecked);
    // No retroactive suggestion for `b`.
    assert!(service.list_suggestions(None, Some("b")).is_empty());

    let after = service.submit_text(text("c", "fluoride water is poison", DocStatus::Pending)).unwrap();
    assert_eq!(after.suggestions.len(), 1);
    assert_eq!(after.suggestions[0].target_id, "a");

    let err = service.update_status("a", DocStatus::Pending).unwrap_err();
    assert!(matches!(err, ServiceError::IllegalTransition { .. }));
    let err = service.update_status("nope", DocStatus::FactChecked).unwrap_err();
    assert!(matches!(err, ServiceError::NotFound { .. }));
    assert_eq!(service.update_status("a", DocStatus::FactChecked).unwrap().status, DocStatus::FactChecked);
}

#[test]
fn query_similar_is_read_only() {
    let fx = Fixture::new();
    let service = fx.open();
    assert!(service.query_similar("the moon", SimilarQuery::default()).unwrap().is_empty());
    seed_fact_checked(&service);

    let q = SimilarQuery { k: Some(1), threshold: Some(-1.0), status: None };
    let hits = service.query_similar(FACT_CHECKED[2].1, q).unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].id, "fc-bleach");
    assert!((hits[0].score - 1.0).abs() <= 1e-6);

    let strict = SimilarQuery { threshold: Some(1.0), ..Default::default() };
    assert!(service.query_similar("election votes rigged", strict).unwrap().is_empty());

    let pending_only = SimilarQuery { k: Some(10), threshold: Some(-1.0), status: Some(DocStatus::Pending) };
    assert!(service.query_similar("the moon", pending_only).unwrap().is_empty());

    assert!(service.query_similar("the moon", SimilarQuery { k: Some(0), ..Default::default() }).is_err());
    assert_eq!(service.stats().index.document_count, 3);
    assert!(service.list_suggestions(None, None).is_empty());
}

#[test]
fn delete_removes_target() {
    let fx = Fixture::new();
    let service = fx.open();
    seed_fact_checked(&service);
    service.delete_text("fc-moon").unwrap();
    assert!(service.get_text("fc-moon").is_none());
    assert!(matches!(service.delete_text("fc-moon"), Err(ServiceError::NotFound { .. })));
    let sub = service.submit_text(text("p", FACT_CHECKED[1].1, DocStatus::Pending)).unwrap();
    assert!(sub.suggestions.is_empty());
}

#[test]
fn restart_reproduces_state() {
    let fx = Fixture::new();
    let (suggestions, items) = {
        let service = fx.open();
        seed_fact_checked(&service);
        let sub = service.submit_text(text("p-1", "vaccines really cause autism", DocStatus::Pending)).unwrap();
        service.snapshot().unwrap();
        service.submit_text(text("p-2", FACT_CHECKED[2].1, DocStatus::Pending)).unwrap();
        service.decide_suggestion(&sub.suggestions[0].suggestion_id, DecisionKind::Confirm).unwrap();
        service.update_status("p-2", DocStatus::FactChecked).unwrap();
        service.delete_text("fc-moon").unwrap();
        let items: Vec<_> =
            ["fc-vaccines", "fc-moon", "fc-bleach", "p-1", "p-2"].map(|id| service.get_text(id)).to_vec();
        (service.list_suggestions(None, None), items)
        // Dropped without a final snapshot: the journal carries the tail.
    };
    let reopened = fx.open();
    assert_eq!(reopened.list_suggestions(None, None), suggestions);
    let reloaded: Vec<_> =
        ["fc-vaccines", "fc-moon", "fc-bleach", "p-1", "p-2"].map(|id| reopened.get_text(id)).to_vec();
    assert_eq!(reloaded, items);

    // A later snapshot plus the full journal still converges.
    reopened.snapshot().unwrap();
    drop(reopened);
    let again = fx.open();
    assert_eq!(again.list_suggestions(None, None), suggestions);
    let next = again.submit_text(text("p-3", FACT_CHECKED[0].1, DocStatus::Pending)).unwrap();
    assert!(suggestions.iter().all(|s| s.suggestion_id != next.suggestions[0].suggestion_id));
}

#[test]
fn replay_after_every_request() {
    let fx = Fixture::new();
    let mut rng = StdRng::seed_from_u64(11);
    let service = fx.open();
    seed_fact_checked(&service);
    let phrases = ["vaccines cause autism", "the moon landing was staged", "5g towers spread virus", "election rigged"];
    for step in 0..40 {
        match rng.random_range(0..4) {
            0 | 1 => {
                let t = phrases[rng.random_range(0..phrases.len())];
                let status = if rng.random_bool(0.3) { DocStatus::FactChecked } else { DocStatus::Pending };
                service.submit_text(text(&format!("i-{step}"), t, status)).unwrap();
            }
            2 => {
                let pending = service.list_suggestions(Some(SuggestionState::Pending), None);
                if let Some(s) = pending.first() {
                    let d = if rng.random_bool(0.5) { DecisionKind::Confirm } else { DecisionKind::Dismiss };
                    service.decide_suggestion(&s.suggestion_id, d).unwrap();
                }
            }
            _ => {
                service.snapshot().unwrap();
            }
        }
        let replayed = Service::open(Arc::clone(&fx.model), fx.settings()).unwrap();
        assert_eq!(replayed.list_suggestions(None, None), service.list_suggestions(None, None), "step {step}");
        assert_eq!(replayed.stats().index.document_count, service.stats().index.document_count);
    }
}

#[test]
fn concurrent_decisions_have_one_winner() {
    let fx = Fixture::new();
    let service = Arc::new(fx.open());
    seed_fact_checked(&service);
    let sub = service.submit_text(text("p", FACT_CHECKED[0].1, DocStatus::Pending)).unwrap();
    let id = sub.suggestions[0].suggestion_id.clone();

    let threads = 16;
    let barrier = Arc::new(Barrier::new(threads));
    let handles: Vec<_> = (0..threads)
        .map(|i| {
            let (service, barrier, id) = (Arc::clone(&service), Arc::clone(&barrier), id.clone());
            std::thread::spawn(move || {
                barrier.wait();
                let d = if i % 2 == 0 { DecisionKind::Confirm } else { DecisionKind::Dismiss };
                service.decide_suggestion(&id, d)
            })
        })
        .collect();
    let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(results.iter().filter(|r| r.is_ok()).count(), 1);
    assert!(results.iter().filter_map(|r| r.as_ref().err()).all(|e| e.http_status() == 409));

    let journal = std::fs::read_to_string(fx.settings().journal_path).unwrap();
    assert_eq!(journal.lines().filter(|l| l.contains("\"event\":\"decision\"")).count(), 1);
}

#[test]
fn suggestion_invariants_hold() {
    let fx = Fixture::new();
    let mut settings = fx.settings();
    settings.suggestion_k = 2;
    settings.suggestion_threshold = 0.3;
    let service = Service::open(Arc::clone(&fx.model), settings).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    for i in 0..60 {
        let len = rng.random_range(1..5);
        let words: Vec<&str> =
            (0..len).map(|_| support::CLAIM_WORDS[rng.random_range(0..support::CLAIM_WORDS.len())]).collect();
        let status = if i % 3 == 0 { DocStatus::FactChecked } else { DocStatus::Pending };
        let sub = service.submit_text(text(&format!("d{i}"), &words.join(" "), status)).unwrap();
        assert!(sub.suggestions.len() <= 2);
        if status == DocStatus::FactChecked {
            assert!(sub.suggestions.is_empty());
        }
        for s in &sub.suggestions {
            assert_ne!(s.source_id, s.target_id);
            assert!(s.score >= 0.3);
            assert_eq!(service.get_text(&s.target_id).unwrap().status, DocStatus::FactChecked);
        }
    }
}
