use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use tailoredsec_api::{router, AppState, ADMIN_SECRET_HEADER};
use tailoredsec_core::session::{
    advance, AllocationMode, AllocationPolicy, Condition, SessionEvent, SessionId, SessionRecord, SessionState,
};
use tailoredsec_core::store::{read_log, ContentBank, FileLog, MemoryLog, SessionStore, CSV_HEADER};

const SECRET: &str = "s3cret";

struct App {
    router: Router,
    store: Arc<SessionStore>,
}

fn app_with(store: SessionStore, mode: AllocationMode) -> App {
    let store = Arc::new(store);
    let state = AppState::new(store.clone(), AllocationPolicy::new(mode), Some(SECRET.into()));
    App {
        router: router(state),
        store,
    }
}

fn app(mode: AllocationMode) -> App {
    app_with(SessionStore::in_memory(Arc::new(ContentBank::bundled())), mode)
}

async fn send(app: &App, method: &str, uri: &str, body: Option<&str>, secret: Option<&str>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    if let Some(s) = secret {
        req = req.header(ADMIN_SECRET_HEADER, s);
    }
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.router.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn create(app: &App) -> String {
    let (status, body) = send(app, "POST", "/sessions", None, None).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    let v: Value = serde_json::from_str(&body).unwrap();
    v["session_id"].as_str().unwrap().to_string()
}

async fn event(app: &App, id: &str, ev: Value) -> (StatusCode, Value) {
    let (status, body) = send(app, "POST", &format!("/sessions/{id}/events"), Some(&ev.to_string()), None).await;
    (status, serde_json::from_str(&body).unwrap_or(Value::Null))
}

async fn ok(app: &App, id: &str, ev: Value) -> Value {
    let (status, v) = event(app, id, ev.clone()).await;
    assert_eq!(status, StatusCode::OK, "{ev} -> {v}");
    v
}

fn condition_of(app: &App, id: &str) -> Condition {
    app.store.get(SessionId::parse(id).unwrap()).unwrap().condition
}

#[tokio::test]
async fn create_hides_condition_and_ignores_body() {
    let app = app(AllocationMode::FixedQuota { first_n_to_traditional: 1 });
    let (status, body) = send(&app, "POST", "/sessions", Some("{\"condition\":\"x\"}"), None).await;
    assert_eq!(status, StatusCode::CREATED);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["state"], "consent");
    assert_eq!(v["condition_visible"], false);
    assert_eq!(v.as_object().unwrap().len(), 3);
    let first = v["session_id"].as_str().unwrap().to_string();
    let second = create(&app).await;
    assert_eq!(condition_of(&app, &first), Condition::Traditional);
    assert_eq!(condition_of(&app, &second), Condition::PersonalityConditional);
}

#[tokio::test]
async fn allocation_exhausted_is_conflict() {
    let app = app(AllocationMode::Manual {
        sequence: vec![Condition::Traditional],
    });
    create(&app).await;
    let (status, body) = send(&app, "POST", "/sessions", None, None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["code"], "allocation_exhausted");
}

#[tokio::test]
async fn pre_assessment_step_has_options_only() {
    let app = app(AllocationMode::Alternating);
    let id = create(&app).await;
    let consent = send(&app, "GET", &format!("/sessions/{id}/step"), None, None).await.1;
    assert!(consent.contains("Dear Participant"));
    let v = ok(&app, &id, json!({"type": "consent_given"})).await;
    assert_eq!(v["state"], "pre_assessment");
    let items = v["content"]["items"].as_array().unwrap();
    assert_eq!(items.len(), 4);
    for item in items {
        assert_eq!(item["options"].as_array().unwrap().len(), 4);
        let keys: Vec<_> = item.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["id", "options", "prompt"]);
    }
}

#[tokio::test]
async fn card_module_gate_and_summary() {
    // Second session under fixed quota 1 is personality-conditional.
    let app = app(AllocationMode::FixedQuota { first_n_to_traditional: 1 });
    create(&app).await;
    let id = create(&app).await;
    ok(&app, &id, json!({"type": "consent_given"})).await;
    let v = ok(&app, &id, json!({"type": "pre_answers", "answers": [1, 1, 0, 0]})).await;
    assert_eq!(v["state"], "bfi10_questionnaire");
    assert_eq!(v["content"]["items"].as_array().unwrap().len(), 10);

    let (status, err) = event(&app, &id, json!({"type": "bfi_answers", "responses": [3, 3, 3, 3, 3, 3, 3, 3, 3]})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "malformed_payload");

    let v = ok(&app, &id, json!({"type": "bfi_answers", "responses": vec![3; 10]})).await;
    assert_eq!(v["state"], "training");
    let content = &v["content"];
    assert_eq!(content["module"], "swipeable_cards");
    let cards = content["assets"].as_array().unwrap();
    assert_eq!(cards.len(), 4);
    assert!(cards.iter().all(|c| c["kind"] == "card" && !c["body"].as_str().unwrap().is_empty()));
    assert_eq!(content["progress"]["completed"], 0);
    assert_eq!(content["progress"]["required"], 4);

    let ids: Vec<String> = cards.iter().map(|c| c["id"].as_str().unwrap().to_string()).collect();
    for (n, card) in ids.iter().enumerate().take(3) {
        let v = ok(&app, &id, json!({"type": "training_progress", "asset_id": card})).await;
        assert_eq!(v["content"]["progress"]["completed"], n + 1);
    }
    let (status, err) = event(&app, &id, json!({"type": "training_done"})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "illegal_event");
    assert_eq!(err["state"], "training");

    let v = ok(&app, &id, json!({"type": "training_progress", "asset_id": ids[3]})).await;
    assert_eq!(v["content"]["progress"]["gate_open"], true);
    ok(&app, &id, json!({"type": "training_done"})).await;
    ok(&app, &id, json!({"type": "post_answers", "answers": [1, 2, 1, 3]})).await;
    let v = ok(
        &app,
        &id,
        json!({"type": "feedback_given", "feedback": {"usability": 5, "adaptive_content": 4, "se_understanding": 4, "ease_of_use": 5}}),
    )
    .await;
    assert_eq!(v["state"], "complete");
    assert_eq!(v["content"]["pre_score"], 20);
    assert_eq!(v["content"]["post_score"], 30);
    assert_eq!(v["content"]["passed_post"], true);
}

#[tokio::test]
async fn unknown_session_and_bad_json() {
    let app = app(AllocationMode::Alternating);
    let missing = SessionId::random();
    let (status, body) = send(&app, "GET", &format!("/sessions/{missing}/step"), None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body.contains("not_found"));
    let (status, _) = send(&app, "GET", "/sessions/not-a-uuid/step", None, None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = create(&app).await;
    for bad in ["", "{", "{\"type\":\"teleport\"}", "{\"type\":\"pre_answers\"}", "[1,2]"] {
        let (status, body) = send(&app, "POST", &format!("/sessions/{id}/events"), Some(bad), None).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{bad}: {body}");
        assert!(body.contains("malformed_payload"));
    }
    ok(&app, &id, json!({"type": "consent_given"})).await;
    let (status, body) = send(
        &app,
        "POST",
        &format!("/sessions/{id}/events"),
        Some("{\"type\":\"pre_answers\",\"answers\":[0,1,2,4]}"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
}

#[tokio::test]
async fn double_submit_leaves_state_unchanged() {
    let app = app(AllocationMode::Alternating);
    let id = create(&app).await;
    ok(&app, &id, json!({"type": "consent_given"})).await;
    let answers = json!({"type": "pre_answers", "answers": [1, 1, 1, 0]});
    let first = ok(&app, &id, answers.clone()).await;
    let before = app.store.get(SessionId::parse(&id).unwrap()).unwrap();
    let (status, err) = event(&app, &id, answers).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["code"], "illegal_event");
    assert_eq!(app.store.get(SessionId::parse(&id).unwrap()).unwrap(), before);
    let step: Value =
        serde_json::from_str(&send(&app, "GET", &format!("/sessions/{id}/step"), None, None).await.1).unwrap();
    assert_eq!(step, first);
}

#[tokio::test]
async fn admin_export_requires_secret() {
    let app = app(AllocationMode::Alternating);
    let (status, body) = send(&app, "GET", "/admin/export", None, Some(SECRET)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, format!("{CSV_HEADER}\n"));

    for wrong in [None, Some("nope"), Some("s3cre"), Some("s3cret!")] {
        let (status, body) = send(&app, "GET", "/admin/export", None, wrong).await;
        assert_eq!(status, StatusCode::UNAUTHORIZED);
        assert!(body.is_empty());
    }

    create(&app).await;
    let id = create(&app).await;
    ok(&app, &id, json!({"type": "consent_given"})).await;
    let (_, all) = send(&app, "GET", "/admin/export", None, Some(SECRET)).await;
    assert_eq!(all.lines().count(), 3);
    let (_, pc) = send(&app, "GET", "/admin/export?condition=personality_conditional", None, Some(SECRET)).await;
    assert_eq!(pc.lines().count(), 2);
    let (_, done) = send(&app, "GET", "/admin/export?state=complete", None, Some(SECRET)).await;
    assert_eq!(done.lines().count(), 1);
    let (status, _) = send(&app, "GET", "/admin/export?condition=other", None, Some(SECRET)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn export_refused_without_configured_secret() {
    let store = Arc::new(SessionStore::in_memory(Arc::new(ContentBank::bundled())));
    let state = AppState::new(store.clone(), AllocationPolicy::new(AllocationMode::Alternating), None);
    let app = App {
        router: router(state),
        store,
    };
    let (status, _) = send(&app, "GET", "/admin/export", None, Some("")).await;
    assert_eq!(status, StatusCode::UNAUTHORIZED);
}

const ASSETS: [&str; 9] = [
    "card-phishing",
    "card-pretexting",
    "card-tailgating",
    "card-impersonation",
    "awareness-video",
    "podcast-fundamentals",
    "podcast-vishing",
    "story-video",
    "bogus",
];

fn random_event(rng: &mut ChaCha8Rng, state: SessionState) -> Value {
    let answers = |rng: &mut ChaCha8Rng| (0..4).map(|_| rng.random_range(0..4)).collect::<Vec<i64>>();
    if rng.random_bool(0.7) {
        match state {
            SessionState::Consent => return json!({"type": "consent_given"}),
            SessionState::PreAssessment => return json!({"type": "pre_answers", "answers": answers(rng)}),
            SessionState::PassScreen => {
                let t = if rng.random_bool(0.5) { "choose_post_after_pass" } else { "exit_after_pass" };
                return json!({ "type": t });
            }
            SessionState::Bfi10Questionnaire => {
                let r: Vec<i64> = (0..10).map(|_| rng.random_range(1..=5)).collect();
                return json!({"type": "bfi_answers", "responses": r});
            }
            SessionState::Training { .. } if rng.random_bool(0.75) => {
                return json!({"type": "training_progress", "asset_id": ASSETS.choose(rng).unwrap()})
            }
            SessionState::PostAssessment => return json!({"type": "post_answers", "answers": answers(rng)}),
            SessionState::Feedback => {
                let r: Vec<i64> = (0..4).map(|_| rng.random_range(1..=5)).collect();
                return json!({"type": "feedback_given", "feedback": {
                    "usability": r[0], "adaptive_content": r[1], "se_understanding": r[2], "ease_of_use": r[3]
                }});
            }
            _ => {}
        }
    }
    match rng.random_range(0..9) {
        0 => json!({"type": "consent_given"}),
        1 => json!({"type": "pre_answers", "answers": answers(rng)}),
        2 => json!({"type": "bfi_answers", "responses": vec![2; rng.random_range(9..=11)]}),
        3 => json!({"type": "training_done"}),
        4 => json!({"type": "post_answers", "answers": [9, 0, 0, 0]}),
        5 => json!({"type": "feedback_skipped"}),
        6 => json!({"type": "choose_post_after_pass"}),
        7 if rng.random_bool(0.3) => json!({"type": "abandon"}),
        _ => json!({"type": "training_done"}),
    }
}

const LEAK_MARKERS: [&str; 11] = [
    "traditional",
    "personality",
    "condition\"",
    "correct_index",
    "extraversion",
    "agreeableness",
    "conscientiousness",
    "neuroticism",
    "openness",
    "dominant",
    "\"trait",
];

fn assert_no_leak(body: &str) {
    let lower = body.to_ascii_lowercase();
    for m in LEAK_MARKERS {
        assert!(!lower.contains(m), "response leaks `{m}`: {body}");
    }
}

/// Drives random sessions through HTTP and directly through the state
/// machine in lockstep; scans every response for leaked fields.
#[tokio::test]
async fn api_matches_state_machine_and_never_leaks() {
    let app = app(AllocationMode::Alternating);
    let bank = ContentBank::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA91);
    let mut transitions = 0;
    for _ in 0..150 {
        let (status, body) = send(&app, "POST", "/sessions", None, None).await;
        assert_eq!(status, StatusCode::CREATED);
        assert_no_leak(&body);
        let id: String = serde_json::from_str::<Value>(&body).unwrap()["session_id"].as_str().unwrap().into();
        let sid = SessionId::parse(&id).unwrap();
        let start = app.store.get(sid).unwrap();
        let mut direct = SessionRecord::new(sid, start.condition, start.created_at);
        for _ in 0..rng.random_range(1..40) {
            let ev = random_event(&mut rng, direct.state);
            let (status, body) = send(&app, "POST", &format!("/sessions/{id}/events"), Some(&ev.to_string()), None).await;
            assert_no_leak(&body);
            let parsed: SessionEvent = serde_json::from_value(ev.clone()).unwrap();
            match advance(&direct, &parsed, &bank) {
                Ok(next) => {
                    assert_eq!(status, StatusCode::OK, "{ev} in {}: {body}", direct.state);
                    direct = next;
                    transitions += 1;
                }
                Err(e) => assert_ne!(status, StatusCode::OK, "{ev} in {}: direct said {e}", direct.state),
            }
            assert_eq!(app.store.get(sid).unwrap(), direct);
            let (_, step) = send(&app, "GET", &format!("/sessions/{id}/step"), None, None).await;
            assert_no_leak(&step);
            let step: Value = serde_json::from_str(&step).unwrap();
            assert_eq!(step["state"], direct.state.name());
        }
    }
    assert!(transitions > 500, "only {transitions} transitions");
}

#[tokio::test]
async fn every_accepted_event_is_durable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let bank = Arc::new(ContentBank::bundled());
    let store = SessionStore::open(Box::new(FileLog::open(&path).unwrap().without_sync()), bank.clone()).unwrap();
    let app = app_with(store, AllocationMode::Alternating);
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0);
    for _ in 0..10 {
        let id = create(&app).await;
        let sid = SessionId::parse(&id).unwrap();
        for _ in 0..25 {
            let state = app.store.get(sid).unwrap().state;
            let (status, _) = event(&app, &id, random_event(&mut rng, state)).await;
            if status != StatusCode::OK {
                continue;
            }
            // A fresh process replaying the file must see what the client saw.
            let replayed =
                SessionStore::open(Box::new(MemoryLog::from_entries(read_log(&path).unwrap()).unwrap()), bank.clone())
                    .unwrap();
            assert_eq!(replayed.get(sid), app.store.get(sid));
        }
    }
}

#[tokio::test]
async fn concurrent_creation_respects_quota() {
    let app = Arc::new(app(AllocationMode::FixedQuota { first_n_to_traditional: 10 }));
    let mut handles = Vec::new();
    for _ in 0..32 {
        let app = app.clone();
        handles.push(tokio::spawn(async move { create(&app).await }));
    }
    let mut traditional = 0;
    for h in handles {
        let id = h.await.unwrap();
        if condition_of(&app, &id) == Condition::Traditional {
            traditional += 1;
        }
    }
    assert_eq!(traditional, 10);
}
