use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use tailoredsec_api::{router, AppState, ADMIN_SECRET_HEADER};
use tailoredsec_core::session::{AllocationMode, AllocationPolicy, SessionEvent, SessionId, SessionState};
use tailoredsec_core::store::{ContentBank, FileLog, SessionStore, CSV_HEADER};

fn tailoredsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailoredsec"))
        .args(args)
        .env_remove("TAILOREDSEC_PORT")
        .env_remove("TAILOREDSEC_CONTENT")
        .env_remove("TAILOREDSEC_STORE")
        .env_remove("TAILOREDSEC_ALLOC")
        .env_remove("TAILOREDSEC_ADMIN_SECRET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn open_file_store(path: &Path) -> SessionStore {
    let log = FileLog::open(path).unwrap().without_sync();
    SessionStore::open(Box::new(log), Arc::new(ContentBank::bundled())).unwrap()
}

/// Drives one session to `complete` with the given pre and post answers.
fn run_to_completion(store: &SessionStore, id: SessionId, pre: [i64; 4], post: [i64; 4]) {
    let mut steps = 0;
    loop {
        let record = store.get(id).unwrap();
        let event = match record.state {
            SessionState::Consent => json!({"type": "consent_given"}),
            SessionState::PreAssessment => json!({"type": "pre_answers", "answers": pre}),
            SessionState::PassScreen => json!({"type": "choose_post_after_pass"}),
            SessionState::Bfi10Questionnaire => json!({"type": "bfi_answers", "responses": [2, 4, 2, 4, 2, 4, 2, 4, 2, 4]}),
            SessionState::Training { module } => {
                let m = store.bank().module(module);
                match m.assets.iter().find(|a| !record.training_progress.contains(&a.id)) {
                    Some(a) => json!({"type": "training_progress", "asset_id": a.id}),
                    None => json!({"type": "training_done"}),
                }
            }
            SessionState::PostAssessment => json!({"type": "post_answers", "answers": post}),
            SessionState::Feedback => json!({"type": "feedback_given", "feedback": {
                "usability": 4, "adaptive_content": 3, "se_understanding": 5, "ease_of_use": 4
            }}),
            SessionState::Complete | SessionState::Abandoned => return,
        };
        let event: SessionEvent = serde_json::from_value(event).unwrap();
        store.apply(id, &event).unwrap();
        steps += 1;
        assert!(steps < 50, "session did not finish");
    }
}

#[test]
fn replicate_is_deterministic_and_reports_headline_values() {
    let a = tailoredsec(&["replicate"]);
    let b = tailoredsec(&["replicate"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("Cohen's d = 0.62"), "{text}");
    assert!(text.contains("variance_ratio = 4.19"), "{text}");
    assert!(text.contains("95% CI [1.47, 8.79]"), "{text}");
    assert!(text.contains("100.0% (33/33)"), "{text}");
    assert!(text.contains("77.5% (31/40)"), "{text}");
}

#[test]
fn replicate_json_is_deterministic() {
    let a = tailoredsec(&["replicate", "--json"]);
    let b = tailoredsec(&["replicate", "--json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let ci = &v["primary"]["ci95"];
    let round2 = |x: &Value| (x.as_f64().unwrap() * 100.0).round() / 100.0;
    assert_eq!(round2(&ci[0]), 1.47);
    assert_eq!(round2(&ci[1]), 8.79);
    assert_eq!(round2(&v["primary"]["cohens_d"]), 0.62);
}

#[test]
fn replicate_from_missing_csv_fails() {
    let o = tailoredsec(&["replicate", "--from-csv", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/definitely/not/here.csv"));
}

#[test]
fn score_bfi_neutral_and_open_profiles() {
    let o = tailoredsec(&["score-bfi", "3,3,3,3,3,3,3,3,3,3"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "profile: E=6 A=6 C=6 N=6 O=6\ndominant: Openness\nmodule: SwipeableCards\n"
    );

    let o = tailoredsec(&["score-bfi", "1,5,1,1,1,5,1,5,1,5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("dominant: Openness"), "{text}");
    assert!(text.contains("module: SwipeableCards"), "{text}");
}

#[test]
fn score_bfi_routes_conscientiousness_to_video() {
    // C = 3R + 8 = 10, every other scale 6.
    let o = tailoredsec(&["score-bfi", "3,3,1,3,3,3,3,5,3,3", "--json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dominant"], "conscientiousness");
    assert_eq!(v["module"], "general_awareness_video");
    assert_eq!(v["profile"]["conscientiousness"], 10);
}

#[test]
fn score_bfi_usage_errors_exit_2() {
    for bad in ["3,3,3", "3,3,3,3,3,3,3,3,3,3,3", "0,3,3,3,3,3,3,3,3,3", "3,3,3,3,3,3,3,3,3,x"] {
        let o = tailoredsec(&["score-bfi", bad]);
        assert_eq!(o.status.code(), Some(2), "{bad}: {}", stderr(&o));
    }
    let o = tailoredsec(&["score-bfi"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_empty_store_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    std::fs::write(&log, "").unwrap();
    let out = dir.path().join("out.csv");
    let o = tailoredsec(&["export", "--store", log.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), format!("{CSV_HEADER}\n"));
}

#[test]
fn export_missing_store_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("absent.jsonl");
    let o = tailoredsec(&["export", "--store", log.to_str().unwrap(), "--stdout"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.jsonl"));
}

#[test]
fn export_requires_a_destination() {
    let o = tailoredsec(&["export", "--store", "x.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_one_completed_session() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let id = {
        let store = open_file_store(&log);
        let policy = AllocationPolicy::new(AllocationMode::FixedQuota { first_n_to_traditional: 0 });
        let id = store.create(&policy, chrono::Utc::now()).unwrap().session_id;
        run_to_completion(&store, id, [1, 1, 0, 0], [1, 2, 1, 0]);
        store.flush().unwrap();
        id
    };
    let before = std::fs::read(&log).unwrap();
    let o = tailoredsec(&["export", "--store", log.to_str().unwrap(), "--stdout"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&log).unwrap(), before, "export must not modify the log");

    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    assert_eq!(lines[0], CSV_HEADER);
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row[0], id.to_string());
    assert_eq!(row[1], "personality_conditional");
    assert_eq!(row[2], "20");
    assert_eq!(row[3], "40");
}

#[test]
fn export_reports_corrupt_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    {
        let store = open_file_store(&log);
        let policy = AllocationPolicy::new(AllocationMode::Alternating);
        let id = store.create(&policy, chrono::Utc::now()).unwrap().session_id;
        store.apply(id, &SessionEvent::ConsentGiven).unwrap();
        store.flush().unwrap();
    }
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str("{not json}\n");
    std::fs::write(&log, text).unwrap();
    let o = tailoredsec(&["export", "--store", log.to_str().unwrap(), "--stdout"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[tokio::test]
async fn cli_export_matches_admin_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let store = Arc::new(open_file_store(&log));
    let policy = AllocationPolicy::new(AllocationMode::Alternating);
    let app = router(AppState::new(store.clone(), AllocationPolicy::new(AllocationMode::Alternating), Some("k".into())));

    for i in 0..6 {
        let id = store.create(&policy, chrono::Utc::now()).unwrap().session_id;
        if i % 3 != 2 {
            run_to_completion(&store, id, [1, 1, i % 3, 0], [1, 2, 1, i % 4]);
        } else {
            store.apply(id, &SessionEvent::ConsentGiven).unwrap();
        }
    }
    store.flush().unwrap();

    for (query, args) in [
        ("", vec![]),
        ("?state=complete", vec!["--state", "complete"]),
        ("?condition=traditional", vec!["--condition", "traditional"]),
    ] {
        let req = Request::builder()
            .uri(format!("/admin/export{query}"))
            .header(ADMIN_SECRET_HEADER, "k")
            .body(Body::empty())
            .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        assert_eq!(resp.status(), StatusCode::OK);
        let http = resp.into_body().collect().await.unwrap().to_bytes();

        let mut cli_args = vec!["export", "--store", log.to_str().unwrap(), "--stdout"];
        cli_args.extend(args);
        let o = tailoredsec(&cli_args);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(o.stdout, http.to_vec(), "query `{query}`");
    }
}

#[test]
fn serve_with_missing_bank_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("events.jsonl");
    let o = tailoredsec(&[
        "serve",
        "--content",
        "/no/such/bank.toml",
        "--store",
        store.to_str().unwrap(),
        "--port",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/bank.toml"), "{}", stderr(&o));
}

#[test]
fn serve_with_invalid_bank_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bank = dir.path().join("bank.toml");
    std::fs::write(&bank, "version = 1\n").unwrap();
    let o = tailoredsec(&["serve", "--content", bank.to_str().unwrap(), "--port", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bank.toml"), "{}", stderr(&o));
}

#[test]
fn serve_on_occupied_port_reports_port_in_use() {
    let held = TcpListener::bind("0.0.0.0:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("events.jsonl");
    let o = tailoredsec(&["serve", "--port", &port, "--store", store.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("port_in_use"), "{}", stderr(&o));
}

#[test]
fn serve_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "prot = 9000\n").unwrap();
    let o = tailoredsec(&["serve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn replicate_from_exported_csv() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    {
        let store = open_file_store(&log);
        let policy = AllocationPolicy::new(AllocationMode::Alternating);
        for i in 0..8i64 {
            let id = store.create(&policy, chrono::Utc::now()).unwrap().session_id;
            run_to_completion(&store, id, [1, 1, i % 3, 0], [1, 2, (i / 2) % 2, 0]);
        }
        store.flush().unwrap();
    }
    let csv = dir.path().join("export.csv");
    let o = tailoredsec(&["export", "--store", log.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = tailoredsec(&["replicate", "--from-csv", csv.to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["primary"]["traditional"]["n"], 4);
    assert_eq!(v["primary"]["personality_conditional"]["n"], 4);
    assert_eq!(v["primary"]["traditional"]["mean"], 35.0);
    assert_eq!(v["primary"]["personality_conditional"]["mean"], 35.0);
    assert_eq!(v["primary"]["t"], 0.0);
}
