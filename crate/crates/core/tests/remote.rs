mod common;

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::http::StatusCode;
use axum::routing::post;
use axum::Json;
use serde_json::json;

use common::{app, fixture, oracle, test_case};
use sail::eval::judge;
use sail::planner::{migrate_sail, Outcome, PlannerConfig};
use sail::reasoner::{HeuristicBackend, Reasoner, RemoteBackend, RemoteConfig};
use sail::sim::reset;

/// Answers each request with the next queued status and content.
struct Stub {
    url: String,
    hits: Arc<Mutex<usize>>,
    _rt: tokio::runtime::Runtime,
}

fn stub(script: Vec<(u16, String)>) -> Stub {
    let queue = Arc::new(Mutex::new(VecDeque::from(script)));
    let hits = Arc::new(Mutex::new(0));
    let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(1).enable_all().build().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let (q, h) = (queue.clone(), hits.clone());
    let router = axum::Router::new().route(
        "/v1/chat/completions",
        post(move |Json(_body): Json<serde_json::Value>| {
            let (q, h) = (q.clone(), h.clone());
            async move {
                *h.lock().unwrap() += 1;
                let (status, content) = q.lock().unwrap().pop_front().unwrap_or((400, "exhausted".into()));
                let status = StatusCode::from_u16(status).unwrap();
                if status.is_success() {
                    (status, Json(json!({"choices": [{"message": {"role": "assistant", "content": content}}]})))
                } else {
                    (status, Json(json!({"error": content})))
                }
            }
        }),
    );
    rt.spawn(async move { axum::serve(listener, router).await.unwrap() });
    Stub { url, hits, _rt: rt }
}

fn reference_replies() -> Vec<String> {
    let cfg = PlannerConfig::default();
    let mut session = reset(&app("fox_news"));
    let mut reasoner = Reasoner::new(Arc::new(HeuristicBackend::new(cfg.heuristic())));
    let trace = migrate_sail(&test_case("abc_font_then_story"), &mut session, &mut reasoner, &cfg);
    trace.transcript.records().iter().map(|r| r.raw.clone()).collect()
}

fn remote(url: &str, retries: u32) -> Reasoner {
    let mut cfg = RemoteConfig::new(url, "stub");
    cfg.max_retries = retries;
    cfg.backoff = Duration::from_millis(1);
    Reasoner::new(Arc::new(RemoteBackend::new(cfg).unwrap()))
}

#[test]
fn server_errors_are_retried() {
    let replies = reference_replies();
    let mut script = vec![(500, "overloaded".to_string()), (429, "slow down".to_string())];
    script.extend(replies.iter().map(|r| (200, r.clone())));
    let s = stub(script);
    let fox = app("fox_news");
    let mut session = reset(&fox);
    let cfg = PlannerConfig::default();
    let trace = migrate_sail(&test_case("abc_font_then_story"), &mut session, &mut remote(&s.url, 2), &cfg);
    assert_eq!(trace.outcome, Outcome::GoalReached);
    assert!(judge(&oracle("news_font_story"), &fox, &trace, &session.state()).unwrap().passed());
    assert_eq!(*s.hits.lock().unwrap(), replies.len() + 2);
}

#[test]
fn client_errors_end_the_run() {
    let s = stub(vec![(401, "bad key".into()), (200, "unused".into())]);
    let mut session = reset(&app("fox_news"));
    let cfg = PlannerConfig::default();
    let trace = migrate_sail(&test_case("abc_font_then_story"), &mut session, &mut remote(&s.url, 3), &cfg);
    assert!(matches!(trace.outcome, Outcome::Error { .. }), "{}", trace.outcome);
    assert!(trace.events.is_empty());
    assert_eq!(*s.hits.lock().unwrap(), 1);
}

#[test]
fn cli_migrates_through_a_remote_reasoner() {
    let s = stub(reference_replies().into_iter().map(|r| (200, r)).collect());
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("remote");
    let args = [
        "sail".into(),
        "migrate".into(),
        "--source".into(),
        fixture("tests/abc_font_then_story.json").into_os_string(),
        "--app".into(),
        fixture("apps/fox_news.json").into_os_string(),
        "--oracle".into(),
        fixture("oracles/news_font_story.json").into_os_string(),
        "--reasoner".into(),
        "remote".into(),
        "--reasoner-url".into(),
        s.url.clone().into(),
        "--reasoner-model".into(),
        "stub".into(),
        "--out".into(),
        out.clone().into_os_string(),
    ];
    assert_eq!(sail::cli::run(args.iter().cloned()), sail::cli::EXIT_OK);
    let transcript = std::fs::read_to_string(out.join("transcript.jsonl")).unwrap();
    assert!(transcript.lines().count() >= 4);
}
