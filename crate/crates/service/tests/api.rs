use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use fodot_core::config::Config;
use fodot_service::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const VOTING: &str = "vocabulary V { type Age := {0..120} age: () -> Age vote: () -> Bool }
                      theory T:V { vote() <=> 18 =< age(). }";

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, v)
}

fn app() -> Router {
    router(AppState::new(Config::default()))
}

async fn new_session(app: &Router, source: &str) -> (String, String) {
    let (st, kb) = call(app, Method::POST, "/kb", Some(json!({ "source": source }))).await;
    assert_eq!(st, StatusCode::CREATED, "{kb}");
    let kb_id = kb["kb_id"].as_str().unwrap().to_string();
    let (st, s) = call(app, Method::POST, "/session", Some(json!({ "kb_id": kb_id }))).await;
    assert_eq!(st, StatusCode::CREATED, "{s}");
    (kb_id, s["session_id"].as_str().unwrap().to_string())
}

fn atom<'a>(state: &'a Value, text: &str) -> &'a Value {
    state["atoms"]
        .as_array()
        .unwrap()
        .iter()
        .find(|a| a["atom"] == text)
        .unwrap_or_else(|| panic!("no atom {text}"))
}

fn term<'a>(state: &'a Value, text: &str) -> &'a Value {
    state["terms"].as_array().unwrap().iter().find(|t| t["term"] == text).unwrap()
}

fn labels(explanation: &Value) -> Vec<String> {
    let mut l: Vec<String> = explanation["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["label"].as_str().unwrap().to_string())
        .collect();
    l.sort();
    l
}

#[tokio::test]
async fn meta_describes_the_vocabulary() {
    let app = app();
    let (st, kb) = call(&app, Method::POST, "/kb", Some(json!({ "source": VOTING }))).await;
    assert_eq!(st, StatusCode::CREATED);
    let id = kb["kb_id"].as_str().unwrap();
    let (st, meta) = call(&app, Method::GET, &format!("/kb/{id}/meta"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(meta, kb["meta"]);
    let names: Vec<&str> = meta["symbols"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, vec!["age", "vote"]);
    let age = &meta["symbols"][0];
    assert_eq!(age["signature"], "() -> Age");
    assert_eq!(age["extension"].as_array().unwrap().len(), 121);
    assert_eq!(age["terms"][0]["status"], "unknown");
    assert_eq!(meta["symbols"][1]["extension"], json!([false, true]));
}

#[tokio::test]
async fn voting_consultation() {
    let app = app();
    let (_, sid) = new_session(&app, VOTING).await;
    let edit = format!("/session/{sid}/edit");
    let (st, r) = call(&app, Method::POST, &edit, Some(json!({ "action": "assert", "term": "age()", "value": 17 }))).await;
    assert_eq!(st, StatusCode::OK, "{r}");
    assert_eq!(atom(&r["state"], "vote()")["status"], "propagated_false");
    assert_eq!(term(&r["state"], "vote()")["status"], json!({ "value": false }));
    assert_eq!(term(&r["state"], "age()")["status"], "user");
    let changed: Vec<&str> = r["changed"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert!(changed.contains(&"vote()"));
    assert!(changed.contains(&"age() = 17"));

    let (st, e) = call(&app, Method::POST, &format!("/session/{sid}/explain"), Some(json!({ "literal": "vote() = false" }))).await;
    assert_eq!(st, StatusCode::OK, "{e}");
    assert_eq!(labels(&e["explanation"]), vec!["A1", "F:age()", "L"]);

    let (st, s) = call(&app, Method::GET, &format!("/session/{sid}/state"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(s, r["state"]);

    let (st, r) = call(&app, Method::POST, &edit, Some(json!({ "action": "retract", "term": "age()" }))).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(atom(&r["state"], "vote()")["status"], "unknown");
}

#[tokio::test]
async fn conflicting_assert_returns_409_with_explanation() {
    let app = app();
    let (_, sid) = new_session(&app, VOTING).await;
    let edit = format!("/session/{sid}/edit");
    call(&app, Method::POST, &edit, Some(json!({ "action": "assert", "term": "vote()", "value": true }))).await;
    let (_, before) = call(&app, Method::GET, &format!("/session/{sid}/state"), None).await;
    let (st, r) = call(&app, Method::POST, &edit, Some(json!({ "action": "assert", "term": "age()", "value": "17" }))).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(r["error"], "conflict");
    assert_eq!(labels(&r["explanation"]), vec!["A1", "F:age()", "F:vote()"]);
    let (_, after) = call(&app, Method::GET, &format!("/session/{sid}/state"), None).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn optimize_and_models() {
    let app = app();
    let (_, sid) = new_session(&app, VOTING).await;
    call(&app, Method::POST, &format!("/session/{sid}/edit"), Some(json!({ "action": "assert", "term": "vote()", "value": true }))).await;
    let (st, r) = call(&app, Method::POST, &format!("/session/{sid}/optimize"), Some(json!({ "term": "age()", "direction": "minimize" }))).await;
    assert_eq!(st, StatusCode::OK, "{r}");
    assert_eq!(r["value"], 18);
    assert_eq!(r["model"]["age()"], 18);
    let (st, r) = call(&app, Method::POST, &format!("/session/{sid}/models"), Some(json!({ "max": 5 }))).await;
    assert_eq!(st, StatusCode::OK);
    let ms = r["models"].as_array().unwrap();
    assert_eq!(ms.len(), 5);
    assert!(ms.iter().all(|m| m["vote()"] == true && m["age()"].as_i64().unwrap() >= 18));
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let app = app();
    let (st, r) = call(&app, Method::POST, "/kb", Some(json!({ "source": "vocabulary V { p: () -> }" }))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r["error"], "parse");
    let (st, r) = call(&app, Method::POST, "/kb", Some(json!({ "source": "vocabulary V { p: () -> Bool } theory T:V { q(). }" }))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r["error"], "type");
    let (st, r) = call(&app, Method::POST, "/kb", Some(json!({ "source": "vocabulary V { p: () -> Bool } theory T:V { p() & ~p(). }" }))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r["error"], "inconsistent");
    let (st, _) = call(&app, Method::POST, "/kb", Some(json!({ "text": "x" }))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let (st, _) = call(&app, Method::GET, "/kb/nope/meta", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = call(&app, Method::POST, "/session", Some(json!({ "kb_id": "nope" }))).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = call(&app, Method::GET, "/session/nope/state", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);

    let (_, sid) = new_session(&app, VOTING).await;
    let edit = format!("/session/{sid}/edit");
    for body in [
        json!({ "action": "assert", "term": "age()", "value": 500 }),
        json!({ "action": "assert", "term": "age()" }),
        json!({ "action": "assert", "term": "height()", "value": 1 }),
        json!({ "action": "retract", "term": "age()" }),
        json!({ "action": "toggle", "term": "age()" }),
    ] {
        let (st, r) = call(&app, Method::POST, &edit, Some(body.clone())).await;
        assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY, "{body} gave {r}");
    }
    let (st, _) = call(&app, Method::POST, &format!("/session/{sid}/explain"), Some(json!({ "literal": "vote()" }))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let (st, _) = call(&app, Method::DELETE, &format!("/session/{sid}"), None).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    let (st, _) = call(&app, Method::GET, &format!("/session/{sid}/state"), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn solver_failure_is_500() {
    let mut config = Config::default();
    config.solver.command = "/nonexistent/solver".into();
    let app = router(AppState::new(config));
    let (st, r) = call(&app, Method::POST, "/kb", Some(json!({ "source": VOTING }))).await;
    assert_eq!(st, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(r["error"], "solver");
}

#[tokio::test]
async fn replay_gives_identical_state() {
    let app = app();
    let src = "vocabulary V { type P := {a, b, c} likes: P -> Bool n: () -> Int }
               theory T:V { likes(a) => likes(b). n() = #{x in P: likes(x)}. }";
    let edits = [
        json!({ "action": "assert", "term": "likes(a)", "value": true }),
        json!({ "action": "assert", "term": "likes(c)", "value": false }),
        json!({ "action": "retract", "term": "likes(a)" }),
        json!({ "action": "assert", "term": "n()", "value": 0 }),
    ];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let (_, sid) = new_session(&app, src).await;
        let mut bodies = Vec::new();
        for e in &edits {
            let (st, r) = call(&app, Method::POST, &format!("/session/{sid}/edit"), Some(e.clone())).await;
            assert_eq!(st, StatusCode::OK, "{r}");
            bodies.push(r.to_string());
        }
        runs.push(bodies);
    }
    assert_eq!(runs[0], runs[1]);
}

#[tokio::test]
async fn idle_sessions_are_swept() {
    let state = AppState::new(Config::default());
    let app = router(state.clone());
    new_session(&app, VOTING).await;
    assert_eq!(state.session_count(), 1);
    assert_eq!(state.sweep(Duration::from_secs(3600)), 0);
    std::thread::sleep(Duration::from_millis(20));
    assert_eq!(state.sweep(Duration::from_millis(1)), 1);
    assert_eq!(state.session_count(), 0);
}

#[tokio::test]
async fn session_limit_is_enforced() {
    let mut config = Config::default();
    config.service.max_sessions = 1;
    let app = router(AppState::new(config));
    let (kb_id, _) = new_session(&app, VOTING).await;
    let (st, _) = call(&app, Method::POST, "/session", Some(json!({ "kb_id": kb_id }))).await;
    assert_eq!(st, StatusCode::SERVICE_UNAVAILABLE);
}
