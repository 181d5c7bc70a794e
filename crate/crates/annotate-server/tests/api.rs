use std::collections::{BTreeMap, BTreeSet};

use adaudit_annotate_server::{router, AppState, ErrorBody, NextTask};
use adaudit_core::annotate::{AnnotationKind, SessionSpec, SessionStore, TaskItem, ADULT, NOT_ADULT};
use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

const ANNOTATORS: [&str; 4] = ["a1", "a2", "a3", "a4"];

fn app() -> (tempfile::TempDir, Router) {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    (dir, router(AppState::new(store), None))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn spec(id: &str, kind: AnnotationKind, n: usize, choices: Vec<String>) -> SessionSpec {
    SessionSpec {
        session_id: id.into(),
        kind,
        items: (0..n)
            .map(|i| TaskItem {
                tweet_id: format!("tw{i}"),
                presented_text: format!("ad text number {i}"),
            })
            .collect(),
        choice_set: choices,
        annotators: ANNOTATORS.map(String::from).to_vec(),
        seed: 11,
    }
}

async fn label_all(app: &Router, session: &str, pick: impl Fn(&str, &str) -> String) -> Vec<Value> {
    let mut payloads = Vec::new();
    for a in ANNOTATORS {
        loop {
            let (status, next) = call_json(app, "GET", &format!("/sessions/{session}/next?annotator={a}"), None).await;
            assert_eq!(status, StatusCode::OK);
            payloads.push(next.clone());
            let next: NextTask = serde_json::from_value(next).unwrap();
            let Some(task) = next.task else { break };
            let body = json!({
                "session_id": session,
                "annotator": a,
                "task_id": task.task_id,
                "label": pick(a, &task.presented_text),
            });
            let (status, ack) = call_json(app, "POST", "/labels", Some(body)).await;
            assert_eq!(status, StatusCode::CREATED, "{ack}");
            payloads.push(ack);
        }
    }
    payloads
}

#[tokio::test]
async fn full_session_over_http() {
    let (_dir, app) = app();
    let s = spec("adult-200", AnnotationKind::AdultBinary, 200, vec![ADULT.into(), NOT_ADULT.into()]);
    let (status, created) = call_json(&app, "POST", "/sessions", Some(serde_json::to_value(&s).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["n_tasks"], 200);

    let (status, err) = call_json(&app, "GET", "/sessions/adult-200/agreement", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "incomplete");
    assert!(err["message"].as_str().unwrap().contains("800"));

    label_all(&app, "adult-200", |a, text| {
        let n: usize = text.rsplit(' ').next().unwrap().parse().unwrap();
        // a4 dissents on every tenth item.
        let adult = n.is_multiple_of(2);
        let adult = if a == "a4" && n.is_multiple_of(10) { !adult } else { adult };
        if adult { ADULT.into() } else { NOT_ADULT.into() }
    })
    .await;

    let (status, report) = call_json(&app, "GET", "/sessions/adult-200/agreement", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["n_items"], 200);
    assert_eq!(report["n_annotators"], 4);
    assert!((report["percent_agreement"].as_f64().unwrap() - 0.9).abs() < 1e-12);

    let (status, status_body) = call_json(&app, "GET", "/sessions/adult-200/status", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(status_body["complete"], true);

    let (status, csv) = call(&app, "GET", "/sessions/adult-200/export.csv", None).await;
    assert_eq!(status, StatusCode::OK);
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.starts_with("task_id,tweet_id,kind,annotator,label,labeled_at\n"));
    assert_eq!(csv.lines().count(), 801);
}

#[tokio::test]
async fn errors_map_to_statuses() {
    let (_dir, app) = app();
    let s = spec("s1", AnnotationKind::AdultBinary, 3, vec![ADULT.into(), NOT_ADULT.into()]);
    call_json(&app, "POST", "/sessions", Some(serde_json::to_value(&s).unwrap())).await;

    let (status, body) = call_json(&app, "POST", "/sessions", Some(serde_json::to_value(&s).unwrap())).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::CONFLICT, Some("duplicate_session")));

    let mut empty = spec("s2", AnnotationKind::AdultBinary, 3, vec![ADULT.into()]);
    empty.annotators.clear();
    let (status, body) = call_json(&app, "POST", "/sessions", Some(serde_json::to_value(&empty).unwrap())).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("no_annotators")));

    let (status, body) = call_json(&app, "GET", "/sessions/nope/next?annotator=a1", None).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_session")));

    let (status, body) = call_json(&app, "GET", "/sessions/s1/next?annotator=zz", None).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::FORBIDDEN, Some("unknown_annotator")));

    let label = |task: &str, label: &str| json!({"session_id": "s1", "annotator": "a1", "task_id": task, "label": label});
    let (status, body) = call_json(&app, "POST", "/labels", Some(label("t99999", ADULT))).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_task")));
    let (status, body) = call_json(&app, "POST", "/labels", Some(label("t00000", "maybe"))).await;
    assert_eq!(
        (status, body["error"].as_str()),
        (StatusCode::UNPROCESSABLE_ENTITY, Some("label_not_in_choice_set"))
    );
    let (status, _) = call_json(&app, "POST", "/labels", Some(label("t00000", ADULT))).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = call_json(&app, "POST", "/labels", Some(label("t00000", NOT_ADULT))).await;
    assert_eq!((status, body["error"].as_str()), (StatusCode::CONFLICT, Some("already_labeled")));
    let parsed: ErrorBody = serde_json::from_value(body).unwrap();
    assert!(parsed.message.contains("t00000"));

    let (status, _) = call(&app, "POST", "/labels", Some(json!({"session_id": "s1", "extra": 1}))).await;
    assert!(status.is_client_error());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_duplicate_submissions_accept_exactly_one() {
    let (dir, app) = app();
    let s = spec("race", AnnotationKind::AdultBinary, 5, vec![ADULT.into(), NOT_ADULT.into()]);
    call_json(&app, "POST", "/sessions", Some(serde_json::to_value(&s).unwrap())).await;
    let mut handles = Vec::new();
    for a in ANNOTATORS {
        for task in 0..5 {
            for attempt in 0..4 {
                let app = app.clone();
                handles.push(tokio::spawn(async move {
                    let label = if attempt % 2 == 0 { ADULT } else { NOT_ADULT };
                    let body = json!({
                        "session_id": "race",
                        "annotator": a,
                        "task_id": format!("t{task:05}"),
                        "label": label,
                    });
                    call(&app, "POST", "/labels", Some(body)).await.0
                }));
            }
        }
    }
    let mut created = 0;
    let mut conflicts = 0;
    for h in handles {
        match h.await.unwrap() {
            StatusCode::CREATED => created += 1,
            StatusCode::CONFLICT => conflicts += 1,
            other => panic!("unexpected {other}"),
        }
    }
    assert_eq!((created, conflicts), (20, 60));
    // The log on disk holds exactly the accepted labels.
    let log = std::fs::read_to_string(dir.path().join("race/labels.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 20);
    let (_, status) = call_json(&app, "GET", "/sessions/race/status", None).await;
    assert_eq!(status["complete"], true);
}

fn collect_keys(v: &Value, keys: &mut BTreeSet<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                keys.insert(k.clone());
                collect_keys(child, keys);
            }
        }
        Value::Array(items) => items.iter().for_each(|c| collect_keys(c, keys)),
        _ => {}
    }
}

#[tokio::test]
async fn blind_session_payloads_never_reveal_model_labels() {
    let (_dir, app) = app();
    // Hidden assignments live only in the test; the session knows the
    // cluster list but not which cluster any ad came from.
    let hidden: BTreeMap<String, String> = (0..12).map(|i| (format!("tw{i}"), format!("cluster-{}", i % 3))).collect();
    let choices: Vec<String> = (0..3).map(|c| format!("cluster-{c}")).collect();
    let s = spec("blind", AnnotationKind::ClusterBlind, 12, choices.clone());
    call_json(&app, "POST", "/sessions", Some(serde_json::to_value(&s).unwrap())).await;

    let mut payloads = label_all(&app, "blind", |_, text| {
        let n: usize = text.rsplit(' ').next().unwrap().parse().unwrap();
        hidden[&format!("tw{n}")].clone()
    })
    .await;
    payloads.push(call_json(&app, "GET", "/sessions", None).await.1);
    payloads.push(call_json(&app, "GET", "/sessions/blind/status", None).await.1);
    payloads.push(call_json(&app, "GET", "/sessions/blind/agreement", None).await.1);

    let allowed: BTreeSet<&str> = [
        "session_id", "annotator", "done", "total", "task", "task_id", "kind", "presented_text",
        "choice_set", "progress", "label", "labeled_at", "n_tasks", "annotators", "complete",
        "n_items", "n_annotators", "percent_agreement", "pairwise_agreement", "fleiss_kappa",
        "per_category_marginals", "cluster-0", "cluster-1", "cluster-2",
    ]
    .into_iter()
    .collect();
    let mut keys = BTreeSet::new();
    for p in &payloads {
        collect_keys(p, &mut keys);
        // Every task offers the same list in the same order, so neither
        // content nor order hints at the model's answer.
        if let Some(task) = p.get("task").filter(|t| !t.is_null()) {
            assert_eq!(task["choice_set"], json!(choices));
        }
    }
    let unexpected: Vec<&String> = keys.iter().filter(|k| !allowed.contains(k.as_str())).collect();
    assert!(unexpected.is_empty(), "unexpected payload fields: {unexpected:?}");
    assert!(!keys.contains("tweet_id"));
}

#[tokio::test]
async fn store_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(SessionStore::open(dir.path()).unwrap()), None);
    let s = spec("keep", AnnotationKind::FpReview, 4, vec!["false_positive".into(), "true_positive".into()]);
    call_json(&app, "POST", "/sessions", Some(serde_json::to_value(&s).unwrap())).await;
    let (_, first) = call_json(&app, "GET", "/sessions/keep/next?annotator=a2", None).await;
    let task_id = first["task"]["task_id"].as_str().unwrap().to_string();
    let body = json!({"session_id": "keep", "annotator": "a2", "task_id": task_id, "label": "true_positive"});
    call_json(&app, "POST", "/labels", Some(body)).await;
    drop(app);

    let app = router(AppState::new(SessionStore::open(dir.path()).unwrap()), None);
    let (_, next) = call_json(&app, "GET", "/sessions/keep/next?annotator=a2", None).await;
    assert_eq!(next["done"], 1);
    assert_ne!(next["task"]["task_id"].as_str().unwrap(), task_id);
}

#[tokio::test]
async fn serves_static_ui() {
    let dir = tempfile::tempdir().unwrap();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>ui</html>").unwrap();
    let app = router(AppState::new(SessionStore::open(dir.path()).unwrap()), Some(ui.path()));
    let (status, body) = call(&app, "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>ui</html>");
    let (status, _) = call_json(&app, "GET", "/sessions", None).await;
    assert_eq!(status, StatusCode::OK);
}
