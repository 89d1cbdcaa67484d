use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use senscommon::annotation::{
    fleiss_kappa, generate_question, read_rating_matrix_csv, AnnotationQuestion, Payload, Relation,
};
use senscommon_service::{router, AnnotationStore, AppState, Clock, StoreOptions};
use serde_json::{json, Value};
use tower::ServiceExt;

fn questions(n: usize) -> Vec<AnnotationQuestion> {
    (0..n)
        .map(|i| {
            let (relation, payload) = if i % 3 == 2 {
                (
                    Relation::SoundScene,
                    Payload::Scene {
                        scene: format!("scene{i}"),
                        sound: format!("noise{i}"),
                    },
                )
            } else {
                (
                    Relation::SoundSource,
                    Payload::Pair {
                        sound: format!("sound{i}"),
                        source: format!("source{i}"),
                    },
                )
            };
            generate_question(payload, relation, Some(format!("context {i}"))).unwrap()
        })
        .collect()
}

fn ticking_clock() -> Clock {
    let t = Arc::new(AtomicU64::new(1));
    Arc::new(move || t.fetch_add(1, Ordering::SeqCst))
}

fn app(dir: &std::path::Path, n: usize) -> Router {
    let store = AnnotationStore::create(dir, &questions(n), StoreOptions::default()).unwrap();
    router(AppState::new(store, ticking_clock()), None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
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
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn ids(v: &Value) -> Vec<String> {
    v["questions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| q["id"].as_str().unwrap().to_string())
        .collect()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_workers_get_disjoint_batches() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 40);
    let tasks: Vec<_> = (0..8)
        .map(|w| {
            let app = app.clone();
            tokio::spawn(
                async move { json_call(&app, "GET", &format!("/api/questions/next?worker=w{w}&n=5"), None).await },
            )
        })
        .collect();
    let mut seen = HashSet::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        let batch = ids(&body);
        assert_eq!(batch.len(), 5);
        for id in batch {
            assert!(seen.insert(id), "question served twice");
        }
    }
    assert_eq!(seen.len(), 40);
    let (_, rest) = json_call(&app, "GET", "/api/questions/next?worker=late&n=5", None).await;
    assert!(ids(&rest).is_empty());
}

#[tokio::test]
async fn answer_validation_and_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 3);
    let (_, batch) = json_call(&app, "GET", "/api/questions/next?worker=a&n=1", None).await;
    let id = ids(&batch)[0].clone();

    let (s, body) = json_call(
        &app,
        "POST",
        "/api/answers",
        Some(json!({"question_id": id, "worker_id": "a", "choice": "maybe"})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["allowed"], json!(["yes", "no", "notsure"]));

    let (s, _) = json_call(
        &app,
        "POST",
        "/api/answers",
        Some(json!({"question_id": "0000", "worker_id": "a", "choice": "yes"})),
    )
    .await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, _) = call(&app, "GET", "/api/questions/next?n=2", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, ack) = json_call(
        &app,
        "POST",
        "/api/answers",
        Some(json!({"question_id": id, "worker_id": "a", "choice": "yes"})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(ack["responses"], 1);
    let (_, ack) = json_call(
        &app,
        "POST",
        "/api/answers",
        Some(json!({"question_id": id, "worker_id": "a", "choice": "no"})),
    )
    .await;
    assert_eq!(
        (ack["responses"].clone(), ack["choice"].clone()),
        (json!(1), json!("no"))
    );
}

#[tokio::test]
async fn stats_kappa_matches_the_exported_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path(), 30);
    let (_, empty) = json_call(&app, "GET", "/api/stats", None).await;
    assert!(empty["relations"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["kappa"].is_null()));

    let choices = ["yes", "no", "notsure"];
    for (w, worker) in ["a", "b", "c"].iter().enumerate() {
        loop {
            let (_, batch) = json_call(&app, "GET", &format!("/api/questions/next?worker={worker}&n=7"), None).await;
            let batch = ids(&batch);
            if batch.is_empty() {
                break;
            }
            for id in batch {
                let pick = (id.as_bytes()[0] as usize + w * (id.as_bytes()[1] as usize % 2)) % 3;
                let body = json!({"question_id": id, "worker_id": worker, "choice": choices[pick]});
                let (s, _) = call(&app, "POST", "/api/answers", Some(body)).await;
                assert_eq!(s, StatusCode::OK);
            }
        }
    }
    let (_, stats) = json_call(&app, "GET", "/api/stats", None).await;
    let (_, csv) = call(&app, "GET", "/api/export", None).await;
    let groups = read_rating_matrix_csv(csv.as_slice()).unwrap();
    assert_eq!(groups.len(), 2);
    for (relation, matrix) in groups {
        let relation = relation.unwrap();
        let live = stats["relations"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["relation"] == relation.as_str())
            .unwrap();
        assert_eq!(live["fully_answered"].as_u64().unwrap() as usize, matrix.len());
        assert_eq!(live["kappa"].as_f64().unwrap(), fleiss_kappa(&matrix).unwrap());
    }
}

#[tokio::test]
async fn answers_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app1 = app(dir.path(), 6);
    let (_, batch) = json_call(&app1, "GET", "/api/questions/next?worker=a&n=4", None).await;
    for id in ids(&batch) {
        call(
            &app1,
            "POST",
            "/api/answers",
            Some(json!({"question_id": id, "worker_id": "a", "choice": "yes"})),
        )
        .await;
    }
    let (_, before) = call(&app1, "GET", "/api/stats", None).await;
    drop(app1);
    let store = AnnotationStore::open(dir.path(), StoreOptions::default()).unwrap();
    let app2 = router(AppState::new(store, ticking_clock()), None);
    let (_, after) = call(&app2, "GET", "/api/stats", None).await;
    assert_eq!(before, after);
    let (_, batch) = json_call(&app2, "GET", "/api/questions/next?worker=a&n=10", None).await;
    assert_eq!(ids(&batch).len(), 2);
}

#[tokio::test]
async fn static_files_are_served_at_the_root() {
    let dir = tempfile::tempdir().unwrap();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>ui</html>").unwrap();
    let store = AnnotationStore::create(dir.path(), &questions(1), StoreOptions::default()).unwrap();
    let app = router(AppState::new(store, ticking_clock()), Some(ui.path()));
    let (s, body) = call(&app, "GET", "/", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body, b"<html>ui</html>");
}
