mod common;

use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use whim::config::Settings;
use whim::service::{router, AppState};

fn app_with(settings: Settings) -> Router {
    router(AppState::new(settings).unwrap())
}

fn app() -> Router {
    let mut s = Settings::default();
    s.service.workers = 2;
    app_with(s)
}

async fn send(app: &Router, method: Method, uri: &str, body: Body, content_type: &str) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, content_type)
        .body(body)
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b) = send(app, Method::GET, uri, Body::empty(), "application/json").await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b) = send(app, Method::POST, uri, Body::from(body.to_string()), "application/json").await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn upload(app: &Router, csv: &str) -> String {
    let (s, b) = send(app, Method::POST, "/datasets", Body::from(csv.to_owned()), "text/csv").await;
    assert_eq!(s, StatusCode::CREATED, "{}", String::from_utf8_lossy(&b));
    let v: Value = serde_json::from_slice(&b).unwrap();
    v["dataset_id"].as_str().unwrap().to_owned()
}

async fn wait_for(app: &Router, job_id: &str) -> Value {
    for _ in 0..6000 {
        let (s, v) = get(app, &format!("/jobs/{job_id}")).await;
        assert_eq!(s, StatusCode::OK);
        match v["status"].as_str().unwrap() {
            "done" | "failed" => return v,
            _ => tokio::time::sleep(Duration::from_millis(10)).await,
        }
    }
    panic!("job {job_id} did not finish");
}

#[tokio::test]
async fn health_and_unknown_route() {
    let app = app();
    let (s, v) = get(&app, "/healthz").await;
    assert_eq!((s, v), (StatusCode::OK, json!({"status": "ok"})));
    let (s, v) = get(&app, "/nope").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
}

#[tokio::test]
async fn upload_describe_delete() {
    let app = app();
    let csv = common::outage_csv(200, 1);
    let (s, b) = send(&app, Method::POST, "/datasets", Body::from(csv.clone()), "text/csv").await;
    assert_eq!(s, StatusCode::CREATED);
    let created: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(created["n_rows"], 200);
    let names: Vec<&str> = created["columns"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["region", "cause", "size", "month", "minutes"]);
    assert_eq!(created["columns"][2]["kind"], "numeric");
    let id = created["dataset_id"].as_str().unwrap();

    let (s, info) = get(&app, &format!("/datasets/{id}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(info, created);

    let (s, cols) = get(&app, &format!("/datasets/{id}/columns")).await;
    assert_eq!(s, StatusCode::OK);
    let cause = &cols["columns"][1];
    assert_eq!(cause["name"], "cause");
    let total: f64 = cause["values"].as_array().unwrap().iter().map(|v| v["current_fraction"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(cols["columns"][2]["bucketed"], true);
    assert_eq!(cols["columns"][2]["values"].as_array().unwrap().len(), 10);

    let (s, _) = send(&app, Method::DELETE, &format!("/datasets/{id}"), Body::empty(), "text/plain").await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, v) = get(&app, &format!("/datasets/{id}")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_dataset");
}

#[tokio::test]
async fn multipart_upload() {
    let app = app();
    let csv = common::outage_csv(50, 2);
    let boundary = "XBOUNDARYX";
    let body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"d.csv\"\r\nContent-Type: text/csv\r\n\r\n{csv}\r\n--{boundary}--\r\n"
    );
    let (s, b) = send(&app, Method::POST, "/datasets", Body::from(body), &format!("multipart/form-data; boundary={boundary}")).await;
    assert_eq!(s, StatusCode::CREATED, "{}", String::from_utf8_lossy(&b));
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["n_rows"], 50);
}

#[tokio::test]
async fn whatif_reports_and_errors() {
    let app = app();
    let id = upload(&app, &common::outage_csv(400, 3)).await;
    let uri = format!("/datasets/{id}/whatif");

    let (s, v) = post(&app, &uri, json!({"column": "cause", "value": "storm", "fraction": 0.0, "metric": "minutes", "n_sample": 10})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["metric"], "minutes");
    assert!(v["whatif_stats"]["mean"].as_f64().unwrap() < 125.0);
    assert!(v["baseline_stats"]["mean"].as_f64().unwrap() > 150.0);
    assert!(v["ks_p_value"].as_f64().unwrap() < 0.05);

    let (s, again) = post(&app, &uri, json!({"column": "cause", "value": "storm", "fraction": 0.0, "metric": "minutes", "n_sample": 10})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, again);

    let (s, v) = post(&app, &uri, json!({"column": "colour", "value": "storm", "fraction": 0.0, "metric": "minutes"})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_column");
    assert!(v["message"].as_str().unwrap().contains("colour"));

    let (s, v) = post(&app, &uri, json!({"column": "cause", "value": "flood", "fraction": 0.0, "metric": "minutes"})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_value");

    let (s, v) = post(&app, &uri, json!({"column": "cause", "value": "storm", "fraction": 0.0})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "usage");

    let (s, v) = post(&app, &uri, json!({"column": "cause", "value": "storm", "fraction": 1.5, "metric": "minutes"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");

    let (s, b) = send(&app, Method::POST, &uri, Body::from("{not json"), "application/json").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["code"], "invalid_json");

    let (s, v) = post(&app, "/datasets/ds_missing/whatif", json!({})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_dataset");
}

#[tokio::test]
async fn margins_curve() {
    let app = app();
    let id = upload(&app, &common::outage_csv(300, 4)).await;
    let (s, v) = post(
        &app,
        &format!("/datasets/{id}/margins"),
        json!({"column": "cause", "value": "storm", "metric": "minutes", "n_sample": 8, "iterations": 8}),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let curve = v["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 11);
    let first = curve[0]["metric_mean"].as_f64().unwrap();
    let last = curve[10]["metric_mean"].as_f64().unwrap();
    assert!(last - first > 150.0);
    assert_eq!(v["optimization"]["x_star"], 0.0);
}

#[tokio::test]
async fn recommendation_job_matches_cli() {
    let csv = common::outage_csv(300, 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, &csv).unwrap();

    let app = app();
    let id = upload(&app, &csv).await;
    let body = json!({"metric": "minutes", "seed": 11, "n_sample": 6, "iterations": 6});
    let (s, v) = post(&app, &format!("/datasets/{id}/recommendations"), body).await;
    assert_eq!(s, StatusCode::ACCEPTED, "{v}");
    let job_id = v["job_id"].as_str().unwrap().to_owned();
    let done = wait_for(&app, &job_id).await;
    assert_eq!(done["status"], "done", "{done}");
    assert_eq!(done["kind"], "recommendations");
    let result = &done["result"];

    let out = std::process::Command::new(env!("CARGO_BIN_EXE_whim"))
        .args(["--seed", "11", "--metric", "minutes", "recommend", "--n-sample", "6", "--iterations", "6", "--data"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cli: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result, &cli);

    let total = result["enumerated"].as_u64().unwrap() as usize;
    assert_eq!(result["recommendations"][0]["scenario"]["column"], "cause");

    let (s, b) = send(&app, Method::GET, &format!("/jobs/{job_id}/events"), Body::empty(), "").await;
    assert_eq!(s, StatusCode::OK);
    let lines: Vec<Value> = String::from_utf8(b).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), total);
    assert!(lines.iter().all(|e| e["total"] == total));
    let mut seen: Vec<u64> = lines.iter().map(|e| e["index"].as_u64().unwrap()).collect();
    seen.sort_unstable();
    assert_eq!(seen, (0..total as u64).collect::<Vec<_>>());

    let (_, tail) = send(&app, Method::GET, &format!("/jobs/{job_id}/events?from=3"), Body::empty(), "").await;
    let tail: Vec<&str> = std::str::from_utf8(&tail).unwrap().lines().collect();
    assert_eq!(tail.len(), total - 3);

    let (s, v) = get(&app, "/jobs/job_missing").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_job");
}

#[tokio::test]
async fn recommendation_request_is_validated_up_front() {
    let app = app();
    let id = upload(&app, &common::outage_csv(100, 6)).await;
    let (s, v) = post(&app, &format!("/datasets/{id}/recommendations"), json!({"metric": "minutes", "include": ["nope"]})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_column");
    let (s, v) = post(&app, &format!("/datasets/{id}/recommendations"), json!({"metric": "region"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
}

#[tokio::test]
async fn backtest_sync_and_async_agree() {
    let app = app();
    let id = upload(&app, &common::outage_csv(600, 7)).await;
    let uri = format!("/datasets/{id}/backtest");
    let req = json!({"time_column": "month", "split": "2020-07", "metric": "minutes", "columns": ["cause"], "n_sample": 8});
    let (s, sync) = post(&app, &uri, req.clone()).await;
    assert_eq!(s, StatusCode::OK, "{sync}");
    assert_eq!(sync["entries"].as_array().unwrap().len(), 3);
    assert!(sync["mae"].as_f64().unwrap() < 0.1);

    let mut async_req = req;
    async_req["async"] = json!(true);
    let (s, v) = post(&app, &uri, async_req).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let done = wait_for(&app, v["job_id"].as_str().unwrap()).await;
    assert_eq!(done["status"], "done");
    assert_eq!(done["result"], sync);

    let (s, v) = post(&app, &uri, json!({"time_column": "month", "split": "1999-01", "metric": "minutes"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{v}");
    assert_eq!(v["code"], "invalid_argument");
}

#[tokio::test]
async fn body_and_row_limits() {
    let mut s = Settings::default();
    s.service.max_body_bytes = 2_000;
    let app = app_with(s);
    let (status, b) = send(&app, Method::POST, "/datasets", Body::from(common::outage_csv(200, 8)), "text/csv").await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["code"], "payload_too_large");

    let mut s = Settings::default();
    s.service.max_rows = 10;
    let app = app_with(s);
    let (status, b) = send(&app, Method::POST, "/datasets", Body::from(common::outage_csv(20, 8)), "text/csv").await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert_eq!(v["code"], "too_many_rows");

    let (status, b) = send(&app, Method::POST, "/datasets", Body::from("a,b\n1,2\n3\n"), "text/csv").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert!(v["message"].as_str().unwrap().contains("row 2"), "{v}");
}
