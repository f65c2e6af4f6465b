use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use strategizer::api::{router, AppState};
use strategizer::ConfigOverrides;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn app() -> Router {
    router(Arc::new(AppState::new(ConfigOverrides::default())))
}

async fn call(app: &Router, method: &str, uri: &str, body: impl Into<Body>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn as_json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

async fn register_pilot(app: &Router) -> String {
    let csv = std::fs::read(fixture("pilot_responses.csv")).unwrap();
    let (status, body) = call(app, "POST", "/api/datasets", csv).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    as_json(&body)["dataset_id"].as_str().unwrap().to_string()
}

fn pilot_plans() -> Value {
    as_json(&std::fs::read(fixture("pilot_plans.json")).unwrap())["plans"].clone()
}

#[tokio::test]
async fn defaults_are_served() {
    let (status, body) = call(&app(), "GET", "/api/defaults", Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    let v = as_json(&body);
    assert_eq!(v["w_c"], json!(2.0));
    assert_eq!(v["sweep_increment"], json!(0.02));
}

#[tokio::test]
async fn dataset_summary_lists_attributes() {
    let app = app();
    let csv = std::fs::read(fixture("pilot_responses.csv")).unwrap();
    let (status, body) = call(&app, "POST", "/api/datasets", csv).await;
    assert_eq!(status, StatusCode::OK);
    let v = as_json(&body);
    assert_eq!(v["record_count"], json!(24));
    assert_eq!(v["dataset_id"].as_str().unwrap().len(), 64);
    assert_eq!(v["attributes"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn rank_puts_plan_one_first() {
    let app = app();
    let id = register_pilot(&app).await;
    let req = json!({"dataset_id": id, "plans": pilot_plans()});
    let (status, body) = call(&app, "POST", "/api/analyses/rank", req.to_string()).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    let v = as_json(&body);
    assert_eq!(v["kind"], json!("rank"));
    let ranking = v["payload"]["ranking"].as_array().unwrap();
    assert_eq!(ranking[0]["plan_id"], json!("Plan_1"));
    assert!(ranking[0]["expected_utility"].as_f64().unwrap() > ranking[1]["expected_utility"].as_f64().unwrap());
}

#[tokio::test]
async fn gonogo_flips_with_config_override() {
    let app = app();
    let id = register_pilot(&app).await;
    for (w_c, want) in [(2.0, "NoGo"), (1.0, "Go")] {
        let req = json!({"dataset_id": id, "plans": pilot_plans(), "config": {"w_c": w_c}, "options": {"plan_id": "Plan_1"}});
        let (status, body) = call(&app, "POST", "/api/analyses/gonogo", req.to_string()).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(as_json(&body)["payload"]["decision"], json!(want));
    }
}

#[tokio::test]
async fn montecarlo_is_byte_identical_and_replayable() {
    let app = app();
    let id = register_pilot(&app).await;
    let req = json!({"dataset_id": id, "plans": pilot_plans(), "config": {"seed": 5}, "options": {"draws": 400}}).to_string();
    let (s1, first) = call(&app, "POST", "/api/analyses/montecarlo", req.clone()).await;
    let (s2, second) = call(&app, "POST", "/api/analyses/montecarlo", req).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(first, second);

    let digest = as_json(&first)["inputs_digest"].as_str().unwrap().to_string();
    let (status, replayed) = call(&app, "GET", &format!("/api/analyses/{digest}"), Body::empty()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(replayed, first);

    let fresh = self::app();
    let id = register_pilot(&fresh).await;
    let req = json!({"dataset_id": id, "plans": pilot_plans(), "config": {"seed": 5}, "options": {"draws": 400}}).to_string();
    let (_, third) = call(&fresh, "POST", "/api/analyses/montecarlo", req).await;
    assert_eq!(third, first);
}

#[tokio::test]
async fn sweep_report_carries_text_log() {
    let app = app();
    let id = register_pilot(&app).await;
    let req = json!({"dataset_id": id, "plans": pilot_plans(), "config": {"sweep_increment": 0.25}});
    let (status, body) = call(&app, "POST", "/api/analyses/sweep", req.to_string()).await;
    assert_eq!(status, StatusCode::OK);
    let golden = std::fs::read_to_string(fixture("pilot_sweep_quarter.txt")).unwrap();
    assert_eq!(as_json(&body)["human_log"], json!(golden));
}

#[tokio::test]
async fn not_found_cases() {
    let app = app();
    let req = json!({"dataset_id": "0".repeat(64), "plans": pilot_plans()});
    let (status, body) = call(&app, "POST", "/api/analyses/rank", req.to_string()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(as_json(&body)["error"]["code"], json!("not_found"));

    let (status, _) = call(&app, "POST", "/api/analyses/astrology", "{}").await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, _) = call(&app, "GET", "/api/analyses/deadbeef", Body::empty()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_requests_carry_locations() {
    let app = app();
    let (status, body) = call(
        &app,
        "POST",
        "/api/datasets",
        "respondent_id,plan_id,attribute_id,max_cost,utilization\nr1,P,a,1,2\nr2,P,a,,2\n",
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let e = &as_json(&body)["error"];
    assert_eq!(e["code"], json!("parse_error"));
    assert_eq!(e["row"], json!(3));
    assert_eq!(e["column"], json!("max_cost"));

    let id = register_pilot(&app).await;
    let req = json!({"dataset_id": id, "plans": pilot_plans(), "colour": "red"});
    let (status, body) = call(&app, "POST", "/api/analyses/rank", req.to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let e = &as_json(&body)["error"];
    assert_eq!(e["code"], json!("schema_error"));
    assert_eq!(e["path"], json!("colour"));

    let req = json!({"dataset_id": id, "plans": []});
    let (status, _) = call(&app, "POST", "/api/analyses/rank", req.to_string()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unfittable_inputs_are_unprocessable() {
    let app = app();
    // Everyone accepts the maximum cost, so the indifference probability is 0.
    let csv = "respondent_id,plan_id,attribute_id,max_cost,utilization\nr1,Plan_1,amenity,35,2\nr2,Plan_1,amenity,35,3\n";
    let (_, body) = call(&app, "POST", "/api/datasets", csv).await;
    let id = as_json(&body)["dataset_id"].as_str().unwrap().to_string();
    let plans = json!([pilot_plans()[0].clone()]);
    let req = json!({"dataset_id": id, "plans": plans});
    let (status, body) = call(&app, "POST", "/api/analyses/rank", req.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{}", String::from_utf8_lossy(&body));
    let e = &as_json(&body)["error"];
    assert_eq!(e["attribute"], json!("amenity"));
}
