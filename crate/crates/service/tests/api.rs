use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use mixfeed_core::analysis::classify_config;
use mixfeed_core::presets;
use mixfeed_service::{router, router_with, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(v) => req.body(Body::from(v.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let res = app.oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let v = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, v)
}

fn zero_gain() -> Value {
    let mut cfg = serde_json::to_value(presets::resting()).unwrap();
    cfg["sig_f"]["i_gain0"] = json!(0.0);
    cfg["sig_s"]["i_gain0"] = json!(0.0);
    cfg
}

#[tokio::test]
async fn presets_are_exactly_the_shipped_ones() {
    let (status, v) = call(router(), "GET", "/api/presets", None).await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, presets::NAMES);
}

#[tokio::test]
async fn classify_matches_library() {
    for name in presets::NAMES {
        let cfg = presets::get(name).unwrap();
        let (status, v) = call(router(), "POST", "/api/classify", Some(json!({ "cfg": cfg }))).await;
        assert_eq!(status, StatusCode::OK);
        let (_, report) = classify_config(&cfg).unwrap();
        assert_eq!(v, serde_json::to_value(&report).unwrap(), "{name}");
    }
    let (_, v) = call(router(), "POST", "/api/classify", Some(json!({ "cfg": presets::burster() }))).await;
    assert_eq!(v["label"], "bursting-capable");
}

#[tokio::test]
async fn curves_windows_match_library() {
    let cfg = presets::burster();
    let (status, v) = call(router(), "POST", "/api/curves", Some(json!({ "cfg": cfg }))).await;
    assert_eq!(status, StatusCode::OK);
    let (set, _) = classify_config(&cfg).unwrap();
    assert_eq!(v["curves"]["fast"]["bistability_window"], serde_json::to_value(set.fast.bistability_window).unwrap());
    assert_eq!(v["curves"]["slow"]["bistability_window"], serde_json::to_value(set.slow.bistability_window).unwrap());
}

#[tokio::test]
async fn zero_gain_simulation_is_flat_and_quiescent() {
    let body = json!({
        "cfg": zero_gain(),
        "input": { "segments": [{ "start_time": 0.0, "amplitude": 1e-9 }] },
        "solver": { "t_end": 5.0 }
    });
    let (status, v) = call(router(), "POST", "/api/simulate", Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["spikes"], json!([]));
    assert_eq!(v["metrics"]["regime_label"], "quiescent");
    assert!(v["trace"]["t"].as_array().unwrap().len() <= 20_000);
    assert!(v["trace"]["source_len"].as_u64().unwrap() > 20_000);
}

#[tokio::test]
async fn decimation_limit_is_respected() {
    let app = router_with(ServiceConfig { max_points: 1000, ..Default::default() });
    let body = json!({
        "cfg": presets::tonic_spiker(),
        "input": { "segments": [{ "start_time": 0.0, "amplitude": 3e-9 }] },
        "solver": { "t_end": 0.5 }
    });
    let (status, v) = call(app, "POST", "/api/simulate", Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let i_f = v["trace"]["i_f"].as_array().unwrap();
    assert!(i_f.len() <= 1000);
    // every detected spike peak survives decimation
    let peak = i_f.iter().map(|x| x.as_f64().unwrap()).fold(0.0, f64::max);
    if !v["spikes"].as_array().unwrap().is_empty() {
        let rise = 0.3 * presets::tonic_spiker().sig_f.i_gain0;
        assert!(peak > rise);
    }
}

#[tokio::test]
async fn over_long_horizon_is_a_bad_request() {
    let body = json!({
        "cfg": presets::burster(),
        "input": { "segments": [] },
        "solver": { "t_end": 120.0 }
    });
    let (status, v) = call(router(), "POST", "/api/simulate", Some(body)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("exceeds"));
}

#[tokio::test]
async fn schema_violation_is_a_bad_request() {
    let (status, v) = call(router(), "POST", "/api/classify", Some(json!({ "config": {} }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].is_string());
}

#[tokio::test]
async fn invalid_configuration_is_unprocessable() {
    let mut cfg = serde_json::to_value(presets::burster()).unwrap();
    cfg["tau_f"] = json!(-1.0);
    let (status, v) = call(router(), "POST", "/api/classify", Some(json!({ "cfg": cfg }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["error"].as_str().unwrap().contains("tau_f"), "{v}");
}

#[tokio::test]
async fn divergence_is_a_server_error() {
    let mut cfg = serde_json::to_value(presets::burster()).unwrap();
    cfg["g_f"] = json!(1e300);
    cfg["rectify_filter_inputs"] = json!(false);
    let body = json!({
        "cfg": cfg,
        "input": { "segments": [{ "start_time": 0.0, "amplitude": 1e-9 }] },
        "solver": { "t_end": 0.01, "dt": 1e-5 }
    });
    let (status, _) = call(router(), "POST", "/api/simulate", Some(body)).await;
    assert_eq!(status, StatusCode::INTERNAL_SERVER_ERROR);
}

#[tokio::test]
async fn index_is_served() {
    let app = router();
    let res = app.oneshot(Request::builder().uri("/").body(Body::empty()).unwrap()).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
}
