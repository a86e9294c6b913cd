//! The HTTP planning service against direct PM2 runs.

mod common;

use std::io::{Read, Write};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use common::{quick_models, small_town};
use serde_json::{json, Value};
use tower::ServiceExt;
use vhfplan_core::features::Antenna;
use vhfplan_core::geodata::{GeoPoint, TerrainClass};
use vhfplan_core::models::ModelMeta;
use vhfplan_core::planner::service::{router, ServiceState};
use vhfplan_core::planner::{run_pm2, Concentrator, LatticeSpec, LinkBudget, PipelineOptions};

fn state() -> Arc<ServiceState> {
    let town = small_town(44.49, 11.34, "alpha/centre", 3, 10);
    Arc::new(ServiceState::new(town.map, quick_models("alpha/centre", 3), LinkBudget::default()).unwrap())
}

fn geo(state: &ServiceState, x: f64, y: f64) -> (f64, f64) {
    state.map.frame().plane_to_geo(x, y)
}

fn request_body(state: &ServiceState) -> Value {
    let (la, lo) = geo(state, 100.0, 100.0);
    let (lb, lob) = geo(state, 180.0, 180.0);
    let (c1, c1o) = geo(state, 120.0, 140.0);
    let (c2, c2o) = geo(state, 400.0, 300.0);
    json!({
        "concentrators": [
            {"lat": c1, "lon": c1o, "mast_height": 30.0, "tx_power": 21.0, "label": "north"},
            {"lat": c2, "lon": c2o, "mast_height": 25.0, "tx_power": 27.0}
        ],
        "lattice": {"corner_a": {"lat": la, "lon": lo}, "corner_b": {"lat": lb, "lon": lob}, "step": 8.0}
    })
}

/// The same request, run straight through PM2.
fn direct(state: &ServiceState, body: &Value) -> Vec<u8> {
    let concs: Vec<Concentrator> = body["concentrators"]
        .as_array()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(k, c)| Concentrator {
            antenna: Antenna::new(
                GeoPoint::new(c["lat"].as_f64().unwrap(), c["lon"].as_f64().unwrap()).unwrap(),
                c["mast_height"].as_f64().unwrap(),
            )
            .unwrap(),
            tx_power: c["tx_power"].as_f64().unwrap(),
            label: c["label"].as_str().map_or(format!("C{}", k + 1), str::to_string),
        })
        .collect();
    let l = &body["lattice"];
    let p = |v: &Value| GeoPoint::new(v["lat"].as_f64().unwrap(), v["lon"].as_f64().unwrap()).unwrap();
    let spec = LatticeSpec { corner_a: p(&l["corner_a"]), corner_b: p(&l["corner_b"]), step_x: 8.0, step_y: 8.0 };
    run_pm2(&state.map, &concs, &LinkBudget::default(), &state.models, &spec, &PipelineOptions::default())
        .unwrap()
        .to_json()
}

async fn call(state: Arc<ServiceState>, method: &str, uri: &str, body: Vec<u8>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let resp = router(state).oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

#[tokio::test]
async fn predict_equals_a_direct_run_byte_for_byte() {
    let s = state();
    let body = request_body(&s);
    let (status, bytes) = call(s.clone(), "POST", "/predict", serde_json::to_vec(&body).unwrap()).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&bytes));
    assert_eq!(bytes, direct(&s, &body));
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["lattice"]["columns"], 11);
    assert_eq!(v["concentrators"][1]["label"], "C2");
}

#[tokio::test]
async fn identical_concurrent_requests_get_identical_answers() {
    let s = state();
    let body = serde_json::to_vec(&request_body(&s)).unwrap();
    let calls = (0..4).map(|_| call(s.clone(), "POST", "/predict", body.clone()));
    let answers = futures_join(calls).await;
    for (status, bytes) in &answers {
        assert_eq!(*status, StatusCode::OK);
        assert_eq!(bytes, &answers[0].1);
    }
}

async fn futures_join<F: std::future::Future<Output = (StatusCode, Vec<u8>)> + Send + 'static>(
    futures: impl Iterator<Item = F>,
) -> Vec<(StatusCode, Vec<u8>)> {
    let handles: Vec<_> = futures.map(tokio::spawn).collect();
    let mut out = Vec::new();
    for h in handles {
        out.push(h.await.unwrap());
    }
    out
}

fn error_kind(bytes: &[u8]) -> String {
    let v: Value = serde_json::from_slice(bytes).unwrap();
    assert!(v["error"]["message"].as_str().is_some_and(|m| !m.is_empty()));
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn failures_answer_with_an_error_object() {
    let s = state();
    let (status, bytes) = call(s.clone(), "POST", "/predict", b"{not json".to_vec()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(error_kind(&bytes), "ParseError");

    let mut body = request_body(&s);
    body["concentrators"][0]["tx_power"] = json!(23.0);
    let (status, bytes) = call(s.clone(), "POST", "/predict", serde_json::to_vec(&body).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(error_kind(&bytes), "InvalidInput");

    let mut body = request_body(&s);
    body["concentrators"] = json!([]);
    let (status, _) = call(s.clone(), "POST", "/predict", serde_json::to_vec(&body).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let mut body = request_body(&s);
    body["lattice"]["step"] = json!(0.01);
    let (status, bytes) = call(s.clone(), "POST", "/predict", serde_json::to_vec(&body).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(String::from_utf8_lossy(&bytes).contains("exceeds"));

    let (status, _) = call(s, "GET", "/nowhere", vec![]).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn mismatched_models_do_not_start_a_service() {
    let town = small_town(44.49, 11.34, "alpha/centre", 3, 10);
    let mut models = quick_models("alpha/centre", 3);
    models.meta = ModelMeta::new(TerrainClass::Hilly, vec!["alpha/centre".into()], 21.0, 0);
    let e = ServiceState::new(town.map, models, LinkBudget::default()).err().unwrap();
    assert_eq!(e.kind(), "TerrainClassMismatch");
}

#[tokio::test]
async fn health_and_map_meta() {
    let s = state();
    let (status, bytes) = call(s.clone(), "GET", "/health", vec![]).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&bytes).unwrap(), json!({"status": "ok"}));

    let (status, bytes) = call(s.clone(), "GET", "/map/meta", vec![]).await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(v["terrain_class"], "flat");
    assert_eq!(v["tx_power_levels"], json!([21.0, 24.0, 27.0, 30.0]));
    assert_eq!(v["default_step"], 8.0);
    assert_eq!(v["legend"]["bins"].as_array().unwrap().len(), 10);
    assert_eq!(v["model"]["checksum"], s.models.checksum());
    assert_eq!(v["model"]["training_areas"], json!(["alpha/centre"]));
    assert_eq!(v["layers"]["buildings"], s.map.buildings().len());
    assert!(v["south_west"]["lat"].as_f64().unwrap() < v["north_east"]["lat"].as_f64().unwrap());
}

/// Plain HTTP/1.1 over a socket, as a browser would send it.
#[test]
fn predict_over_a_real_socket() {
    let s = state();
    let body = serde_json::to_vec(&request_body(&s)).unwrap();
    let expected = direct(&s, &request_body(&s));

    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    rt.spawn(async move { axum::serve(listener, router(s)).await.unwrap() });

    let mut stream = std::net::TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "POST /predict HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )
    .unwrap();
    stream.write_all(&body).unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    let head = String::from_utf8_lossy(&raw[..split]).to_lowercase();
    assert!(head.starts_with("http/1.1 200"), "{head}");
    assert!(head.contains("content-type: application/json"));
    assert_eq!(&raw[split + 4..], expected.as_slice());
}
