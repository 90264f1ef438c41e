mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use baffle_cli::pipeline::MeshSource;
use baffle_cli::service::{router, AppState, PlanResponse, SessionCreated};
use baffle_core::domain::DomainBundle;
use baffle_core::mesh::io::{parse_json, write_json};
use baffle_core::phantom::{VentriclePhantom, VENTRICLE_REFERENCE_AREA};
use common::small_params;

fn phantom(a_target: f64) -> VentriclePhantom {
    VentriclePhantom::for_target_area(small_params(), a_target)
}

fn session_body(ph: &VentriclePhantom, a_target: f64) -> Value {
    let mesh = |m| serde_json::from_str::<Value>(&write_json(m)).unwrap();
    let structures: serde_json::Map<String, Value> =
        ph.structures.iter().map(|(k, m)| (k.clone(), mesh(m))).collect();
    json!({
        "meshes": { "kind": "bundle", "combined": mesh(&ph.combined), "structures": structures },
        "patient": { "d_z0": 2.0 * (a_target / std::f64::consts::PI).sqrt(), "a_target": a_target },
        "hemodynamics": { "cardiac_output": 3.89, "map": 64.0 },
    })
}

fn points_body(ph: &VentriclePhantom) -> String {
    let pts: Vec<[f64; 3]> = ph.sparse_points.iter().map(|p| [p.x, p.y, p.z]).collect();
    json!({ "points": pts }).to_string()
}

fn session_bytes(ph: &VentriclePhantom) -> usize {
    MeshSource::Bundle(DomainBundle {
        combined: ph.combined.clone(),
        structures: ph.structures.clone(),
    })
    .approx_bytes()
}

async fn call(app: &Router, method: &str, uri: &str, body: String) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn create(app: &Router, body: &Value) -> String {
    let (status, bytes) = call(app, "POST", "/session", body.to_string()).await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&bytes));
    serde_json::from_slice::<SessionCreated>(&bytes).unwrap().session_id
}

async fn post_points(app: &Router, id: &str, body: String) -> (StatusCode, Vec<u8>) {
    call(app, "POST", &format!("/session/{id}/points"), body).await
}

#[tokio::test]
async fn health_check() {
    let app = router(AppState::new(1 << 30));
    let (status, body) = call(&app, "GET", "/healthz", String::new()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"ok");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn session_plans_and_serves_the_mesh() {
    let ph = phantom(VENTRICLE_REFERENCE_AREA);
    let app = router(AppState::new(1 << 30));
    let id = create(&app, &session_body(&ph, VENTRICLE_REFERENCE_AREA)).await;

    let (status, _) = call(&app, "GET", &format!("/session/{id}/mesh"), String::new()).await;
    assert_eq!(status, StatusCode::NOT_FOUND, "no mesh before the first plan");

    let (status, bytes) = post_points(&app, &id, points_body(&ph)).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&bytes));
    let plan: PlanResponse = serde_json::from_slice(&bytes).unwrap();
    assert!(plan.dp_estimate.dp_total > 0.0);
    assert_eq!(plan.boundary.len(), 600);
    assert_eq!(plan.centerline.points.len(), 100);
    assert!(plan.area_profile.min_area() >= 0.99 * VENTRICLE_REFERENCE_AREA);
    assert!(plan.sections_csv.starts_with("j,accepted,raw_area,alpha,alpha_smoothed,final_area\n"));
    assert_eq!(plan.mesh_url, format!("/session/{id}/mesh"));

    let (status, bytes) = call(&app, "GET", &plan.mesh_url, String::new()).await;
    assert_eq!(status, StatusCode::OK);
    let mesh = parse_json(std::str::from_utf8(&bytes).unwrap()).unwrap();
    assert!(baffle_core::mesh::check_topology(&mesh).watertight);
    for p in &plan.boundary {
        assert!(mesh.vertices().contains(p));
    }

    // replanning with the same points gives the same answer
    let (_, again) = post_points(&app, &id, points_body(&ph)).await;
    assert_eq!(again, bytes_of(&plan));
}

fn bytes_of(plan: &PlanResponse) -> Vec<u8> {
    serde_json::to_vec(plan).unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn pipeline_errors_carry_their_stage() {
    let ph = phantom(VENTRICLE_REFERENCE_AREA);
    let app = router(AppState::new(1 << 30));
    let id = create(&app, &session_body(&ph, VENTRICLE_REFERENCE_AREA)).await;

    // points floating far above the heart
    let lifted: Vec<[f64; 3]> = ph.sparse_points.iter().map(|p| [p.x, p.y, p.z + 3.0]).collect();
    let (status, bytes) = post_points(&app, &id, json!({ "points": lifted }).to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let err: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(err["stage"], "baffle-boundary");
    assert!(err["message"].as_str().unwrap().len() > 0);
    assert!(err.get("diagnostics").is_some());

    let (status, bytes) = post_points(&app, &id, "{\"points\": [[0, 0".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(serde_json::from_slice::<Value>(&bytes).unwrap()["stage"], "input");

    let (status, _) = post_points(&app, "no-such-session", points_body(&ph)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, _) = call(&app, "POST", "/session", "{\"meshes\": 3}".into()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let mut broken = session_body(&ph, VENTRICLE_REFERENCE_AREA);
    broken["meshes"]["combined"]["triangles"] = json!([[0, 1, 999999]]);
    let (status, bytes) = call(&app, "POST", "/session", broken.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(serde_json::from_slice::<Value>(&bytes).unwrap()["stage"], "mesh-core");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_sessions_do_not_interfere() {
    let (a_target, b_target) = (VENTRICLE_REFERENCE_AREA, 0.7);
    let (pa, pb) = (phantom(a_target), phantom(b_target));
    let app = router(AppState::new(1 << 30));
    let a = create(&app, &session_body(&pa, a_target)).await;
    let b = create(&app, &session_body(&pb, b_target)).await;

    let (status, solo) = post_points(&app, &a, points_body(&pa)).await;
    assert_eq!(status, StatusCode::OK);

    let (ra, rb) = tokio::join!(
        post_points(&app, &a, points_body(&pa)),
        post_points(&app, &b, points_body(&pb))
    );
    assert_eq!(ra.0, StatusCode::OK);
    assert_eq!(rb.0, StatusCode::OK);
    assert_eq!(ra.1, solo, "session A changed while B was planning");
    let plan_b: PlanResponse = serde_json::from_slice(&rb.1).unwrap();
    assert!(plan_b.area_profile.min_area() >= 0.99 * b_target);
    assert!(plan_b.area_profile.min_area() < 0.99 * a_target);

    let (_, mesh_a) = call(&app, "GET", &format!("/session/{a}/mesh"), String::new()).await;
    let (_, mesh_b) = call(&app, "GET", &format!("/session/{b}/mesh"), String::new()).await;
    assert_ne!(mesh_a, mesh_b);
}

#[tokio::test]
async fn least_recently_used_sessions_are_evicted() {
    let ph = phantom(VENTRICLE_REFERENCE_AREA);
    let bytes = session_bytes(&ph);
    let state = AppState::new(2 * bytes + bytes / 2);
    let app = router(state.clone());
    let body = session_body(&ph, VENTRICLE_REFERENCE_AREA);
    let first = create(&app, &body).await;
    let second = create(&app, &body).await;
    // touching the first makes the second the oldest
    let (status, _) = call(&app, "GET", &format!("/session/{first}/mesh"), String::new()).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let third = create(&app, &body).await;
    assert_eq!(state.session_count(), 2);
    for (id, alive) in [(&first, true), (&second, false), (&third, true)] {
        let (status, bytes) = call(&app, "GET", &format!("/session/{id}/mesh"), String::new()).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        let msg: Value = serde_json::from_slice(&bytes).unwrap();
        let what = msg["message"].as_str().unwrap();
        // a live session lacks only its planned mesh; an evicted one is gone
        assert_eq!(what.starts_with("planned mesh"), alive, "{id}: {what}");
    }

    let tiny = router(AppState::new(bytes / 2));
    let (status, bytes) = call(&tiny, "POST", "/session", body.to_string()).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
    assert_eq!(serde_json::from_slice::<Value>(&bytes).unwrap()["stage"], "input");
}
