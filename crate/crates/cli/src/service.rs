//! HTTP replanning service.
//!
//! Sessions hold immutable uploaded meshes and patient data; every points-post reruns the whole
//! pipeline on them. Sessions live in memory under a byte budget with least-recently-used
//! eviction. Posts to one session run one at a time; different sessions run concurrently.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use baffle_core::centerline::Centerline;
use baffle_core::domain::DomainBundle;
use baffle_core::hemo::{AreaProfile, PressureDrop};
use baffle_core::mesh::io::{parse_json, write_json};
use baffle_core::mesh::{LabeledSurfaceMesh, Vec3};

use crate::pipeline::{
    run_pipeline, HemoSpec, MeshSource, PatientSpec, PipelineError, PlanInputs, Stage, StructureNames, Tolerances,
};
use crate::plan::parse_points;

pub const DEFAULT_CACHE_BYTES: usize = 500 * 1024 * 1024;

/// Request body of `POST /session`. Meshes are in the native JSON mesh format.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRequest {
    pub meshes: MeshUpload,
    pub patient: PatientSpec,
    pub hemodynamics: HemoSpec,
    #[serde(default)]
    pub structures: StructureNames,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshUpload {
    Bundle {
        combined: Value,
        structures: std::collections::BTreeMap<String, Value>,
    },
    Labeled {
        mesh: Value,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
}

/// Response body of a successful points-post.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanResponse {
    pub boundary: Vec<Vec3>,
    pub centerline: Centerline,
    pub area_profile: AreaProfile,
    pub dp_estimate: PressureDrop,
    pub sections_csv: String,
    pub mesh_url: String,
}

/// Error body for every non-2xx response.
#[derive(Debug)]
pub enum ApiError {
    Pipeline(PipelineError),
    BadRequest(PipelineError),
    NotFound(String),
    TooLarge { bytes: usize, cap: usize },
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::Pipeline(e) => (StatusCode::UNPROCESSABLE_ENTITY, serde_json::to_value(e)),
            ApiError::BadRequest(e) => (StatusCode::BAD_REQUEST, serde_json::to_value(e)),
            ApiError::NotFound(what) => (
                StatusCode::NOT_FOUND,
                Ok(json!({ "stage": "input", "message": format!("{what} not found"), "diagnostics": {} })),
            ),
            ApiError::TooLarge { bytes, cap } => (
                StatusCode::PAYLOAD_TOO_LARGE,
                Ok(json!({
                    "stage": "input",
                    "message": "session exceeds the cache budget",
                    "diagnostics": { "bytes": bytes, "cap": cap },
                })),
            ),
        };
        (status, Json(body.unwrap_or(Value::Null))).into_response()
    }
}

struct SessionBase {
    meshes: MeshSource,
    patient: PatientSpec,
    hemodynamics: HemoSpec,
    structures: StructureNames,
    tolerances: Tolerances,
    bytes: usize,
}

struct Session {
    base: Arc<SessionBase>,
    /// Native JSON of the last successfully planned mesh.
    mesh_json: Option<Arc<String>>,
}

struct Entry {
    session: Arc<tokio::sync::Mutex<Session>>,
    bytes: usize,
    last_used: u64,
}

struct Sessions {
    map: HashMap<String, Entry>,
    clock: u64,
    cap: usize,
}

impl Sessions {
    fn total(&self) -> usize {
        self.map.values().map(|e| e.bytes).sum()
    }

    fn touch(&mut self, id: &str) -> Option<Arc<tokio::sync::Mutex<Session>>> {
        self.clock += 1;
        let clock = self.clock;
        self.map.get_mut(id).map(|e| {
            e.last_used = clock;
            e.session.clone()
        })
    }

    /// Evicts least recently used sessions other than `keep` until the budget holds.
    fn evict(&mut self, keep: &str) {
        while self.total() > self.cap {
            let victim = self
                .map
                .iter()
                .filter(|(id, _)| id.as_str() != keep)
                .min_by_key(|(_, e)| e.last_used)
                .map(|(id, _)| id.clone());
            match victim {
                Some(id) => {
                    log::info!("evicting session {id}");
                    self.map.remove(&id);
                }
                None => break,
            }
        }
    }
}

/// Shared service state.
#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Mutex<Sessions>>,
}

impl AppState {
    pub fn new(cache_bytes: usize) -> Self {
        AppState {
            sessions: Arc::new(Mutex::new(Sessions {
                map: HashMap::new(),
                clock: 0,
                cap: cache_bytes,
            })),
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").map.len()
    }

    fn lookup(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Session>>, ApiError> {
        let mut s = self.sessions.lock().expect("session map poisoned");
        s.touch(id).ok_or_else(|| ApiError::NotFound(format!("session {id}")))
    }

    fn set_bytes(&self, id: &str, bytes: usize) {
        let mut s = self.sessions.lock().expect("session map poisoned");
        if let Some(e) = s.map.get_mut(id) {
            e.bytes = bytes;
        }
        s.evict(id);
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/session", post(create_session))
        .route("/session/{id}/points", post(post_points))
        .route("/session/{id}/mesh", get(get_mesh))
        .layer(DefaultBodyLimit::max(DEFAULT_CACHE_BYTES))
        .with_state(state)
}

/// Binds `0.0.0.0:port` and serves until the process ends.
pub async fn serve(port: u16, cache_bytes: usize) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(cache_bytes))).await
}

async fn healthz() -> &'static str {
    "ok"
}

fn bad_request(message: String) -> ApiError {
    ApiError::BadRequest(PipelineError::new(Stage::Input, message, json!({})))
}

fn upload_mesh(value: &Value, what: &str) -> Result<LabeledSurfaceMesh, ApiError> {
    parse_json(&value.to_string()).map_err(|e| {
        let mut err = PipelineError::from_error(Stage::MeshCore, &e);
        err.diagnostics["mesh"] = json!(what);
        ApiError::Pipeline(err)
    })
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: SessionRequest =
        serde_json::from_slice(&body).map_err(|e| bad_request(format!("invalid session request: {e}")))?;
    let meshes = tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        Ok(match &req.meshes {
            MeshUpload::Bundle { combined, structures } => {
                let combined = upload_mesh(combined, "combined")?;
                let structures = structures
                    .iter()
                    .map(|(name, m)| Ok((name.clone(), upload_mesh(m, name)?)))
                    .collect::<Result<_, ApiError>>()?;
                (MeshSource::Bundle(DomainBundle { combined, structures }), req)
            }
            MeshUpload::Labeled { mesh } => (MeshSource::Labeled(upload_mesh(mesh, "mesh")?), req),
        })
    })
    .await
    .map_err(|e| bad_request(format!("upload task failed: {e}")))??;
    let (meshes, req) = meshes;
    let bytes = meshes.approx_bytes();
    let id = uuid::Uuid::new_v4().to_string();
    let base = SessionBase {
        meshes,
        patient: req.patient,
        hemodynamics: req.hemodynamics,
        structures: req.structures,
        tolerances: req.tolerances,
        bytes,
    };
    {
        let mut s = state.sessions.lock().expect("session map poisoned");
        if bytes > s.cap {
            return Err(ApiError::TooLarge { bytes, cap: s.cap });
        }
        s.clock += 1;
        let entry = Entry {
            session: Arc::new(tokio::sync::Mutex::new(Session {
                base: Arc::new(base),
                mesh_json: None,
            })),
            bytes,
            last_used: s.clock,
        };
        s.map.insert(id.clone(), entry);
        s.evict(&id);
    }
    log::info!("created session {id} ({bytes} bytes)");
    Ok((StatusCode::CREATED, Json(SessionCreated { session_id: id })).into_response())
}

async fn post_points(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<PlanResponse>, ApiError> {
    let session = state.lookup(&id)?;
    let text = std::str::from_utf8(&body).map_err(|_| bad_request("body is not UTF-8".into()))?;
    let points = parse_points(text, Path::new("request")).map_err(|e| match e.stage {
        Stage::Input => ApiError::BadRequest(e),
        _ => ApiError::Pipeline(e),
    })?;
    // held across the run so posts to this session are serialized
    let mut guard = session.lock().await;
    let base = guard.base.clone();
    let result = tokio::task::spawn_blocking(move || {
        let inputs = PlanInputs {
            meshes: base.meshes.clone(),
            points,
            patient: base.patient.clone(),
            hemodynamics: base.hemodynamics.clone(),
            structures: base.structures.clone(),
            tolerances: base.tolerances.clone(),
        };
        run_pipeline(&inputs).map(|out| {
            let mesh_json = write_json(&out.final_domain.mesh);
            (out, mesh_json)
        })
    })
    .await
    .map_err(|e| bad_request(format!("planning task failed: {e}")))?;
    let (out, mesh_json) = result.map_err(ApiError::Pipeline)?;
    let bytes = guard.base.bytes + mesh_json.len();
    guard.mesh_json = Some(Arc::new(mesh_json));
    drop(guard);
    state.set_bytes(&id, bytes);
    Ok(Json(PlanResponse {
        boundary: out.boundary.points.clone(),
        centerline: out.centerline.clone(),
        area_profile: out.area_profile.clone(),
        dp_estimate: out.dp_estimate,
        sections_csv: out.sections_csv(),
        mesh_url: format!("/session/{id}/mesh"),
    }))
}

async fn get_mesh(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let session = state.lookup(&id)?;
    let guard = session.lock().await;
    let mesh = guard
        .mesh_json
        .clone()
        .ok_or_else(|| ApiError::NotFound(format!("planned mesh of session {id}")))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], mesh.as_str().to_owned()).into_response())
}
