//! Stateless HTTP planning service.
//!
//! * `GET /health` returns `{"status": "ok"}`.
//! * `GET /map/meta` describes the loaded map and models.
//! * `POST /predict` takes
//!   `{"concentrators": [{"lat", "lon", "mast_height", "tx_power", "label"}],
//!     "lattice": {"corner_a": {"lat", "lon"}, "corner_b": {...}, "step"}}`
//!   (`step_x`/`step_y` override `step`, default 8 m) and answers with the
//!   coverage raster exactly as the PM2 run serialises it.
//!
//! Failures answer `{"error": {"kind", "message"}}` with a 4xx status.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{run_pm2, Concentrator, CoverageRaster, LatticeSpec, Legend, LinkBudget, PipelineOptions};
use super::{DEFAULT_LATTICE_STEP, TX_POWER_LEVELS};
use crate::error::{Error, Result};
use crate::features::Antenna;
use crate::geodata::{Bounds, EnvironmentMap, GeoPoint, TerrainClass};
use crate::models::TrainedModels;

/// Largest `nodes x concentrators` product one request may ask for.
pub const DEFAULT_MAX_PREDICTIONS: usize = 1_000_000;

pub struct ServiceState {
    pub map: EnvironmentMap,
    pub models: TrainedModels,
    pub budget: LinkBudget,
    pub options: PipelineOptions,
    pub max_predictions: usize,
}

impl ServiceState {
    pub fn new(map: EnvironmentMap, models: TrainedModels, budget: LinkBudget) -> Result<Self> {
        models.check_terrain(map.terrain_class())?;
        budget.validate()?;
        Ok(Self {
            map,
            models,
            budget,
            options: PipelineOptions::default(),
            max_predictions: DEFAULT_MAX_PREDICTIONS,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    fn point(&self) -> Result<GeoPoint> {
        GeoPoint::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentratorRequest {
    pub lat: f64,
    pub lon: f64,
    pub mast_height: f64,
    pub tx_power: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRequest {
    pub corner_a: LatLon,
    pub corner_b: LatLon,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub step_x: Option<f64>,
    #[serde(default)]
    pub step_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRequest {
    pub concentrators: Vec<ConcentratorRequest>,
    pub lattice: LatticeRequest,
}

impl PredictRequest {
    pub fn concentrators(&self) -> Result<Vec<Concentrator>> {
        if self.concentrators.is_empty() {
            return Err(Error::InvalidInput {
                name: "concentrators",
                message: "at least one concentrator is required".into(),
            });
        }
        self.concentrators
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let label = if c.label.is_empty() { format!("C{}", k + 1) } else { c.label.clone() };
                let conc = Concentrator {
                    antenna: Antenna::new(GeoPoint::new(c.lat, c.lon)?, c.mast_height)?,
                    tx_power: c.tx_power,
                    label,
                };
                conc.validate()?;
                Ok(conc)
            })
            .collect()
    }

    pub fn lattice(&self) -> Result<LatticeSpec> {
        let l = &self.lattice;
        let step = l.step.unwrap_or(DEFAULT_LATTICE_STEP);
        let spec = LatticeSpec {
            corner_a: l.corner_a.point()?,
            corner_b: l.corner_b.point()?,
            step_x: l.step_x.unwrap_or(step),
            step_y: l.step_y.unwrap_or(step),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The raster a request asks for, with the node cap enforced.
pub fn predict(state: &ServiceState, request: &PredictRequest) -> Result<CoverageRaster> {
    let concentrators = request.concentrators()?;
    let spec = request.lattice()?;
    let lattice = super::Lattice::new(spec, state.map.frame())?;
    let requested = lattice.len().saturating_mul(concentrators.len());
    if requested > state.max_predictions {
        return Err(Error::InvalidInput {
            name: "lattice",
            message: format!(
                "{} nodes x {} concentrators exceeds the limit of {} predictions",
                lattice.len(),
                concentrators.len(),
                state.max_predictions
            ),
        });
    }
    run_pm2(&state.map, &concentrators, &state.budget, &state.models, &spec, &state.options)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCounts {
    pub buildings: usize,
    pub contours: usize,
    pub roads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub terrain_class: TerrainClass,
    pub training_areas: Vec<String>,
    pub reference_tx_power: f64,
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub origin: GeoPoint,
    pub terrain_class: TerrainClass,
    /// Local metres east/north of `origin`.
    pub bounds: Bounds,
    pub south_west: GeoPoint,
    pub north_east: GeoPoint,
    pub layers: LayerCounts,
    pub model: ModelSummary,
    pub tx_power_levels: Vec<f64>,
    pub default_step: f64,
    pub legend: Legend,
}

pub fn map_meta(state: &ServiceState) -> MapMeta {
    let m = &state.map;
    let b = m.bounds();
    let corner = |x, y| {
        let (latitude, longitude) = m.frame().plane_to_geo(x, y);
        GeoPoint {
            latitude,
            longitude,
            altitude: None,
        }
    };
    MapMeta {
        origin: m.origin(),
        terrain_class: m.terrain_class(),
        bounds: b,
        south_west: corner(b.min_x, b.min_y),
        north_east: corner(b.max_x, b.max_y),
        layers: LayerCounts {
            buildings: m.buildings().len(),
            contours: m.contours().len(),
            roads: m.roads().len(),
        },
        model: ModelSummary {
            terrain_class: state.models.meta.terrain_class,
            training_areas: state.models.meta.training_areas.clone(),
            reference_tx_power: state.models.meta.reference_tx_power,
            checksum: state.models.checksum(),
        },
        tx_power_levels: TX_POWER_LEVELS.to_vec(),
        default_step: DEFAULT_LATTICE_STEP,
        legend: Legend::default(),
    }
}

fn json_response(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error_response(status: StatusCode, kind: &str, message: String) -> Response {
    let body = json!({ "error": { "kind": kind, "message": message } });
    json_response(status, serde_json::to_vec(&body).expect("errors serialize"))
}

fn status_of(e: &Error) -> StatusCode {
    match e {
        Error::TerrainClassMismatch { .. } => StatusCode::CONFLICT,
        Error::Parse { .. } | Error::ParseRow { .. } => StatusCode::BAD_REQUEST,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

async fn health() -> Response {
    json_response(StatusCode::OK, br#"{"status":"ok"}"#.to_vec())
}

async fn meta(State(state): State<Arc<ServiceState>>) -> Response {
    json_response(StatusCode::OK, serde_json::to_vec(&map_meta(&state)).expect("meta serializes"))
}

async fn predict_handler(State(state): State<Arc<ServiceState>>, body: Bytes) -> Response {
    let request: PredictRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, "ParseError", e.to_string()),
    };
    let result = tokio::task::spawn_blocking(move || predict(&state, &request)).await;
    match result {
        Ok(Ok(raster)) => json_response(StatusCode::OK, raster.to_json()),
        Ok(Err(e)) => error_response(status_of(&e), e.kind(), e.to_string()),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "InternalError", e.to_string()),
    }
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/map/meta", get(meta))
        .route("/predict", post(predict_handler))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(state: Arc<ServiceState>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Bind {
            addr: addr.to_string(),
            source: e,
        })?;
    log::info!("listening on {}", listener.local_addr().map_err(|e| Error::io("listener", e))?);
    axum::serve(listener, router(state))
        .await
        .map_err(|e| Error::io(format!("serve {addr}"), e))
}
