//! HTTP API over one case directory for the review UI.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use isoseg_core::ensemble::{
    confidence_histograms, suggest_corrections, AgreementMap, SuggestionExport, DEFAULT_MIN_SIZE, DEFAULT_THRESHOLD,
};
use isoseg_core::pipeline::{CLASS_NAMES, NUM_CLASSES};
use isoseg_core::volume::{write_volume, Volume};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::case::{Case, SUGGESTIONS_FILE};
use crate::error::{CliError, CliResult};

/// One brush stroke: `voxels` set to `label`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Correction {
    pub voxels: Vec<[usize; 3]>,
    pub label: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionEvent {
    pub seq: usize,
    #[serde(flatten)]
    pub correction: Correction,
}

/// The corrected labels after replaying `events` onto the fused labels.
struct Snapshot {
    events: Vec<CorrectionEvent>,
    labels: Volume<u8>,
}

pub struct AppState {
    case: Case,
    suggestions: SuggestionExport,
    snapshot: RwLock<Arc<Snapshot>>,
    writer: tokio::sync::Mutex<()>,
}

impl AppState {
    pub fn new(case: Case) -> CliResult<Self> {
        let path = case.dir.join(SUGGESTIONS_FILE);
        let suggestions = if path.exists() {
            let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            SuggestionExport::parse(&bytes)?
        } else {
            SuggestionExport {
                volume_id: case.manifest.volume_id.clone(),
                k: case.manifest.k,
                threshold: DEFAULT_THRESHOLD,
                suggestions: suggest_corrections(
                    &case.agreement,
                    case.manifest.k,
                    &case.fused,
                    DEFAULT_THRESHOLD,
                    DEFAULT_MIN_SIZE,
                )?,
            }
        };
        let snapshot = Snapshot {
            events: Vec::new(),
            labels: case.fused.clone(),
        };
        Ok(Self {
            case,
            suggestions,
            snapshot: RwLock::new(Arc::new(snapshot)),
            writer: tokio::sync::Mutex::new(()),
        })
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.into())
}

fn not_found(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, msg.into())
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/case", get(case_info))
        .route("/api/slice/{volume}/{axis}/{index}", get(slice))
        .route("/api/suggestions", get(suggestions))
        .route("/api/histograms", get(histograms))
        .route("/api/corrections", post(corrections))
        .route("/api/export", post(export))
        .with_state(state)
}

fn volume_names(case: &Case) -> Vec<&'static str> {
    let mut names = vec!["t1", "t2", "mask", "fused", "agreement", "corrected"];
    if case.truth.is_some() {
        names.push("truth");
    }
    names
}

async fn case_info(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let case = &state.case;
    Json(json!({
        "volume_id": case.manifest.volume_id,
        "dims": case.fused.dims(),
        "spacing": case.fused.spacing(),
        "classes": CLASS_NAMES,
        "K": case.manifest.k,
        "volumes": volume_names(case),
        "has_truth": case.truth.is_some(),
        "corrections": state.snapshot().events.len(),
    }))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Slice {
    pub volume: String,
    pub axis: String,
    pub index: usize,
    /// Samples per row.
    pub width: usize,
    /// Rows.
    pub height: usize,
    /// `uint8` or `float32`, little-endian.
    pub dtype: String,
    /// Value range over the whole volume.
    pub min: f64,
    pub max: f64,
    /// Base64 of the row-major samples.
    pub data: String,
}

/// In-plane sample order of a slice: for `z`, rows run along y and columns
/// along x; for `y`, rows along z and columns along x; for `x`, rows along z
/// and columns along y.
fn slice_coords(dims: [usize; 3], axis: &str, index: usize) -> Result<(usize, usize, Vec<[usize; 3]>), ApiError> {
    let [nx, ny, nz] = dims;
    let (a, width, height) = match axis {
        "x" => (0, ny, nz),
        "y" => (1, nx, nz),
        "z" => (2, nx, ny),
        _ => return Err(bad_request(format!("axis {axis:?} is not x, y or z"))),
    };
    if index >= dims[a] {
        return Err(bad_request(format!("index {index} outside 0..{} on axis {axis}", dims[a])));
    }
    let mut coords = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            coords.push(match a {
                0 => [index, c, r],
                1 => [c, index, r],
                _ => [c, r, index],
            });
        }
    }
    Ok((width, height, coords))
}

fn range<T: Copy + Into<f64>>(data: &[T]) -> (f64, f64) {
    data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        let v = v.into();
        (lo.min(v), hi.max(v))
    })
}

async fn slice(
    State(state): State<Arc<AppState>>,
    Path((volume, axis, index)): Path<(String, String, usize)>,
) -> ApiResult<Slice> {
    let case = &state.case;
    let (width, height, coords) = slice_coords(case.fused.dims(), &axis, index)?;
    let snapshot;
    let (bytes, dtype, (min, max)) = {
        let float = |v: &Volume<f32>| {
            let bytes = coords.iter().flat_map(|&p| v.get(p).to_le_bytes()).collect::<Vec<u8>>();
            (bytes, "float32", range(v.data()))
        };
        let label = |v: &Volume<u8>| {
            let bytes = coords.iter().map(|&p| v.get(p)).collect::<Vec<u8>>();
            (bytes, "uint8", range(v.data()))
        };
        match volume.as_str() {
            "t1" => float(&case.t1),
            "t2" => float(&case.t2),
            "agreement" => float(&case.agreement),
            "mask" => label(&case.mask),
            "fused" => label(&case.fused),
            "corrected" => {
                snapshot = state.snapshot();
                label(&snapshot.labels)
            }
            "truth" => match &case.truth {
                Some(t) => label(t),
                None => return Err(not_found("case has no truth volume")),
            },
            _ => return Err(not_found(format!("unknown volume {volume:?}"))),
        }
    };
    Ok(Json(Slice {
        volume,
        axis,
        index,
        width,
        height,
        dtype: dtype.into(),
        min,
        max,
        data: BASE64.encode(bytes),
    }))
}

async fn suggestions(State(state): State<Arc<AppState>>) -> Json<SuggestionExport> {
    Json(state.suggestions.clone())
}

async fn histograms(State(state): State<Arc<AppState>>) -> ApiResult<serde_json::Value> {
    let case = &state.case;
    let truth = case.truth.as_ref().ok_or_else(|| not_found("case has no truth volume"))?;
    let map = AgreementMap {
        k: case.manifest.k,
        agreement: case.agreement.clone(),
        votes: Vec::new(),
    };
    let h = confidence_histograms(&map, &case.fused, truth).map_err(|e| bad_request(e.to_string()))?;
    let bins: Vec<f64> = (1..=h.k).map(|v| v as f64 / h.k as f64).collect();
    Ok(Json(json!({ "K": h.k, "bins": bins, "classes": h.classes })))
}

async fn corrections(State(state): State<Arc<AppState>>, body: Json<Correction>) -> ApiResult<serde_json::Value> {
    let Json(correction) = body;
    let dims = state.case.fused.dims();
    if correction.label as usize >= NUM_CLASSES {
        return Err(bad_request(format!("label {} is not a class", correction.label)));
    }
    if correction.voxels.is_empty() {
        return Err(bad_request("no voxels"));
    }
    if let Some(p) = correction.voxels.iter().find(|p| (0..3).any(|a| p[a] >= dims[a])) {
        return Err(bad_request(format!("voxel {p:?} outside {dims:?}")));
    }
    let _writer = state.writer.lock().await;
    let current = state.snapshot();
    let mut labels = current.labels.clone();
    for &p in &correction.voxels {
        labels.set(p, correction.label);
    }
    let mut events = current.events.clone();
    let seq = events.len() + 1;
    let applied = correction.voxels.len();
    events.push(CorrectionEvent { seq, correction });
    *state.snapshot.write().expect("snapshot lock") = Arc::new(Snapshot { events, labels });
    Ok(Json(json!({ "seq": seq, "applied": applied })))
}

/// Written next to the corrected labels on export.
#[derive(Debug, Serialize, Deserialize)]
pub struct AuditLog {
    pub volume_id: String,
    pub base: String,
    pub events: Vec<CorrectionEvent>,
}

pub const EXPORT_DIR: &str = "export";
pub const EXPORT_LABELS: &str = "corrected_labels.nii";
pub const EXPORT_LOG: &str = "corrections.json";

async fn export(State(state): State<Arc<AppState>>) -> ApiResult<serde_json::Value> {
    let _writer = state.writer.lock().await;
    let snapshot = state.snapshot();
    let case = &state.case;
    let dir = case.dir.join(EXPORT_DIR);
    let fail = |e: String| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e);
    std::fs::create_dir_all(&dir).map_err(|e| fail(format!("{}: {e}", dir.display())))?;
    write_volume(&snapshot.labels.clone().into(), dir.join(EXPORT_LABELS)).map_err(|e| fail(e.to_string()))?;
    let log = AuditLog {
        volume_id: case.manifest.volume_id.clone(),
        base: case.manifest.files.fused.clone(),
        events: snapshot.events.clone(),
    };
    let mut text = serde_json::to_string_pretty(&log).expect("audit log serializes");
    text.push('\n');
    let log_path = dir.join(EXPORT_LOG);
    std::fs::write(&log_path, text).map_err(|e| fail(format!("{}: {e}", log_path.display())))?;
    let changed = snapshot
        .labels
        .data()
        .iter()
        .zip(case.fused.data())
        .filter(|(a, b)| a != b)
        .count();
    Ok(Json(json!({
        "labels": format!("{EXPORT_DIR}/{EXPORT_LABELS}"),
        "log": format!("{EXPORT_DIR}/{EXPORT_LOG}"),
        "events": snapshot.events.len(),
        "changed_voxels": changed,
    })))
}

/// Loads `case_dir` and serves it until the process is stopped.
pub fn serve(case_dir: PathBuf, host: &str, port: u16) -> CliResult<()> {
    let case = Case::load(&case_dir)?;
    let state = Arc::new(AppState::new(case)?);
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address {host}:{port}: {e}")))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Runtime(format!("bind {addr}: {e}")))?;
        log::info!("serving {} on http://{addr}", case_dir.display());
        axum::serve(listener, router(state))
            .await
            .map_err(|e| CliError::Runtime(e.to_string()))
    })
}
