//! JSON-over-HTTP service.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::config::{AnalysisConfig, ConfigOverrides};
use crate::engine::{run_analysis, AnalysisOptions, AnalysisRequest, Dataset, DatasetSummary};
use crate::error::{Error, Result};
use crate::io::plan_file::from_json_with_path;
use crate::io::{DecisionReport, InfraSection, PlanFile, ReportKind};
use crate::plan::PlanSpec;

const BODY_LIMIT: usize = 64 * 1024 * 1024;

/// Shared service state: the server's config layer and content-addressed
/// caches of datasets and finished analyses.
#[derive(Debug, Default)]
pub struct AppState {
    base: ConfigOverrides,
    datasets: RwLock<HashMap<String, Arc<Dataset>>>,
    analyses: RwLock<HashMap<String, Arc<DecisionReport>>>,
}

impl AppState {
    pub fn new(base: ConfigOverrides) -> Self {
        Self {
            base,
            ..Default::default()
        }
    }

    fn config(&self) -> Result<AnalysisConfig> {
        AnalysisConfig::resolve(&[&self.base])
    }
}

/// Body of `POST /api/analyses/{kind}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBody {
    #[serde(default)]
    pub dataset_id: Option<String>,
    #[serde(default)]
    pub plans: Vec<PlanSpec>,
    #[serde(default)]
    pub infrastructure: Option<InfraSection>,
    #[serde(default)]
    pub config: ConfigOverrides,
    #[serde(default)]
    pub options: AnalysisOptions,
}

#[derive(Debug, Serialize)]
struct ErrorDetail {
    code: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    attribute: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    row: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: ErrorDetail,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl ApiError {
    fn status(&self) -> StatusCode {
        match self.0.root() {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ if self.0.is_fit_failure() => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let e = &self.0;
        let (row, column) = match e.root() {
            Error::Parse { row, column, .. } => (Some(*row), Some(column.clone())),
            _ => (None, None),
        };
        let path = match e.root() {
            Error::Schema { path, .. } => Some(path.clone()),
            _ => None,
        };
        let body = ErrorBody {
            error: ErrorDetail {
                code: e.code(),
                message: e.to_string(),
                attribute: e.attribute().map(str::to_string),
                row,
                column,
                path,
            },
        };
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

async fn defaults(State(state): State<Arc<AppState>>) -> ApiResult<Json<AnalysisConfig>> {
    Ok(Json(state.config()?))
}

async fn register_dataset(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<Json<DatasetSummary>> {
    let config = state.config()?;
    let dataset = Dataset::from_csv_bytes(&body)?;
    let summary = dataset.summary(&config)?;
    state
        .datasets
        .write()
        .map_err(|_| Error::Internal("dataset cache poisoned".into()))?
        .entry(dataset.id.clone())
        .or_insert_with(|| Arc::new(dataset));
    Ok(Json(summary))
}

async fn analyze(
    State(state): State<Arc<AppState>>,
    Path(kind): Path<String>,
    body: Bytes,
) -> ApiResult<Json<DecisionReport>> {
    let kind = ReportKind::from_slug(&kind)
        .ok_or_else(|| Error::NotFound(format!("analysis kind `{kind}`")))?;
    let text = std::str::from_utf8(&body)
        .map_err(|_| Error::validation("request body is not UTF-8"))?;
    let body: AnalysisBody = from_json_with_path(text)?;
    let dataset = match &body.dataset_id {
        Some(id) => Some(
            state
                .datasets
                .read()
                .map_err(|_| Error::Internal("dataset cache poisoned".into()))?
                .get(id)
                .cloned()
                .ok_or_else(|| Error::NotFound(format!("dataset `{id}`")))?,
        ),
        None => None,
    };
    let plans = PlanFile {
        plans: body.plans,
        infrastructure: body.infrastructure,
        config: ConfigOverrides::default(),
    };
    if kind != ReportKind::SampleSize {
        plans.check()?;
    }
    let request = AnalysisRequest {
        plans,
        base: state.base.clone(),
        overrides: body.config,
        options: body.options,
    };
    let report = tokio::task::spawn_blocking(move || run_analysis(kind, dataset.as_deref(), &request))
        .await
        .map_err(|e| Error::Internal(format!("analysis task: {e}")))??;
    let report = state
        .analyses
        .write()
        .map_err(|_| Error::Internal("analysis cache poisoned".into()))?
        .entry(report.inputs_digest.clone())
        .or_insert_with(|| Arc::new(report))
        .as_ref()
        .clone();
    Ok(Json(report))
}

async fn replay(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<DecisionReport>> {
    state
        .analyses
        .read()
        .map_err(|_| Error::Internal("analysis cache poisoned".into()))?
        .get(&id)
        .map(|r| Json(r.as_ref().clone()))
        .ok_or_else(|| Error::NotFound(format!("analysis `{id}`")).into())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/defaults", get(defaults))
        .route("/api/datasets", post(register_dataset))
        .route("/api/analyses/{key}", get(replay).post(analyze))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves the API on `bind` until interrupted.
pub async fn serve(bind: &str, base: ConfigOverrides) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| Error::Io(format!("bind {bind}: {e}")))?;
    eprintln!("strategizer listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(AppState::new(base))))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(Error::from)
}
