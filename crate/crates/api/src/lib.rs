//! Local HTTP service over the assessment engine.
//!
//! Routes:
//! - `GET /contexts` preset cultural contexts
//! - `POST /assess` scenario document in, assessment document out
//! - `POST /whatif` decision matrix, curve and frontiers for ad hoc parameters
//! - `GET /fixtures` and `GET /fixtures/{name}` bundled (or directory) scenarios
//!
//! Every handler is a pure function of its request and the read-only
//! [`AppState`].

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use proplane_core::render::{curve_samples, CURVE_SAMPLES};
use proplane_core::store::{
    scenario_document, validate_document, BlockOut, ContextOut, ContextRecord, FunctionOut,
    ScenarioDocument, ThreatRecord, BUILTIN_SOURCES,
};
use proplane_core::{
    assess, build_grid, decision_matrix, deployment_frontier_w, parse_scenario_json, read_document,
    render_assessment, CulturalContext, Decision, DomainError, DynamicFunction, HarmLevel,
    LevelTables, Overall, PrivacyLevel, StoreError, TMode, ThreatClass, SCHEMA_VERSION,
};

#[derive(Debug, Clone, Default)]
pub struct AppState {
    /// Extra `<name>.toml` scenarios served under `/fixtures/{name}`.
    pub scenario_dir: Option<PathBuf>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/contexts", get(contexts))
        .route("/assess", post(assess_handler))
        .route("/whatif", post(whatif_handler))
        .route("/fixtures", get(list_fixtures))
        .route("/fixtures/{name}", get(fixture))
        .with_state(Arc::new(state))
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

// ---------------------------------------------------------------------------
// Errors

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub schema_version: u32,
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    /// `parse`, `validation` or `not-found`.
    pub kind: String,
    pub field: Option<String>,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    detail: ErrorDetail,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, field: Option<String>, message: impl ToString) -> Self {
        Self {
            status,
            detail: ErrorDetail {
                kind: kind.into(),
                field,
                message: message.to_string(),
            },
        }
    }

    fn validation(field: &str, message: impl ToString) -> Self {
        Self::new(
            StatusCode::BAD_REQUEST,
            "validation",
            Some(field.into()),
            message,
        )
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::Validation { field, .. } => Self::new(
                StatusCode::BAD_REQUEST,
                "validation",
                Some(field.clone()),
                &e,
            ),
            StoreError::Parse { .. } => Self::new(StatusCode::BAD_REQUEST, "parse", None, &e),
            StoreError::Io { .. } | StoreError::Busy(_) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "io", None, &e)
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION,
            error: self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

// ---------------------------------------------------------------------------
// /contexts

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextsResponse {
    pub schema_version: u32,
    pub contexts: Vec<ContextOut>,
}

async fn contexts() -> Json<ContextsResponse> {
    Json(ContextsResponse {
        schema_version: SCHEMA_VERSION,
        contexts: CulturalContext::presets()
            .iter()
            .map(|c| ContextOut {
                name: c.name().to_string(),
                hw_ratio: c.hw_ratio(),
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// /assess

/// Same bytes the command line writes for this document.
pub fn assess_body(body: &[u8]) -> Result<String, ApiError> {
    let parsed = parse_scenario_json(body)?;
    let a = assess(&parsed.scenario, &parsed.tables)
        .map_err(|e| ApiError::validation("scenario.threat", e))?;
    Ok(render_assessment(&a))
}

async fn assess_handler(body: Bytes) -> Result<Response, ApiError> {
    let text = assess_body(&body)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

// ---------------------------------------------------------------------------
// /whatif

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub schema_version: u32,
    pub w: f64,
    pub r: f64,
    pub t: f64,
    #[serde(default = "continuous")]
    pub t_mode: TMode,
    /// Preset name or numeric ratio; moderate when absent.
    #[serde(default)]
    pub context: Option<ContextRecord>,
    /// Defaults to all three levels.
    #[serde(default)]
    pub privacy_levels: Option<Vec<u8>>,
    /// `2`, `3` or `"material-only"`.
    pub harm_class: ThreatRecord,
}

fn continuous() -> TMode {
    TMode::Continuous
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub schema_version: u32,
    pub context: ContextOut,
    pub function: FunctionOut,
    pub privacy_levels: Vec<PrivacyLevel>,
    pub harm_levels: Vec<HarmLevel>,
    /// All six blocks in grid order.
    pub blocks: Vec<WhatIfBlock>,
    pub overall: Overall,
    /// `(h, s(h))` pairs; empty when out of plane.
    pub curve: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfBlock {
    #[serde(flatten)]
    pub block: BlockOut,
    pub area: f64,
    pub b_l: f64,
    pub b_r: f64,
    pub fill_fraction: f64,
    pub decision: Decision,
    pub applicable: bool,
    /// Smallest `w` that deploys this block at the requested `r` and `t`,
    /// `None` when even `w = 1` does not.
    pub frontier_w: Option<f64>,
}

pub fn whatif(req: &WhatIfRequest) -> Result<WhatIfResponse, ApiError> {
    if req.schema_version != SCHEMA_VERSION {
        return Err(ApiError::validation(
            "schema_version",
            format!(
                "unsupported version {}, expected {SCHEMA_VERSION}",
                req.schema_version
            ),
        ));
    }
    let function =
        DynamicFunction::with_mode(req.w, req.r, req.t, req.t_mode).map_err(|e| match e {
            DomainError::OutOfRange { field, .. } => ApiError::validation(field, e),
            other => ApiError::validation("function", other),
        })?;
    let context = match &req.context {
        None => CulturalContext::default(),
        Some(ContextRecord::Ratio(r)) => {
            CulturalContext::custom(*r).map_err(|e| ApiError::validation("context", e))?
        }
        Some(ContextRecord::Name(name)) => {
            CulturalContext::parse(name).map_err(|e| ApiError::validation("context", e))?
        }
    };
    let privacy_levels: BTreeSet<PrivacyLevel> = match &req.privacy_levels {
        None => PrivacyLevel::ALL.into_iter().collect(),
        Some(v) if v.is_empty() => {
            return Err(ApiError::validation(
                "privacy_levels",
                DomainError::NoPrivacyLevels,
            ))
        }
        Some(v) => v
            .iter()
            .map(|n| {
                PrivacyLevel::from_index(*n).ok_or_else(|| {
                    ApiError::validation("privacy_levels", format!("unknown privacy level {n}"))
                })
            })
            .collect::<Result<_, _>>()?,
    };
    let threat = match &req.harm_class {
        ThreatRecord::Level(l @ 2..=3) => ThreatClass::Level(*l as u8),
        ThreatRecord::Tag(tag) if tag == "material-only" => ThreatClass::MaterialOnly,
        other => {
            return Err(ApiError::validation(
                "harm_class",
                format!("unknown harm class {other:?}, expected 2, 3 or \"material-only\""),
            ))
        }
    };
    let harm = LevelTables::default()
        .classify_harm(1, threat)
        .map_err(|e| ApiError::validation("harm_class", e))?;
    let harm_levels: BTreeSet<HarmLevel> = harm.into_iter().collect();

    let grid = build_grid(&context);
    let in_plane = !harm_levels.is_empty();
    let mut every_applicable_deploys = true;
    let blocks = decision_matrix(&grid, &function)
        .into_iter()
        .map(|s| {
            let b = s.block;
            let applicable = in_plane
                && privacy_levels.contains(&b.privacy())
                && harm_levels.contains(&b.harm());
            if applicable && s.decision != Decision::Deploy {
                every_applicable_deploys = false;
            }
            let frontier_w = deployment_frontier_w(&b, function.r(), function.t())
                .expect("function parameters are already validated")
                .w();
            WhatIfBlock {
                block: BlockOut::from(&b),
                area: b.area(),
                b_l: s.b_l,
                b_r: s.b_r,
                fill_fraction: s.fill_fraction(),
                decision: s.decision,
                applicable,
                frontier_w,
            }
        })
        .collect();
    let overall = match (in_plane, every_applicable_deploys) {
        (false, _) => Overall::OutOfPlane,
        (true, true) => Overall::Intervention,
        (true, false) => Overall::NonIntervention,
    };
    Ok(WhatIfResponse {
        schema_version: SCHEMA_VERSION,
        context: ContextOut {
            name: context.name().to_string(),
            hw_ratio: context.hw_ratio(),
        },
        function: FunctionOut {
            w: function.w(),
            r: function.r(),
            t: function.t(),
            t_mode: function.mode(),
        },
        privacy_levels: privacy_levels.into_iter().collect(),
        harm_levels: harm_levels.into_iter().collect(),
        blocks,
        overall,
        curve: if in_plane {
            curve_samples(&function, grid.h_max(), CURVE_SAMPLES)
        } else {
            Vec::new()
        },
    })
}

async fn whatif_handler(body: Bytes) -> Result<Json<WhatIfResponse>, ApiError> {
    let req: WhatIfRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "parse", None, e))?;
    whatif(&req).map(Json)
}

// ---------------------------------------------------------------------------
// /fixtures

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureList {
    pub schema_version: u32,
    pub names: Vec<String>,
}

async fn list_fixtures(State(state): State<Arc<AppState>>) -> Json<FixtureList> {
    let mut names: Vec<String> = BUILTIN_SOURCES.iter().map(|(n, _)| n.to_string()).collect();
    if let Some(dir) = &state.scenario_dir {
        if let Ok(entries) = std::fs::read_dir(dir) {
            let mut extra: Vec<String> = entries
                .filter_map(|e| e.ok())
                .filter_map(|e| {
                    let path = e.path();
                    (path.extension()? == "toml")
                        .then(|| path.file_stem()?.to_str().map(str::to_string))
                        .flatten()
                })
                .filter(|n| !names.contains(n))
                .collect();
            extra.sort();
            names.extend(extra);
        }
    }
    Json(FixtureList {
        schema_version: SCHEMA_VERSION,
        names,
    })
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Bundled fixtures take precedence over same-named files in the directory.
pub fn find_fixture(state: &AppState, name: &str) -> Result<ScenarioDocument, ApiError> {
    let not_found = || {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "not-found",
            None,
            format!("no fixture named {name:?}"),
        )
    };
    if let Some((_, src)) = BUILTIN_SOURCES.iter().find(|(n, _)| *n == name) {
        let parsed = proplane_core::parse_scenario(src).expect("bundled fixtures are valid");
        return Ok(scenario_document(&parsed));
    }
    let dir = state.scenario_dir.as_ref().ok_or_else(not_found)?;
    if !valid_name(name) {
        return Err(not_found());
    }
    let text =
        std::fs::read_to_string(dir.join(format!("{name}.toml"))).map_err(|_| not_found())?;
    let doc = read_document(&text)?;
    validate_document(&doc)?;
    Ok(doc)
}

async fn fixture(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
) -> Result<Json<ScenarioDocument>, ApiError> {
    find_fixture(&state, &name).map(Json)
}
