//! Local HTTP API over the neuron model, used by the interactive workbench.
//!
//! Every handler is a pure function of its request body. Request bodies that
//! do not parse give 400, configurations rejected by the validator give 422
//! and diverging integrations give 500.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mixfeed_core::analysis::{
    classify_regime, steady_state_curves, CurveGrid, RegimeReport, SteadyStateCurveSet,
};
use mixfeed_core::dynamics::{
    firing_metrics, integrate, Burst, FiringMetrics, MetricsOptions, SolverOptions, Trace,
};
use mixfeed_core::model::{BiasConfiguration, ConfigWarning, InputSignal, NeuronState};
use mixfeed_core::presets;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const DEFAULT_T_END_CAP: f64 = 30.0;
pub const DEFAULT_MAX_POINTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceConfig {
    /// Longest simulated horizon accepted by `/api/simulate` (s).
    pub t_end_cap: f64,
    /// Upper bound on returned trace samples.
    pub max_points: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            t_end_cap: DEFAULT_T_END_CAP,
            max_points: DEFAULT_MAX_POINTS,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverRequest {
    pub t_end: f64,
    pub dt: Option<f64>,
    pub record_stride: Option<usize>,
    pub initial_state: Option<NeuronState>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateRequest {
    pub cfg: BiasConfiguration,
    pub input: InputSignal,
    pub solver: SolverRequest,
    /// Requested trace size; clamped to the service limit.
    pub max_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecimatedTrace {
    pub t: Vec<f64>,
    pub i_f: Vec<f64>,
    pub i_s: Vec<f64>,
    pub i_u: Vec<f64>,
    pub i_app: Vec<f64>,
    /// Samples in the full-resolution trace.
    pub source_len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateResponse {
    pub trace: DecimatedTrace,
    pub spikes: Vec<f64>,
    pub bursts: Vec<Burst>,
    /// `None` when the horizon ends inside the transient window.
    pub metrics: Option<FiringMetrics>,
    pub dt: f64,
    pub warnings: Vec<ConfigWarning>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesRequest {
    pub cfg: BiasConfiguration,
    pub grid: Option<CurveGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvesResponse {
    pub curves: SteadyStateCurveSet,
    pub report: RegimeReport,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    pub cfg: BiasConfiguration,
    pub grid: Option<CurveGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetEntry {
    pub name: &'static str,
    pub cfg: BiasConfiguration,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<mixfeed_core::Error> for ApiError {
    fn from(e: mixfeed_core::Error) -> Self {
        use mixfeed_core::Error as E;
        let status = match e {
            E::Diverged { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            E::Parameter { .. } | E::Window { .. } | E::Input(_) | E::Domain(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(ErrorBody { error: self.message })).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

/// Min-max decimation: the trace is cut into `max_points / 2` buckets and
/// each bucket keeps the samples holding its smallest and largest `i_f`,
/// in time order. Traces already within the limit are returned unchanged.
pub fn decimate(trace: &Trace, max_points: usize) -> DecimatedTrace {
    let n = trace.len();
    let max_points = max_points.max(2);
    let idx: Vec<usize> = if n <= max_points {
        (0..n).collect()
    } else {
        let buckets = max_points / 2;
        let mut idx = Vec::with_capacity(2 * buckets);
        for b in 0..buckets {
            let lo = b * n / buckets;
            let hi = (b + 1) * n / buckets;
            if lo >= hi {
                continue;
            }
            let (mut kmin, mut kmax) = (lo, lo);
            for k in lo..hi {
                if trace.i_f[k] < trace.i_f[kmin] {
                    kmin = k;
                }
                if trace.i_f[k] > trace.i_f[kmax] {
                    kmax = k;
                }
            }
            idx.push(kmin.min(kmax));
            if kmin != kmax {
                idx.push(kmin.max(kmax));
            }
        }
        idx
    };
    let pick = |v: &[f64]| idx.iter().map(|&k| v[k]).collect();
    DecimatedTrace {
        t: pick(&trace.t),
        i_f: pick(&trace.i_f),
        i_s: pick(&trace.i_s),
        i_u: pick(&trace.i_u),
        i_app: pick(&trace.i_app),
        source_len: n,
    }
}

pub fn simulate(req: &SimulateRequest, limits: &ServiceConfig) -> Result<SimulateResponse, ApiError> {
    let t_end = req.solver.t_end;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(ApiError::bad_request("solver.t_end must be a positive number of seconds"));
    }
    if t_end > limits.t_end_cap {
        return Err(ApiError::bad_request(format!(
            "solver.t_end = {t_end} s exceeds the interactive limit of {} s; use the command-line harness for longer runs",
            limits.t_end_cap
        )));
    }
    req.cfg.validate()?;
    let mut opts = SolverOptions::for_config(&req.cfg, t_end);
    if let Some(dt) = req.solver.dt {
        opts.dt = dt;
    }
    if let Some(k) = req.solver.record_stride {
        opts.record_stride = k;
    }
    if let Some(y0) = req.solver.initial_state {
        opts.initial_state = y0;
    }
    let trace = integrate(&req.cfg, &req.input, &opts)?;
    let mopts = MetricsOptions::for_config(&req.cfg);
    let metrics = if mopts.window_start < trace.t_end() {
        Some(firing_metrics(&trace, &mopts)?)
    } else {
        None
    };
    let max_points = req.max_points.unwrap_or(limits.max_points).min(limits.max_points);
    Ok(SimulateResponse {
        trace: decimate(&trace, max_points),
        spikes: trace.spikes.clone(),
        bursts: trace.bursts.clone(),
        metrics,
        dt: trace.dt,
        warnings: trace.warnings.clone(),
    })
}

fn curve_set(cfg: &BiasConfiguration, grid: Option<CurveGrid>) -> Result<(SteadyStateCurveSet, RegimeReport), ApiError> {
    cfg.validate()?;
    let grid = grid.unwrap_or_else(|| CurveGrid::for_config(cfg));
    let set = steady_state_curves(cfg, &grid)?;
    let report = classify_regime(&set.fast, &set.slow, &set.ultraslow)?;
    Ok((set, report))
}

pub fn curves(req: &CurvesRequest) -> Result<CurvesResponse, ApiError> {
    let (curves, report) = curve_set(&req.cfg, req.grid)?;
    Ok(CurvesResponse { curves, report })
}

pub fn classify(req: &ClassifyRequest) -> Result<RegimeReport, ApiError> {
    Ok(curve_set(&req.cfg, req.grid)?.1)
}

pub fn preset_list() -> Vec<PresetEntry> {
    presets::NAMES
        .iter()
        .filter_map(|&name| presets::get(name).map(|cfg| PresetEntry { name, cfg }))
        .collect()
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        message: e.to_string(),
    })?
}

async fn simulate_handler(State(limits): State<Arc<ServiceConfig>>, body: Bytes) -> Result<Json<SimulateResponse>, ApiError> {
    let req: SimulateRequest = parse(&body)?;
    blocking(move || simulate(&req, &limits)).await.map(Json)
}

async fn curves_handler(body: Bytes) -> Result<Json<CurvesResponse>, ApiError> {
    let req: CurvesRequest = parse(&body)?;
    blocking(move || curves(&req)).await.map(Json)
}

async fn classify_handler(body: Bytes) -> Result<Json<RegimeReport>, ApiError> {
    let req: ClassifyRequest = parse(&body)?;
    blocking(move || classify(&req)).await.map(Json)
}

async fn presets_handler() -> Json<Vec<PresetEntry>> {
    Json(preset_list())
}

const INDEX_HTML: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>mixfeed workbench</title></head>\n<body><h1>mixfeed workbench</h1><p>The API is served under <code>/api</code>. The workbench UI bundle is not installed.</p></body></html>\n";

async fn index() -> impl IntoResponse {
    ([(header::CACHE_CONTROL, "no-store")], Html(INDEX_HTML))
}

pub fn router() -> Router {
    router_with(ServiceConfig::default())
}

pub fn router_with(config: ServiceConfig) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/simulate", post(simulate_handler))
        .route("/api/curves", post(curves_handler))
        .route("/api/classify", post(classify_handler))
        .route("/api/presets", get(presets_handler))
        .with_state(Arc::new(config))
}

pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}
