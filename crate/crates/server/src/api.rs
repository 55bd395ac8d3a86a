use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::Serialize;
use serde_json::{json, Value};
use swarmdeck_core::broker::Envelope;
use swarmdeck_core::emg::{model_file, train_and_evaluate};
use swarmdeck_core::gateway::api::*;
use swarmdeck_core::gateway::bridge::{inbound_allowed, Inbound};
use swarmdeck_core::gateway::schema::{self, ui_schemas, validate_ui, INBOUND_ALLOW, OUTBOUND_ALLOW};
use swarmdeck_core::gateway::{module_rng, presets, run_scenario, ScenarioConfig, SimError};
use swarmdeck_core::gaze::fit_trajectory;
use swarmdeck_core::robot::{Kinematics, WheelSpeeds};
use swarmdeck_core::ssvep::{classify_ssvep_with_beta, synthesize_eeg, EegWindow, StimulusTable, DEFAULT_SOFTMAX_BETA};
use swarmdeck_core::tuio::{decode_tuio_frame, encode_tuio_frame, TuioFrame};

use crate::{bridge, AppState};

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/ws", get(bridge::upgrade))
        .route("/v1/health", get(health))
        .route("/v1/schemas", get(schemas))
        .route("/v1/scenarios/presets", get(preset_names))
        .route("/v1/scenarios/presets/{name}", get(preset))
        .route("/v1/scenarios/validate", post(validate))
        .route("/v1/scenarios/run", post(run))
        .route("/v1/publish", post(publish))
        .route("/v1/ssvep/classify", post(ssvep_classify))
        .route("/v1/emg/train", post(emg_train))
        .route("/v1/gaze/fit", post(gaze_fit))
        .route("/v1/kinematics", post(kinematics))
        .route("/v1/tuio/decode", post(tuio_decode))
        .route("/v1/tuio/encode", post(tuio_encode))
        .with_state(state)
}

pub struct Failure(StatusCode, ApiError);

impl Failure {
    fn bad(error: impl ToString) -> Self {
        Self(StatusCode::BAD_REQUEST, ApiError { error: error.to_string(), violations: Vec::new() })
    }

    fn invalid(error: impl ToString, violations: Vec<String>) -> Self {
        Self(StatusCode::UNPROCESSABLE_ENTITY, ApiError { error: error.to_string(), violations })
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, Failure>;

/// Parses a JSON body ourselves so malformed input gets the same error shape
/// as every other failure.
fn body<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(Failure::bad)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Failure> + Send + 'static) -> Result<T, Failure> {
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        Failure(StatusCode::INTERNAL_SERVER_ERROR, ApiError { error: e.to_string(), violations: Vec::new() })
    })?
}

async fn health(State(s): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        broker_addr: s.broker_addr.to_string(),
        connections: s.hub.connection_count(),
    })
}

#[derive(Serialize)]
struct Schemas {
    ui: Value,
    inbound: &'static [&'static str],
    outbound: &'static [&'static str],
    topics: Value,
}

async fn schemas() -> Json<Schemas> {
    let topics = json!({
        "robot/<id>/cmd_vel": "body-frame command {vx, vy, w}",
        "robot/<id>/state": "pose and world velocity {x, y, theta, vx, vy, w, t}",
        tuio_topic(): "binary TUIO 1.1 bundles",
        schema::SIM_TICK: "{tick, t}",
        schema::SWARM_MODE: "{mode, t}",
        schema::INTENT_SSVEP: "{epoch, region, probabilities, correlations, t}",
        schema::INTENT_EMG: "{gesture, scores, t}",
        schema::INTENT_GAZE_SELECTION: "{x, y, region, t}",
        schema::INTENT_GAZE_PATH: "{knots, length, t}",
        schema::INTENT_GAZE_ERROR: "{error, t}",
        schema::LOG_BEHAVIOR: "{event, ..., t}",
        schema::LOG_FORMATION: "{t, progress, length, errors}",
        schema::LOG_REJECTED: "{topic, error}",
    });
    Json(Schemas { ui: ui_schemas(), inbound: INBOUND_ALLOW, outbound: OUTBOUND_ALLOW, topics })
}

fn tuio_topic() -> &'static str {
    swarmdeck_core::tuio::TUIO_TOPIC
}

async fn preset_names() -> Json<Vec<&'static str>> {
    Json(presets::NAMES.to_vec())
}

async fn preset(Path(name): Path<String>) -> Result<Json<ScenarioConfig>, Response> {
    presets::by_name(&name).map(Json).ok_or_else(|| {
        (StatusCode::NOT_FOUND, Json(ApiError { error: format!("no preset '{name}'"), violations: Vec::new() }))
            .into_response()
    })
}

fn parse_config(text: &str) -> Result<ScenarioConfig, Failure> {
    let cfg = ScenarioConfig::from_json(text).map_err(|e| Failure::invalid("invalid scenario", e.violations))?;
    cfg.validate().map_err(|e| Failure::invalid("invalid scenario", e.violations))?;
    Ok(cfg)
}

async fn validate(text: String) -> (StatusCode, Json<ValidateResponse>) {
    match parse_config(&text) {
        Ok(_) => (StatusCode::OK, Json(ValidateResponse { valid: true, violations: Vec::new() })),
        Err(Failure(code, e)) => (code, Json(ValidateResponse { valid: false, violations: e.violations })),
    }
}

async fn run(text: String) -> ApiResult<RunResponse> {
    let req: RunRequest = body(&text)?;
    let cfg = parse_config(&req.config.to_string())?;
    let out = blocking(move || {
        run_scenario(&cfg, req.duration).map_err(|e| match e {
            SimError::Config(c) => Failure::invalid("invalid scenario", c.violations),
            other => Failure::bad(other),
        })
    })
    .await?;
    let log = req.include_log.then(|| String::from_utf8(out.log).expect("log is UTF-8 JSON lines"));
    Ok(Json(RunResponse { report: out.report, log }))
}

async fn publish(State(s): State<AppState>, text: String) -> ApiResult<PublishResponse> {
    let req: Inbound = body(&text)?;
    if !inbound_allowed(&req.topic) {
        return Err(Failure::invalid(format!("topic '{}' is not writable", req.topic), Vec::new()));
    }
    let payload = serde_json::to_vec(&req.payload).expect("value serializes");
    let m = validate_ui(&req.topic, &payload).map_err(|e| Failure::invalid(e, Vec::new()))?;
    let delivered = s.hub.publish(&Envelope::new(m.topic(), s.clock.now_us(), m.payload())).map_err(Failure::bad)?;
    Ok(Json(PublishResponse { delivered }))
}

async fn ssvep_classify(text: String) -> ApiResult<swarmdeck_core::ssvep::SsvepDecision> {
    let req: SsvepRequest = body(&text)?;
    let decision = blocking(move || {
        let table = StimulusTable::default();
        let window = match (&req.samples, req.region, req.snr) {
            (Some(rows), _, _) => {
                let fs = req.fs.ok_or_else(|| Failure::bad("fs is required with samples"))?;
                EegWindow::from_rows(rows, fs).map_err(Failure::bad)?
            }
            (None, Some(region), Some(snr)) => {
                let mut rng = module_rng(req.seed, "ssvep");
                synthesize_eeg(region, &table, snr, &req.eeg, &mut rng).map_err(Failure::bad)?
            }
            _ => return Err(Failure::bad("give either samples and fs, or region and snr")),
        };
        classify_ssvep_with_beta(&window, &table, req.eeg.harmonics, req.softmax_beta.unwrap_or(DEFAULT_SOFTMAX_BETA))
            .map_err(Failure::bad)
    })
    .await?;
    Ok(Json(decision))
}

async fn emg_train(text: String) -> ApiResult<EmgTrainResponse> {
    let req: EmgTrainRequest = if text.trim().is_empty() { EmgTrainRequest::default() } else { body(&text)? };
    let report = blocking(move || {
        let mut rng = module_rng(req.seed, "emg/train");
        train_and_evaluate(req.per_class, req.held_out_per_class, &req.train, &mut rng).map_err(Failure::bad)
    })
    .await?;
    let model_file_b64 = STANDARD.encode(model_file::to_bytes(&report.model));
    Ok(Json(EmgTrainResponse { report, model_file_b64 }))
}

async fn gaze_fit(text: String) -> ApiResult<swarmdeck_core::gaze::FittedPath> {
    let req: GazeFitRequest = body(&text)?;
    Ok(Json(fit_trajectory(&req.points).map_err(|e| Failure::invalid(e, Vec::new()))?))
}

async fn kinematics(text: String) -> ApiResult<KinematicsResponse> {
    let req: KinematicsRequest = body(&text)?;
    let kin = Kinematics::new(req.params).map_err(|e| Failure::invalid(e, Vec::new()))?;
    match (req.twist, req.wheels) {
        (Some(t), None) => {
            if !t.is_finite() {
                return Err(Failure::bad("twist must be finite"));
            }
            Ok(Json(KinematicsResponse { wheels: Some(kin.inverse(t).0), twist: Some(t), clamped: Some(kin.clamp(t)) }))
        }
        (None, Some(w)) => {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Failure::bad("wheel speeds must be finite"));
            }
            Ok(Json(KinematicsResponse { wheels: Some(w), twist: Some(kin.forward(WheelSpeeds(w))), clamped: None }))
        }
        _ => Err(Failure::bad("give exactly one of twist and wheels")),
    }
}

async fn tuio_decode(text: String) -> ApiResult<TuioFrame> {
    let req: TuioBytes = body(&text)?;
    let bytes = STANDARD.decode(&req.bytes_b64).map_err(Failure::bad)?;
    Ok(Json(decode_tuio_frame(&bytes).map_err(|e| Failure::invalid(e, Vec::new()))?))
}

async fn tuio_encode(text: String) -> ApiResult<TuioBytes> {
    let frame: TuioFrame = body(&text)?;
    let bytes = encode_tuio_frame(&frame).map_err(|e| Failure::invalid(e, Vec::new()))?;
    Ok(Json(TuioBytes { bytes_b64: STANDARD.encode(bytes) }))
}
