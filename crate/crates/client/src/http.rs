use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use swarmdeck_core::gateway::api::*;
use swarmdeck_core::gateway::ScenarioConfig;
use swarmdeck_core::gaze::FittedPath;
use swarmdeck_core::ssvep::SsvepDecision;
use swarmdeck_core::tuio::TuioFrame;
use swarmdeck_core::world::Point;

use crate::ClientError;

/// Typed wrapper over the service's `/v1` endpoints.
#[derive(Debug, Clone)]
pub struct HttpClient {
    base: String,
    http: reqwest::Client,
}

impl HttpClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn decode<R: DeserializeOwned>(resp: reqwest::Response) -> Result<R, ClientError> {
        let status = resp.status();
        let bytes = resp.bytes().await?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Api {
                status: status.as_u16(),
                body: ApiError { error: format!("undecodable response: {e}"), violations: Vec::new() },
            });
        }
        let body = serde_json::from_slice(&bytes).unwrap_or_else(|_| ApiError {
            error: String::from_utf8_lossy(&bytes).into_owned(),
            violations: Vec::new(),
        });
        Err(ClientError::Api { status: status.as_u16(), body })
    }

    async fn get<R: DeserializeOwned>(&self, path: &str) -> Result<R, ClientError> {
        Self::decode(self.http.get(format!("{}{path}", self.base)).send().await?).await
    }

    async fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, ClientError> {
        Self::decode(self.http.post(format!("{}{path}", self.base)).json(body).send().await?).await
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("/v1/health").await
    }

    pub async fn schemas(&self) -> Result<Value, ClientError> {
        self.get("/v1/schemas").await
    }

    pub async fn preset(&self, name: &str) -> Result<ScenarioConfig, ClientError> {
        self.get(&format!("/v1/scenarios/presets/{name}")).await
    }

    /// Sends the document as-is, so syntax errors are reported by the server.
    pub async fn validate(&self, scenario_json: &str) -> Result<ValidateResponse, ClientError> {
        let resp = self
            .http
            .post(format!("{}/v1/scenarios/validate", self.base))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(scenario_json.to_string())
            .send()
            .await?;
        let status = resp.status();
        let bytes = resp.bytes().await?;
        serde_json::from_slice(&bytes).map_err(|_| ClientError::Api {
            status: status.as_u16(),
            body: ApiError { error: String::from_utf8_lossy(&bytes).into_owned(), violations: Vec::new() },
        })
    }

    pub async fn run(&self, req: &RunRequest) -> Result<RunResponse, ClientError> {
        self.post("/v1/scenarios/run", req).await
    }

    pub async fn publish(&self, topic: &str, payload: Value) -> Result<PublishResponse, ClientError> {
        self.post("/v1/publish", &PublishRequest { topic: topic.into(), payload }).await
    }

    pub async fn ssvep_classify(&self, req: &SsvepRequest) -> Result<SsvepDecision, ClientError> {
        self.post("/v1/ssvep/classify", req).await
    }

    pub async fn emg_train(&self, req: &EmgTrainRequest) -> Result<EmgTrainResponse, ClientError> {
        self.post("/v1/emg/train", req).await
    }

    pub async fn gaze_fit(&self, points: Vec<Point>) -> Result<FittedPath, ClientError> {
        self.post("/v1/gaze/fit", &GazeFitRequest { points }).await
    }

    pub async fn kinematics(&self, req: &KinematicsRequest) -> Result<KinematicsResponse, ClientError> {
        self.post("/v1/kinematics", req).await
    }

    pub async fn tuio_decode(&self, bytes_b64: String) -> Result<TuioFrame, ClientError> {
        self.post("/v1/tuio/decode", &TuioBytes { bytes_b64 }).await
    }

    pub async fn tuio_encode(&self, frame: &TuioFrame) -> Result<TuioBytes, ClientError> {
        self.post("/v1/tuio/encode", frame).await
    }
}
