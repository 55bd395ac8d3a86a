//! Console wire format. Every WebSocket text frame is one JSON object.
//!
//! Outbound: `{"topic", "t" (µs), "payload"}` for JSON topics, or
//! `{"topic", "t", "payload_b64"}` for binary ones such as `tracking/tuio`.
//! Inbound: `{"topic": "ui/...", "payload": {...}}`. A rejected inbound
//! message is answered with `{"error", "topic"}` and never reaches the broker.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::{is_binary_topic, validate_ui, UiMessage, INBOUND_ALLOW, OUTBOUND_ALLOW};
use crate::broker::{Envelope, TopicFilter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outbound {
    pub topic: String,
    pub t: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_b64: Option<String>,
}

impl Outbound {
    pub fn from_envelope(env: &Envelope) -> Self {
        let json = if is_binary_topic(&env.topic) { None } else { serde_json::from_slice(&env.payload).ok() };
        let (payload, payload_b64) = match json {
            Some(v) => (Some(v), None),
            None => (None, Some(STANDARD.encode(&env.payload))),
        };
        Self { topic: env.topic.clone(), t: env.timestamp_us, payload, payload_b64 }
    }

    pub fn payload_bytes(&self) -> Result<Vec<u8>, String> {
        match (&self.payload, &self.payload_b64) {
            (Some(v), None) => Ok(serde_json::to_vec(v).expect("value serializes")),
            (None, Some(b)) => STANDARD.decode(b).map_err(|e| e.to_string()),
            _ => Err("exactly one of payload and payload_b64 must be present".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inbound {
    pub topic: String,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeError {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

fn filters(patterns: &[&str]) -> Vec<TopicFilter> {
    patterns.iter().map(|p| TopicFilter::parse(p).expect("static filter")).collect()
}

pub fn outbound_filters() -> Vec<TopicFilter> {
    filters(OUTBOUND_ALLOW)
}

pub fn inbound_allowed(topic: &str) -> bool {
    filters(INBOUND_ALLOW).iter().any(|f| f.matches(topic))
}

/// Parses and validates one inbound frame; on success returns the message as
/// it will be published.
pub fn parse_inbound(text: &str) -> Result<UiMessage, BridgeError> {
    let msg: Inbound = serde_json::from_str(text).map_err(|e| BridgeError { error: e.to_string(), topic: None })?;
    let reject = |error: String| BridgeError { error, topic: Some(msg.topic.clone()) };
    if !inbound_allowed(&msg.topic) {
        return Err(reject(format!("topic '{}' is not writable from the console", msg.topic)));
    }
    let payload = serde_json::to_vec(&msg.payload).expect("value serializes");
    validate_ui(&msg.topic, &payload).map_err(reject)
}
