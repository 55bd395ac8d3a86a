//! Clients for a running swarmdeck service: the HTTP/JSON API and the framed
//! TCP broker, plus log replay and a throughput bench built on the latter.

mod bench;
mod broker;
mod http;

pub use bench::{bench, BenchConfig, BenchReport};
pub use broker::{replay, BrokerClient};
pub use http::HttpClient;

use swarmdeck_core::broker::BrokerError;
use swarmdeck_core::gateway::api::ApiError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("broker: {0}")]
    Broker(#[from] BrokerError),
    #[error("broker reported: {0}")]
    Remote(String),
    #[error("connection closed")]
    Closed,
    #[error("http: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {}", .body.error)]
    Api { status: u16, body: ApiError },
}

impl ClientError {
    /// Validation details carried by an API error, if any.
    pub fn violations(&self) -> &[String] {
        match self {
            ClientError::Api { body, .. } => &body.violations,
            _ => &[],
        }
    }
}
