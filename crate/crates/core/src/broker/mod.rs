//! Topic-based publish/subscribe hub.
//!
//! Delivery is at-most-once with no retained messages. The routing table lives
//! behind one mutex; each connection owns an ordered outbound queue, so the
//! messages one publisher sends on one topic reach every subscriber in publish
//! order. [`LocalClient`] speaks the same contract without a socket and is what
//! the deterministic headless simulation uses.

mod frame;
mod hub;
mod topic;

pub use frame::{
    decode_frame, decode_publish_body, decode_subscribe_ack, encode_frame, encode_frame_into, encode_publish_body,
    Frame, FrameType, HEADER_LEN, MAX_FRAME_BODY,
};
pub use hub::{ConnId, Hub, LocalClient, Sink, SubId};
pub use topic::{topic_matches, validate_topic, TopicFilter};

use thiserror::Error;

/// Largest payload a single envelope may carry (1 MiB).
pub const MAX_PAYLOAD: usize = 1 << 20;
pub const DEFAULT_PORT: u16 = 7788;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BrokerError {
    #[error("invalid topic: {0}")]
    InvalidTopic(String),
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("payload of {0} bytes exceeds the 1 MiB limit")]
    PayloadTooLarge(usize),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("connection {0} is not attached")]
    UnknownConnection(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub topic: String,
    /// Microseconds since the start of the run.
    pub timestamp_us: u64,
    pub payload: Vec<u8>,
}

impl Envelope {
    pub fn new(topic: impl Into<String>, timestamp_us: u64, payload: Vec<u8>) -> Self {
        Self { topic: topic.into(), timestamp_us, payload }
    }

    pub fn validate(&self) -> Result<(), BrokerError> {
        validate_topic(&self.topic)?;
        if self.payload.len() > MAX_PAYLOAD {
            return Err(BrokerError::PayloadTooLarge(self.payload.len()));
        }
        Ok(())
    }
}
