//! Length-prefixed wire frames.
//!
//! ```text
//! +------+----------------+----------------+
//! | type | length (u32 BE)| body (length)  |
//! +------+----------------+----------------+
//! ```
//!
//! A PUBLISH body is `topic_len: u16 BE | topic | timestamp_us: u64 BE | payload`.
//! SUBSCRIBE from a client carries the filter string; the broker answers with a
//! SUBSCRIBE frame whose body is `subscription_id: u32 BE | filter`. CONNECT and
//! ERROR bodies are UTF-8 text, PING/PONG bodies are opaque and echoed.

use super::{BrokerError, Envelope, MAX_PAYLOAD};

pub const HEADER_LEN: usize = 5;
/// Largest body a frame may carry: a maximal PUBLISH with a maximal topic.
pub const MAX_FRAME_BODY: usize = MAX_PAYLOAD + 2 + u16::MAX as usize + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameType {
    Connect = 1,
    Subscribe = 2,
    Publish = 3,
    Ping = 4,
    Pong = 5,
    Error = 6,
}

impl TryFrom<u8> for FrameType {
    type Error = BrokerError;
    fn try_from(b: u8) -> Result<Self, BrokerError> {
        Ok(match b {
            1 => FrameType::Connect,
            2 => FrameType::Subscribe,
            3 => FrameType::Publish,
            4 => FrameType::Ping,
            5 => FrameType::Pong,
            6 => FrameType::Error,
            other => return Err(BrokerError::Protocol(format!("unknown frame type {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub frame_type: FrameType,
    pub body: Vec<u8>,
}

impl Frame {
    pub fn new(frame_type: FrameType, body: Vec<u8>) -> Self {
        Self { frame_type, body }
    }

    pub fn ping() -> Self {
        Self::new(FrameType::Ping, Vec::new())
    }

    pub fn connect(name: &str) -> Self {
        Self::new(FrameType::Connect, name.as_bytes().to_vec())
    }

    pub fn subscribe(filter: &str) -> Self {
        Self::new(FrameType::Subscribe, filter.as_bytes().to_vec())
    }

    pub fn subscribe_ack(id: u32, filter: &str) -> Self {
        let mut body = id.to_be_bytes().to_vec();
        body.extend_from_slice(filter.as_bytes());
        Self::new(FrameType::Subscribe, body)
    }

    pub fn error(msg: &str) -> Self {
        Self::new(FrameType::Error, msg.as_bytes().to_vec())
    }

    pub fn publish(env: &Envelope) -> Self {
        Self::new(FrameType::Publish, encode_publish_body(env))
    }

    pub fn text(&self) -> Result<&str, BrokerError> {
        std::str::from_utf8(&self.body).map_err(|_| BrokerError::Protocol("body is not UTF-8".into()))
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.body.len()
    }
}

pub fn encode_frame(frame: &Frame) -> Vec<u8> {
    let mut out = Vec::with_capacity(frame.encoded_len());
    encode_frame_into(frame, &mut out);
    out
}

pub fn encode_frame_into(frame: &Frame, out: &mut Vec<u8>) {
    out.push(frame.frame_type as u8);
    out.extend_from_slice(&(frame.body.len() as u32).to_be_bytes());
    out.extend_from_slice(&frame.body);
}

/// Decodes one frame from the front of `buf`.
///
/// `Ok(None)` means the buffer holds an incomplete frame; on success the second
/// tuple element is the number of bytes consumed.
pub fn decode_frame(buf: &[u8]) -> Result<Option<(Frame, usize)>, BrokerError> {
    if buf.len() < HEADER_LEN {
        return Ok(None);
    }
    let frame_type = FrameType::try_from(buf[0])?;
    let len = u32::from_be_bytes([buf[1], buf[2], buf[3], buf[4]]) as usize;
    if len > MAX_FRAME_BODY {
        return Err(BrokerError::Protocol(format!("frame length {len} exceeds {MAX_FRAME_BODY}")));
    }
    let total = HEADER_LEN + len;
    if buf.len() < total {
        return Ok(None);
    }
    Ok(Some((Frame::new(frame_type, buf[HEADER_LEN..total].to_vec()), total)))
}

pub fn encode_publish_body(env: &Envelope) -> Vec<u8> {
    let topic = env.topic.as_bytes();
    let mut body = Vec::with_capacity(2 + topic.len() + 8 + env.payload.len());
    body.extend_from_slice(&(topic.len() as u16).to_be_bytes());
    body.extend_from_slice(topic);
    body.extend_from_slice(&env.timestamp_us.to_be_bytes());
    body.extend_from_slice(&env.payload);
    body
}

/// Parses a PUBLISH body. Topic and payload limits are checked separately by
/// [`Envelope::validate`] so the broker can answer with a precise ERROR.
pub fn decode_publish_body(body: &[u8]) -> Result<Envelope, BrokerError> {
    if body.len() < 2 {
        return Err(BrokerError::Protocol("publish body shorter than topic length".into()));
    }
    let tlen = u16::from_be_bytes([body[0], body[1]]) as usize;
    if body.len() < 2 + tlen + 8 {
        return Err(BrokerError::Protocol("publish body truncated".into()));
    }
    let topic = std::str::from_utf8(&body[2..2 + tlen])
        .map_err(|_| BrokerError::Protocol("topic is not UTF-8".into()))?
        .to_string();
    let mut ts = [0u8; 8];
    ts.copy_from_slice(&body[2 + tlen..2 + tlen + 8]);
    Ok(Envelope { topic, timestamp_us: u64::from_be_bytes(ts), payload: body[2 + tlen + 8..].to_vec() })
}

pub fn decode_subscribe_ack(body: &[u8]) -> Result<(u32, String), BrokerError> {
    if body.len() < 4 {
        return Err(BrokerError::Protocol("subscribe ack too short".into()));
    }
    let id = u32::from_be_bytes([body[0], body[1], body[2], body[3]]);
    let filter =
        std::str::from_utf8(&body[4..]).map_err(|_| BrokerError::Protocol("filter is not UTF-8".into()))?.to_string();
    Ok((id, filter))
}
