//! Newline-delimited JSON event log, one broker message per line with a
//! base64 payload.

use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    /// Microseconds of simulated time.
    pub sim_time: u64,
    pub topic: String,
    pub payload: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line<'a> {
    sim_time: u64,
    topic: std::borrow::Cow<'a, str>,
    payload: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("log record at byte offset {offset} (line {line}): {reason}")]
pub struct LogError {
    pub offset: usize,
    pub line: usize,
    pub reason: String,
}

pub fn encode_record(r: &LogRecord, out: &mut Vec<u8>) {
    let line = Line { sim_time: r.sim_time, topic: r.topic.as_str().into(), payload: STANDARD.encode(&r.payload) };
    serde_json::to_writer(&mut *out, &line).expect("log line serializes");
    out.push(b'\n');
}

pub fn encode_log(records: &[LogRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        encode_record(r, &mut out);
    }
    out
}

/// Parses a whole log. Every line must end in a newline, decode, and carry a
/// sim_time no earlier than the line before it.
pub fn parse_log(bytes: &[u8]) -> Result<Vec<LogRecord>, LogError> {
    let mut records = Vec::new();
    let mut offset = 0;
    let mut line_no = 0;
    let mut last = 0;
    while offset < bytes.len() {
        line_no += 1;
        let err = |reason: String| LogError { offset, line: line_no, reason };
        let rest = &bytes[offset..];
        let Some(nl) = rest.iter().position(|b| *b == b'\n') else {
            return Err(err("truncated record (missing newline)".into()));
        };
        let line: Line = serde_json::from_slice(&rest[..nl]).map_err(|e| err(e.to_string()))?;
        let payload = STANDARD.decode(line.payload.as_bytes()).map_err(|e| err(format!("payload: {e}")))?;
        if line.sim_time < last {
            return Err(err(format!("sim_time {} goes backwards (previous {last})", line.sim_time)));
        }
        last = line.sim_time;
        records.push(LogRecord { sim_time: line.sim_time, topic: line.topic.into_owned(), payload });
        offset += nl + 1;
    }
    Ok(records)
}

pub fn log_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Wall-clock wait before each record when replaying at `speed`× real time;
/// speed 0 means no waiting at all.
pub fn replay_delays(records: &[LogRecord], speed: f64) -> Vec<Duration> {
    let mut prev = records.first().map_or(0, |r| r.sim_time);
    records
        .iter()
        .map(|r| {
            let gap = r.sim_time.saturating_sub(prev);
            prev = r.sim_time;
            if speed > 0.0 && speed.is_finite() {
                Duration::from_secs_f64(gap as f64 * 1e-6 / speed)
            } else {
                Duration::ZERO
            }
        })
        .collect()
}
