//! OSC / TUIO 1.1 codec and the alive-set reconciler.

pub mod osc;
mod profile;
mod reconcile;

pub use osc::{
    decode_osc_bundle, decode_osc_message, encode_osc_bundle, encode_osc_message, DecodeError, DecodeErrorKind,
    EncodeError, OscArg, OscMessage,
};
pub use profile::{
    decode_tuio_frame, encode_tuio_frame, split_packets, tuio_bundles, TuioBlob, TuioCursor, TuioFrame, TuioObject,
    BLOB_ADDR, CURSOR_ADDR, FSEQ_OUT_OF_BAND, OBJECT_ADDR,
};
pub use reconcile::{reconcile, ReconcileState, Reconciler, TuioEntity, TuioEvent};

use thiserror::Error;

pub const TUIO_TOPIC: &str = "tracking/tuio";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TuioError {
    #[error("session {session_id}: {field} = {value} is out of range")]
    OutOfRange { session_id: i32, field: &'static str, value: f64 },
    #[error("session id {0} appears twice in one frame")]
    DuplicateSession(i32),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("packet framing error at byte {offset}: {reason}")]
    Framing { offset: usize, reason: String },
    #[error("malformed {address} message: {reason}")]
    Malformed { address: String, reason: String },
}
