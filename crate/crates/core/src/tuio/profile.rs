//! TUIO 1.1 cursor, object and blob profiles.
//!
//! A frame is written as a sequence of OSC packets, one bundle per profile that
//! has entities, each packet prefixed by its int32 size (the OSC stream-transport
//! framing). Every bundle holds `alive`, one `set` per entity and `fseq`. A frame
//! with no entities at all is sent as a single `/tuio/2Dobj` bundle holding an
//! empty alive list so the frame number still travels.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::osc::{decode_osc_bundle, encode_osc_bundle, OscArg, OscMessage};
use super::TuioError;

pub const CURSOR_ADDR: &str = "/tuio/2Dcur";
pub const OBJECT_ADDR: &str = "/tuio/2Dobj";
pub const BLOB_ADDR: &str = "/tuio/2Dblb";

/// fseq value for out-of-band frames that bypass the stale-frame check.
pub const FSEQ_OUT_OF_BAND: i32 = -1;

fn q(v: f64) -> f64 {
    v as f32 as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TuioCursor {
    pub session_id: i32,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub motion_accel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TuioObject {
    pub session_id: i32,
    pub class_id: i32,
    pub x: f64,
    pub y: f64,
    pub angle: f64,
    pub vx: f64,
    pub vy: f64,
    pub vang: f64,
    pub motion_accel: f64,
    pub rotation_accel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TuioBlob {
    pub session_id: i32,
    pub x: f64,
    pub y: f64,
    pub angle: f64,
    pub width: f64,
    pub height: f64,
    pub area: f64,
    pub vx: f64,
    pub vy: f64,
    pub vang: f64,
    pub motion_accel: f64,
    pub rotation_accel: f64,
}

impl TuioCursor {
    fn set_args(&self) -> Vec<OscArg> {
        let f = |v: f64| OscArg::Float(v as f32);
        vec![
            "set".into(),
            OscArg::Int(self.session_id),
            f(self.x),
            f(self.y),
            f(self.vx),
            f(self.vy),
            f(self.motion_accel),
        ]
    }

    pub fn quantized(&self) -> Self {
        Self {
            session_id: self.session_id,
            x: q(self.x),
            y: q(self.y),
            vx: q(self.vx),
            vy: q(self.vy),
            motion_accel: q(self.motion_accel),
        }
    }
}

impl TuioObject {
    fn set_args(&self) -> Vec<OscArg> {
        let f = |v: f64| OscArg::Float(v as f32);
        vec![
            "set".into(),
            OscArg::Int(self.session_id),
            OscArg::Int(self.class_id),
            f(self.x),
            f(self.y),
            f(self.angle),
            f(self.vx),
            f(self.vy),
            f(self.vang),
            f(self.motion_accel),
            f(self.rotation_accel),
        ]
    }

    pub fn quantized(&self) -> Self {
        Self {
            session_id: self.session_id,
            class_id: self.class_id,
            x: q(self.x),
            y: q(self.y),
            angle: q(self.angle),
            vx: q(self.vx),
            vy: q(self.vy),
            vang: q(self.vang),
            motion_accel: q(self.motion_accel),
            rotation_accel: q(self.rotation_accel),
        }
    }
}

impl TuioBlob {
    fn set_args(&self) -> Vec<OscArg> {
        let f = |v: f64| OscArg::Float(v as f32);
        vec![
            "set".into(),
            OscArg::Int(self.session_id),
            f(self.x),
            f(self.y),
            f(self.angle),
            f(self.width),
            f(self.height),
            f(self.area),
            f(self.vx),
            f(self.vy),
            f(self.vang),
            f(self.motion_accel),
            f(self.rotation_accel),
        ]
    }

    pub fn quantized(&self) -> Self {
        Self {
            session_id: self.session_id,
            x: q(self.x),
            y: q(self.y),
            angle: q(self.angle),
            width: q(self.width),
            height: q(self.height),
            area: q(self.area),
            vx: q(self.vx),
            vy: q(self.vy),
            vang: q(self.vang),
            motion_accel: q(self.motion_accel),
            rotation_accel: q(self.rotation_accel),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TuioFrame {
    pub fseq: i32,
    pub cursors: Vec<TuioCursor>,
    pub objects: Vec<TuioObject>,
    pub blobs: Vec<TuioBlob>,
}

impl TuioFrame {
    pub fn new(fseq: i32) -> Self {
        Self { fseq, ..Default::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.cursors.is_empty() && self.objects.is_empty() && self.blobs.is_empty()
    }

    pub fn alive_ids(&self) -> BTreeSet<i32> {
        self.cursors
            .iter()
            .map(|c| c.session_id)
            .chain(self.objects.iter().map(|o| o.session_id))
            .chain(self.blobs.iter().map(|b| b.session_id))
            .collect()
    }

    /// The frame as it looks after one trip through float32.
    pub fn quantized(&self) -> Self {
        Self {
            fseq: self.fseq,
            cursors: self.cursors.iter().map(TuioCursor::quantized).collect(),
            objects: self.objects.iter().map(TuioObject::quantized).collect(),
            blobs: self.blobs.iter().map(TuioBlob::quantized).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), TuioError> {
        let mut seen = BTreeSet::new();
        let mut check_id = |id: i32| {
            if seen.insert(id) {
                Ok(())
            } else {
                Err(TuioError::DuplicateSession(id))
            }
        };
        let unit = |name: &'static str, id: i32, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(TuioError::OutOfRange { session_id: id, field: name, value: v })
            }
        };
        let finite = |name: &'static str, id: i32, vals: &[f64]| {
            if vals.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(TuioError::OutOfRange { session_id: id, field: name, value: f64::NAN })
            }
        };
        for c in &self.cursors {
            check_id(c.session_id)?;
            unit("x", c.session_id, c.x)?;
            unit("y", c.session_id, c.y)?;
            finite("motion", c.session_id, &[c.vx, c.vy, c.motion_accel])?;
        }
        for o in &self.objects {
            check_id(o.session_id)?;
            unit("x", o.session_id, o.x)?;
            unit("y", o.session_id, o.y)?;
            finite("motion", o.session_id, &[o.angle, o.vx, o.vy, o.vang, o.motion_accel, o.rotation_accel])?;
        }
        for b in &self.blobs {
            check_id(b.session_id)?;
            unit("x", b.session_id, b.x)?;
            unit("y", b.session_id, b.y)?;
            for (name, v) in [("width", b.width), ("height", b.height), ("area", b.area)] {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(TuioError::OutOfRange { session_id: b.session_id, field: name, value: v });
                }
            }
            finite("motion", b.session_id, &[b.angle, b.vx, b.vy, b.vang, b.motion_accel, b.rotation_accel])?;
        }
        Ok(())
    }
}

fn profile_messages(addr: &str, ids: Vec<i32>, sets: Vec<Vec<OscArg>>, fseq: i32) -> Vec<OscMessage> {
    let mut alive = Vec::with_capacity(ids.len() + 1);
    alive.push(OscArg::from("alive"));
    alive.extend(ids.into_iter().map(OscArg::Int));
    let mut msgs = Vec::with_capacity(sets.len() + 2);
    msgs.push(OscMessage::new(addr, alive));
    msgs.extend(sets.into_iter().map(|a| OscMessage::new(addr, a)));
    msgs.push(OscMessage::new(addr, vec!["fseq".into(), OscArg::Int(fseq)]));
    msgs
}

/// OSC bundles for a frame, one per profile present.
pub fn tuio_bundles(frame: &TuioFrame) -> Result<Vec<Vec<u8>>, TuioError> {
    frame.validate()?;
    let mut bundles = Vec::new();
    if !frame.cursors.is_empty() {
        let msgs = profile_messages(
            CURSOR_ADDR,
            frame.cursors.iter().map(|c| c.session_id).collect(),
            frame.cursors.iter().map(TuioCursor::set_args).collect(),
            frame.fseq,
        );
        bundles.push(encode_osc_bundle(&msgs)?);
    }
    if !frame.objects.is_empty() || frame.is_empty() {
        let msgs = profile_messages(
            OBJECT_ADDR,
            frame.objects.iter().map(|o| o.session_id).collect(),
            frame.objects.iter().map(TuioObject::set_args).collect(),
            frame.fseq,
        );
        bundles.push(encode_osc_bundle(&msgs)?);
    }
    if !frame.blobs.is_empty() {
        let msgs = profile_messages(
            BLOB_ADDR,
            frame.blobs.iter().map(|b| b.session_id).collect(),
            frame.blobs.iter().map(TuioBlob::set_args).collect(),
            frame.fseq,
        );
        bundles.push(encode_osc_bundle(&msgs)?);
    }
    Ok(bundles)
}

pub fn encode_tuio_frame(frame: &TuioFrame) -> Result<Vec<u8>, TuioError> {
    let mut out = Vec::new();
    for b in tuio_bundles(frame)? {
        out.extend_from_slice(&(b.len() as i32).to_be_bytes());
        out.extend_from_slice(&b);
    }
    Ok(out)
}

/// Splits size-prefixed OSC packets.
pub fn split_packets(bytes: &[u8]) -> Result<Vec<&[u8]>, TuioError> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        if bytes.len() - pos < 4 {
            return Err(TuioError::Framing { offset: pos, reason: "truncated packet size".into() });
        }
        let size = i32::from_be_bytes([bytes[pos], bytes[pos + 1], bytes[pos + 2], bytes[pos + 3]]);
        if size < 0 || (size as usize) > bytes.len() - pos - 4 {
            return Err(TuioError::Framing { offset: pos, reason: format!("bad packet size {size}") });
        }
        out.push(&bytes[pos + 4..pos + 4 + size as usize]);
        pos += 4 + size as usize;
    }
    Ok(out)
}

fn malformed(addr: &str, what: impl Into<String>) -> TuioError {
    TuioError::Malformed { address: addr.to_string(), reason: what.into() }
}

fn floats(addr: &str, args: &[OscArg]) -> Result<Vec<f64>, TuioError> {
    args.iter().map(|a| a.as_float().map(f64::from).ok_or_else(|| malformed(addr, "expected float argument"))).collect()
}

fn int_at(addr: &str, args: &[OscArg], i: usize) -> Result<i32, TuioError> {
    args.get(i).and_then(OscArg::as_int).ok_or_else(|| malformed(addr, format!("expected int at {i}")))
}

#[derive(Default)]
struct ProfileState {
    alive: Option<BTreeSet<i32>>,
}

pub fn decode_tuio_frame(bytes: &[u8]) -> Result<TuioFrame, TuioError> {
    let packets = split_packets(bytes)?;
    if packets.is_empty() {
        return Err(TuioError::Framing { offset: 0, reason: "no TUIO bundle in payload".into() });
    }
    let mut frame = TuioFrame::new(FSEQ_OUT_OF_BAND);
    let mut fseq: Option<i32> = None;
    for packet in packets {
        let mut state = ProfileState::default();
        let mut cursors = Vec::new();
        let mut objects = Vec::new();
        let mut blobs = Vec::new();
        for msg in decode_osc_bundle(packet)? {
            let addr = msg.address.as_str();
            if !matches!(addr, CURSOR_ADDR | OBJECT_ADDR | BLOB_ADDR) {
                continue;
            }
            let cmd = msg.args.first().and_then(OscArg::as_str).ok_or_else(|| malformed(addr, "missing command"))?;
            let rest = &msg.args[1..];
            match cmd {
                "alive" => {
                    let ids = (0..rest.len()).map(|i| int_at(addr, rest, i)).collect::<Result<_, _>>()?;
                    state.alive = Some(ids);
                }
                "fseq" => {
                    let f = int_at(addr, rest, 0)?;
                    match fseq {
                        Some(prev) if prev != f => return Err(malformed(addr, "bundles disagree on fseq")),
                        _ => fseq = Some(f),
                    }
                }
                "set" => match addr {
                    CURSOR_ADDR => {
                        if rest.len() != 6 {
                            return Err(malformed(addr, "cursor set needs 6 arguments"));
                        }
                        let f = floats(addr, &rest[1..])?;
                        cursors.push(TuioCursor {
                            session_id: int_at(addr, rest, 0)?,
                            x: f[0],
                            y: f[1],
                            vx: f[2],
                            vy: f[3],
                            motion_accel: f[4],
                        });
                    }
                    OBJECT_ADDR => {
                        if rest.len() != 10 {
                            return Err(malformed(addr, "object set needs 10 arguments"));
                        }
                        let f = floats(addr, &rest[2..])?;
                        objects.push(TuioObject {
                            session_id: int_at(addr, rest, 0)?,
                            class_id: int_at(addr, rest, 1)?,
                            x: f[0],
                            y: f[1],
                            angle: f[2],
                            vx: f[3],
                            vy: f[4],
                            vang: f[5],
                            motion_accel: f[6],
                            rotation_accel: f[7],
                        });
                    }
                    _ => {
                        if rest.len() != 12 {
                            return Err(malformed(addr, "blob set needs 12 arguments"));
                        }
                        let f = floats(addr, &rest[1..])?;
                        blobs.push(TuioBlob {
                            session_id: int_at(addr, rest, 0)?,
                            x: f[0],
                            y: f[1],
                            angle: f[2],
                            width: f[3],
                            height: f[4],
                            area: f[5],
                            vx: f[6],
                            vy: f[7],
                            vang: f[8],
                            motion_accel: f[9],
                            rotation_accel: f[10],
                        });
                    }
                },
                // "source" and vendor commands are ignored
                _ => {}
            }
        }
        // set messages for ids that are not alive carry no meaning
        if let Some(alive) = &state.alive {
            cursors.retain(|c| alive.contains(&c.session_id));
            objects.retain(|o| alive.contains(&o.session_id));
            blobs.retain(|b| alive.contains(&b.session_id));
        }
        frame.cursors.extend(cursors);
        frame.objects.extend(objects);
        frame.blobs.extend(blobs);
    }
    frame.fseq = fseq.unwrap_or(FSEQ_OUT_OF_BAND);
    Ok(frame)
}
