//! OSC 1.0 messages and bundles (int32, float32 and string arguments only).

use std::fmt;

use thiserror::Error;

pub const BUNDLE_TAG: &[u8; 8] = b"#bundle\0";
/// Timetag meaning "immediately".
pub const TIMETAG_IMMEDIATE: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum OscArg {
    Int(i32),
    Float(f32),
    Str(String),
}

impl OscArg {
    fn tag(&self) -> u8 {
        match self {
            OscArg::Int(_) => b'i',
            OscArg::Float(_) => b'f',
            OscArg::Str(_) => b's',
        }
    }

    pub fn as_int(&self) -> Option<i32> {
        match self {
            OscArg::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f32> {
        match self {
            OscArg::Float(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            OscArg::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl From<i32> for OscArg {
    fn from(v: i32) -> Self {
        OscArg::Int(v)
    }
}

impl From<f32> for OscArg {
    fn from(v: f32) -> Self {
        OscArg::Float(v)
    }
}

impl From<&str> for OscArg {
    fn from(v: &str) -> Self {
        OscArg::Str(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscMessage {
    pub address: String,
    pub args: Vec<OscArg>,
}

impl OscMessage {
    pub fn new(address: impl Into<String>, args: Vec<OscArg>) -> Self {
        Self { address: address.into(), args }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeErrorKind {
    BadMagic,
    Truncated,
    UnknownTypeTag(char),
    MissingTypeTags,
    BadString,
    BadElementSize(i32),
}

impl fmt::Display for DecodeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeErrorKind::BadMagic => write!(f, "missing #bundle tag"),
            DecodeErrorKind::Truncated => write!(f, "truncated element"),
            DecodeErrorKind::UnknownTypeTag(c) => write!(f, "unknown type tag '{c}'"),
            DecodeErrorKind::MissingTypeTags => write!(f, "type tag string missing"),
            DecodeErrorKind::BadString => write!(f, "unterminated or non-UTF-8 string"),
            DecodeErrorKind::BadElementSize(n) => write!(f, "invalid element size {n}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("OSC decode error at byte {offset}: {kind}")]
pub struct DecodeError {
    pub offset: usize,
    pub kind: DecodeErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("OSC address must start with '/' and contain no NUL: {0:?}")]
    BadAddress(String),
    #[error("OSC string argument contains NUL")]
    NulInString,
}

fn padded_len(n: usize) -> usize {
    (n + 4) & !3
}

fn write_padded_str(out: &mut Vec<u8>, s: &[u8]) {
    out.extend_from_slice(s);
    let pad = padded_len(s.len()) - s.len();
    out.extend(std::iter::repeat_n(0u8, pad));
}

pub fn encode_osc_message(address: &str, args: &[OscArg]) -> Result<Vec<u8>, EncodeError> {
    if !address.starts_with('/') || address.contains('\0') {
        return Err(EncodeError::BadAddress(address.to_string()));
    }
    let mut out = Vec::with_capacity(64);
    write_padded_str(&mut out, address.as_bytes());
    let mut tags = Vec::with_capacity(args.len() + 1);
    tags.push(b',');
    tags.extend(args.iter().map(OscArg::tag));
    write_padded_str(&mut out, &tags);
    for arg in args {
        match arg {
            OscArg::Int(v) => out.extend_from_slice(&v.to_be_bytes()),
            OscArg::Float(v) => out.extend_from_slice(&v.to_bits().to_be_bytes()),
            OscArg::Str(s) => {
                if s.contains('\0') {
                    return Err(EncodeError::NulInString);
                }
                write_padded_str(&mut out, s.as_bytes());
            }
        }
    }
    Ok(out)
}

pub fn encode_osc_bundle(messages: &[OscMessage]) -> Result<Vec<u8>, EncodeError> {
    let mut out = Vec::with_capacity(16 + messages.len() * 48);
    out.extend_from_slice(BUNDLE_TAG);
    out.extend_from_slice(&TIMETAG_IMMEDIATE.to_be_bytes());
    for m in messages {
        let bytes = encode_osc_message(&m.address, &m.args)?;
        out.extend_from_slice(&(bytes.len() as i32).to_be_bytes());
        out.extend_from_slice(&bytes);
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    /// offset of `buf[0]` within the outermost packet, for error reports
    base: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, kind: DecodeErrorKind) -> DecodeError {
        DecodeError { offset: self.base + self.pos, kind }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(DecodeErrorKind::Truncated));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self) -> Result<&'a str, DecodeError> {
        let start = self.pos;
        let rest = &self.buf[start..];
        let nul = rest.iter().position(|&b| b == 0).ok_or_else(|| self.err(DecodeErrorKind::BadString))?;
        let s = std::str::from_utf8(&rest[..nul]).map_err(|_| self.err(DecodeErrorKind::BadString))?;
        let total = padded_len(nul);
        if rest.len() < total {
            return Err(self.err(DecodeErrorKind::Truncated));
        }
        self.pos += total;
        Ok(s)
    }

    fn done(&self) -> bool {
        self.pos >= self.buf.len()
    }
}

fn decode_message_at(buf: &[u8], base: usize) -> Result<OscMessage, DecodeError> {
    let mut r = Reader { buf, pos: 0, base };
    let address = r.string()?.to_string();
    if r.done() {
        return Err(r.err(DecodeErrorKind::MissingTypeTags));
    }
    let tag_pos = r.pos;
    let tags = r.string()?;
    let Some(tags) = tags.strip_prefix(',') else {
        return Err(DecodeError { offset: base + tag_pos, kind: DecodeErrorKind::MissingTypeTags });
    };
    let mut args = Vec::with_capacity(tags.len());
    for (i, tag) in tags.chars().enumerate() {
        let arg = match tag {
            'i' => OscArg::Int(r.u32()? as i32),
            'f' => OscArg::Float(f32::from_bits(r.u32()?)),
            's' => OscArg::Str(r.string()?.to_string()),
            other => {
                return Err(DecodeError {
                    offset: base + tag_pos + 1 + i,
                    kind: DecodeErrorKind::UnknownTypeTag(other),
                })
            }
        };
        args.push(arg);
    }
    Ok(OscMessage { address, args })
}

pub fn decode_osc_message(buf: &[u8]) -> Result<OscMessage, DecodeError> {
    decode_message_at(buf, 0)
}

fn decode_bundle_at(buf: &[u8], base: usize, out: &mut Vec<OscMessage>) -> Result<(), DecodeError> {
    let mut r = Reader { buf, pos: 0, base };
    if buf.len() < 16 || &buf[..8] != BUNDLE_TAG {
        return Err(r.err(DecodeErrorKind::BadMagic));
    }
    r.pos = 16;
    while !r.done() {
        let size_at = r.pos;
        let size = r.u32()? as i32;
        if size <= 0 || size % 4 != 0 {
            return Err(DecodeError { offset: base + size_at, kind: DecodeErrorKind::BadElementSize(size) });
        }
        let elem_at = r.pos;
        let elem = r.take(size as usize)?;
        if elem.starts_with(b"#bundle") {
            decode_bundle_at(elem, base + elem_at, out)?;
        } else {
            out.push(decode_message_at(elem, base + elem_at)?);
        }
    }
    Ok(())
}

/// Flattens a (possibly nested) bundle into its messages, in order.
pub fn decode_osc_bundle(buf: &[u8]) -> Result<Vec<OscMessage>, DecodeError> {
    let mut out = Vec::new();
    decode_bundle_at(buf, 0, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_is_padded_to_twelve() {
        let bytes = encode_osc_message("/tuio/2Dobj", &["alive".into()]).unwrap();
        assert_eq!(&bytes[..12], b"/tuio/2Dobj\0");
        // ",s" + NUL + pad
        assert_eq!(&bytes[12..16], b",s\0\0");
        assert_eq!(&bytes[16..24], b"alive\0\0\0");
        assert_eq!(bytes.len(), 24);
    }

    #[test]
    fn int_is_big_endian() {
        let bytes = encode_osc_message("/a", &[OscArg::Int(7)]).unwrap();
        assert_eq!(&bytes[8..], &[0, 0, 0, 7]);
    }

    #[test]
    fn float_is_big_endian_ieee() {
        let bytes = encode_osc_message("/a", &[OscArg::Float(1.0)]).unwrap();
        assert_eq!(&bytes[8..], &[0x3f, 0x80, 0, 0]);
    }

    #[test]
    fn bad_address() {
        assert!(encode_osc_message("tuio", &[]).is_err());
        assert!(encode_osc_message("/a\0b", &[]).is_err());
    }

    #[test]
    fn three_message_round_trip() {
        let msgs = vec![
            OscMessage::new("/tuio/2Dcur", vec!["alive".into(), 1.into(), 2.into()]),
            OscMessage::new("/tuio/2Dcur", vec!["set".into(), 1.into(), 0.25f32.into()]),
            OscMessage::new("/tuio/2Dcur", vec!["fseq".into(), 3.into()]),
        ];
        let bytes = encode_osc_bundle(&msgs).unwrap();
        assert_eq!(bytes.len() % 4, 0);
        assert_eq!(decode_osc_bundle(&bytes).unwrap(), msgs);
    }

    #[test]
    fn empty_bundle() {
        let bytes = encode_osc_bundle(&[]).unwrap();
        assert_eq!(bytes.len(), 16);
        assert!(decode_osc_bundle(&bytes).unwrap().is_empty());
    }

    #[test]
    fn errors_carry_offsets() {
        let msgs = vec![OscMessage::new("/x", vec![1.into()])];
        let good = encode_osc_bundle(&msgs).unwrap();

        let mut bad = good.clone();
        bad[0] = b'!';
        assert_eq!(decode_osc_bundle(&bad).unwrap_err().kind, DecodeErrorKind::BadMagic);

        let truncated = &good[..good.len() - 2];
        let e = decode_osc_bundle(truncated).unwrap_err();
        assert_eq!(e.kind, DecodeErrorKind::Truncated);
        assert_eq!(e.offset, 20);

        let mut tagged = good.clone();
        // element starts at 20: "/x\0\0" then ",i\0\0"
        tagged[25] = b'q';
        let e = decode_osc_bundle(&tagged).unwrap_err();
        assert_eq!(e.kind, DecodeErrorKind::UnknownTypeTag('q'));
        assert_eq!(e.offset, 25);
    }

    #[test]
    fn nested_bundles_flatten() {
        let inner = encode_osc_bundle(&[OscMessage::new("/in", vec![])]).unwrap();
        let mut outer = BUNDLE_TAG.to_vec();
        outer.extend_from_slice(&1u64.to_be_bytes());
        outer.extend_from_slice(&(inner.len() as i32).to_be_bytes());
        outer.extend_from_slice(&inner);
        let msgs = decode_osc_bundle(&outer).unwrap();
        assert_eq!(msgs, vec![OscMessage::new("/in", vec![])]);
    }
}
