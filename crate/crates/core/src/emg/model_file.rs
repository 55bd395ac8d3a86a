//! On-disk classifier format: one JSON header line, then the parameters as
//! little-endian `f64` in the order feature_mean, feature_std, w1, b1, w2, b2
//! (weights row-major).

use serde::{Deserialize, Serialize};

use super::{EmgError, MlpModel, CHANNELS};

pub const FORMAT: &str = "swarmdeck-emg-mlp";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub layers: [usize; 3],
    pub hidden_activation: String,
    pub output: String,
    pub param_count: usize,
}

fn header_for(model: &MlpModel) -> Header {
    Header {
        format: FORMAT.into(),
        version: VERSION,
        layers: [CHANNELS, model.hidden, 5],
        hidden_activation: "relu".into(),
        output: "softmax".into(),
        param_count: 2 * CHANNELS + model.param_count(),
    }
}

pub fn to_bytes(model: &MlpModel) -> Vec<u8> {
    let mut out = serde_json::to_vec(&header_for(model)).expect("header serializes");
    out.push(b'\n');
    let blocks = [&model.feature_mean, &model.feature_std, &model.w1, &model.b1, &model.w2, &model.b2];
    for v in blocks.iter().flat_map(|b| b.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<MlpModel, EmgError> {
    let nl = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| EmgError::ModelFile("missing header line".into()))?;
    let header: Header =
        serde_json::from_slice(&bytes[..nl]).map_err(|e| EmgError::ModelFile(format!("header: {e}")))?;
    if header.format != FORMAT {
        return Err(EmgError::ModelFile(format!("unknown format '{}'", header.format)));
    }
    if header.version != VERSION {
        return Err(EmgError::ModelFile(format!("unsupported version {}", header.version)));
    }
    let [inputs, hidden, outputs] = header.layers;
    if inputs != CHANNELS || outputs != 5 || hidden == 0 {
        return Err(EmgError::ModelFile(format!("unsupported layer sizes {:?}", header.layers)));
    }
    if header.hidden_activation != "relu" || header.output != "softmax" {
        return Err(EmgError::ModelFile("only relu/softmax models are supported".into()));
    }
    let body = &bytes[nl + 1..];
    let expected = 2 * CHANNELS + hidden * CHANNELS + hidden + 5 * hidden + 5;
    if header.param_count != expected || body.len() != expected * 8 {
        return Err(EmgError::ModelFile(format!(
            "expected {expected} parameters ({} bytes), header says {} and body has {} bytes",
            expected * 8,
            header.param_count,
            body.len()
        )));
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    let mut take = |n: usize| values.by_ref().take(n).collect::<Vec<f64>>();
    let model = MlpModel {
        hidden,
        feature_mean: take(CHANNELS),
        feature_std: take(CHANNELS),
        w1: take(hidden * CHANNELS),
        b1: take(hidden),
        w2: take(5 * hidden),
        b2: take(5),
    };
    model.validate()?;
    Ok(model)
}

pub fn save(model: &MlpModel, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, to_bytes(model))
}

pub fn load(path: &std::path::Path) -> Result<MlpModel, EmgError> {
    let bytes = std::fs::read(path).map_err(|e| EmgError::ModelFile(format!("{}: {e}", path.display())))?;
    from_bytes(&bytes)
}
