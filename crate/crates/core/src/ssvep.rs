//! SSVEP region selection: stimulus table, sinusoidal references, canonical
//! correlation analysis and a synthetic multichannel EEG source.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const REGION_COUNT: usize = 40;
pub const BASE_FREQUENCY: f64 = 8.0;
pub const FREQUENCY_STEP: f64 = 0.2;
pub const DEFAULT_SOFTMAX_BETA: f64 = 40.0;
/// Ridge applied to each standardized covariance block, relative to its mean
/// diagonal.
pub const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsvepError {
    #[error("harmonic {harmonic} of {frequency} Hz is not below Nyquist ({nyquist} Hz)")]
    AboveNyquist { frequency: f64, harmonic: usize, nyquist: f64 },
    #[error("need more samples than p + q = {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample counts differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("covariance is rank deficient after regularization")]
    RankDeficient,
    #[error("region {0} is outside 1..={1}")]
    BadRegion(usize, usize),
    #[error("invalid EEG window: {0}")]
    BadWindow(String),
}

/// Flicker frequency of each selectable region, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusTable {
    frequencies: Vec<f64>,
}

impl Default for StimulusTable {
    fn default() -> Self {
        Self { frequencies: (0..REGION_COUNT).map(|k| BASE_FREQUENCY + FREQUENCY_STEP * k as f64).collect() }
    }
}

impl StimulusTable {
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequency(&self, region: usize) -> Result<f64, SsvepError> {
        if region == 0 || region > self.len() {
            return Err(SsvepError::BadRegion(region, self.len()));
        }
        Ok(self.frequencies[region - 1])
    }
}

/// Rows `sin(2π h f t)`, `cos(2π h f t)` for `h = 1..=harmonics`, `t = i / fs`.
pub fn reference_signals(f: f64, fs: f64, n: usize, harmonics: usize) -> Result<DMatrix<f64>, SsvepError> {
    let nyquist = fs / 2.0;
    if harmonics == 0 {
        return Err(SsvepError::AboveNyquist { frequency: f, harmonic: 0, nyquist });
    }
    if harmonics as f64 * f >= nyquist {
        return Err(SsvepError::AboveNyquist { frequency: f, harmonic: harmonics, nyquist });
    }
    let mut m = DMatrix::zeros(2 * harmonics, n);
    for h in 1..=harmonics {
        let w = 2.0 * PI * h as f64 * f;
        for i in 0..n {
            let (s, c) = (w * i as f64 / fs).sin_cos();
            m[(2 * (h - 1), i)] = s;
            m[(2 * (h - 1) + 1, i)] = c;
        }
    }
    Ok(m)
}

/// One signal block reduced to standardized rows plus its regularized
/// auto-covariance.
struct Block {
    rows: DMatrix<f64>,
    cov: DMatrix<f64>,
}

fn prepare(block: &DMatrix<f64>) -> Result<Block, SsvepError> {
    let (p, n) = block.shape();
    let mut rows = block.clone();
    for r in 0..p {
        let mean = rows.row(r).sum() / n as f64;
        let mut row = rows.row_mut(r);
        row.add_scalar_mut(-mean);
        let sd = (row.norm_squared() / (n - 1) as f64).sqrt();
        if !(sd.is_finite() && sd > 0.0) {
            return Err(SsvepError::RankDeficient);
        }
        row /= sd;
    }
    let mut cov = &rows * rows.transpose() / (n - 1) as f64;
    let ridge = RIDGE_SCALE * cov.trace() / p as f64;
    for i in 0..p {
        cov[(i, i)] += ridge;
    }
    Ok(Block { rows, cov })
}

fn inverse_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>, SsvepError> {
    let eig = SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(SsvepError::RankDeficient);
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// The X side of CCA, prepared once and reused against many references.
pub struct CcaPrepared {
    block: Block,
    inv_sqrt: DMatrix<f64>,
}

impl CcaPrepared {
    pub fn new(x: &DMatrix<f64>) -> Result<Self, SsvepError> {
        let (p, n) = x.shape();
        if n < 2 || p == 0 {
            return Err(SsvepError::TooFewSamples { needed: p + 1, got: n });
        }
        let block = prepare(x)?;
        let inv_sqrt = inverse_sqrt(&block.cov)?;
        Ok(Self { block, inv_sqrt })
    }

    pub fn rho(&self, y: &DMatrix<f64>) -> Result<f64, SsvepError> {
        let (p, n) = self.block.rows.shape();
        let (q, ny) = y.shape();
        if ny != n {
            return Err(SsvepError::LengthMismatch(n, ny));
        }
        if n <= p + q {
            return Err(SsvepError::TooFewSamples { needed: p + q, got: n });
        }
        let yb = prepare(y)?;
        let cxy = &self.block.rows * yb.rows.transpose() / (n - 1) as f64;
        let cyy_inv = yb.cov.clone().cholesky().ok_or(SsvepError::RankDeficient)?.inverse();
        let a = &self.inv_sqrt * &cxy;
        let m = &a * cyy_inv * a.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let top = SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(top.max(0.0).sqrt().clamp(0.0, 1.0))
    }
}

/// Largest canonical correlation between the rows of `x` (p × n) and `y` (q × n).
pub fn cca_rho(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, SsvepError> {
    let (p, n) = x.shape();
    let (q, ny) = y.shape();
    if ny != n {
        return Err(SsvepError::LengthMismatch(n, ny));
    }
    if n <= p + q {
        return Err(SsvepError::TooFewSamples { needed: p + q, got: n });
    }
    CcaPrepared::new(x)?.rho(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EegWindow {
    /// channels × samples
    pub samples: DMatrix<f64>,
    pub fs: f64,
}

impl EegWindow {
    pub fn new(samples: DMatrix<f64>, fs: f64) -> Result<Self, SsvepError> {
        let w = Self { samples, fs };
        w.validate()?;
        Ok(w)
    }

    /// Builds a window from per-channel sample rows.
    pub fn from_rows(rows: &[Vec<f64>], fs: f64) -> Result<Self, SsvepError> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(SsvepError::BadWindow("rows must be non-empty and of equal length".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]), fs)
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<(), SsvepError> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(SsvepError::BadWindow(format!("sampling rate {}", self.fs)));
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(SsvepError::BadWindow("non-finite sample".into()));
        }
        if (self.len() as f64) < self.fs {
            return Err(SsvepError::BadWindow("less than one second of data".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsvepDecision {
    pub region: usize,
    pub probabilities: Vec<f64>,
    pub correlations: Vec<f64>,
}

fn softmax(values: &[f64], beta: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (beta * (v - max)).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// First index of the maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn classify_ssvep_with_beta(
    window: &EegWindow,
    table: &StimulusTable,
    harmonics: usize,
    beta: f64,
) -> Result<SsvepDecision, SsvepError> {
    window.validate()?;
    let prepared = CcaPrepared::new(&window.samples)?;
    let correlations = table
        .frequencies()
        .iter()
        .map(|&f| {
            let refs = reference_signals(f, window.fs, window.len(), harmonics)?;
            prepared.rho(&refs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let probabilities = softmax(&correlations, beta);
    Ok(SsvepDecision { region: argmax(&correlations) + 1, probabilities, correlations })
}

/// Picks the region whose reference set correlates best with the window.
pub fn classify_ssvep(
    window: &EegWindow,
    table: &StimulusTable,
    harmonics: usize,
) -> Result<SsvepDecision, SsvepError> {
    classify_ssvep_with_beta(window, table, harmonics, DEFAULT_SOFTMAX_BETA)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EegParams {
    pub channels: usize,
    pub fs: f64,
    pub duration: f64,
    pub harmonics: usize,
}

impl Default for EegParams {
    fn default() -> Self {
        Self { channels: 8, fs: 250.0, duration: 2.0, harmonics: 2 }
    }
}

impl EegParams {
    pub fn samples(&self) -> usize {
        (self.fs * self.duration).round() as usize
    }
}

/// Simulated subject attending `region`: per channel a fundamental plus a
/// half-amplitude second harmonic at a random phase, in unit Gaussian noise.
/// `snr` is the fundamental amplitude over the noise standard deviation.
pub fn synthesize_eeg<R: Rng + ?Sized>(
    region: usize,
    table: &StimulusTable,
    snr: f64,
    params: &EegParams,
    rng: &mut R,
) -> Result<EegWindow, SsvepError> {
    let f = table.frequency(region)?;
    if !(snr.is_finite() && snr >= 0.0) {
        return Err(SsvepError::BadWindow(format!("snr must be >= 0, got {snr}")));
    }
    let n = params.samples();
    let mut m = DMatrix::zeros(params.channels, n);
    let w = 2.0 * PI * f;
    for ch in 0..params.channels {
        let phase = rng.random_range(0.0..2.0 * PI);
        for i in 0..n {
            let arg = w * i as f64 / params.fs + phase;
            let noise: f64 = StandardNormal.sample(rng);
            m[(ch, i)] = snr * (arg.sin() + 0.5 * (2.0 * arg).sin()) + noise;
        }
    }
    EegWindow::new(m, params.fs)
}
