//! Input-hidden-output perceptron (8 → 16 → 5 by default), ReLU hidden layer,
//! softmax output, trained by minibatch SGD on mean cross-entropy.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EmgError, Features, Gesture, CHANNELS};

pub type Dataset = Vec<(Features, Gesture)>;

const CLASSES: usize = 5;
const MIN_PER_CLASS: usize = 20;
const FD_STEP: f64 = 1e-5;
const FD_TOLERANCE: f64 = 1e-4;
const FD_FLOOR: f64 = 1e-6;
const FD_BATCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { hidden: 16, epochs: 200, learning_rate: 0.1, batch_size: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub hidden: usize,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    /// hidden × 8, row-major
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// 5 × hidden, row-major
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

struct Activations {
    x: [f64; CHANNELS],
    pre: Vec<f64>,
    h: Vec<f64>,
    p: [f64; CLASSES],
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Largest relative error between backprop and central differences, per
/// parameter block `[w1, b1, w2, b2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub layers: [f64; 4],
}

impl GradientReport {
    pub fn max(&self) -> f64 {
        self.layers.iter().copied().fold(0.0, f64::max)
    }
}

fn softmax(z: &[f64; CLASSES]) -> [f64; CLASSES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = z.map(|v| (v - m).exp());
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

impl MlpModel {
    /// He-initialised weights, zero biases.
    pub fn init<R: Rng + ?Sized>(hidden: usize, mean: Features, std: Features, rng: &mut R) -> Self {
        let n1 = Normal::new(0.0, (2.0 / CHANNELS as f64).sqrt()).expect("positive sigma");
        let n2 = Normal::new(0.0, (2.0 / hidden as f64).sqrt()).expect("positive sigma");
        let w1 = (0..hidden * CHANNELS).map(|_| n1.sample(rng)).collect();
        let w2 = (0..CLASSES * hidden).map(|_| n2.sample(rng)).collect();
        Self {
            hidden,
            feature_mean: mean.to_vec(),
            feature_std: std.to_vec(),
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; CLASSES],
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn validate(&self) -> Result<(), EmgError> {
        let h = self.hidden;
        let shapes_ok = h > 0
            && self.feature_mean.len() == CHANNELS
            && self.feature_std.len() == CHANNELS
            && self.w1.len() == h * CHANNELS
            && self.b1.len() == h
            && self.w2.len() == CLASSES * h
            && self.b2.len() == CLASSES;
        if !shapes_ok {
            return Err(EmgError::ModelFile("parameter shapes do not match 8 → hidden → 5".into()));
        }
        let all = [&self.feature_mean, &self.feature_std, &self.w1, &self.b1, &self.w2, &self.b2];
        if all.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(EmgError::ModelFile("non-finite parameter".into()));
        }
        if self.feature_std.iter().any(|s| *s <= 0.0) {
            return Err(EmgError::ModelFile("feature std must be positive".into()));
        }
        Ok(())
    }

    fn standardize(&self, f: &Features) -> [f64; CHANNELS] {
        let mut x = [0.0; CHANNELS];
        for i in 0..CHANNELS {
            x[i] = (f[i] - self.feature_mean[i]) / self.feature_std[i];
        }
        x
    }

    fn forward(&self, f: &Features) -> Activations {
        let x = self.standardize(f);
        let h = self.hidden;
        let mut pre = vec![0.0; h];
        for (j, p) in pre.iter_mut().enumerate() {
            *p = self.b1[j] + (0..CHANNELS).map(|i| self.w1[j * CHANNELS + i] * x[i]).sum::<f64>();
        }
        let hid: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let mut z = [0.0; CLASSES];
        for (k, zk) in z.iter_mut().enumerate() {
            *zk = self.b2[k] + (0..h).map(|j| self.w2[k * h + j] * hid[j]).sum::<f64>();
        }
        Activations { x, pre, h: hid, p: softmax(&z) }
    }

    /// Class probabilities.
    pub fn predict(&self, f: &Features) -> [f64; CLASSES] {
        self.forward(f).p
    }

    pub fn loss(&self, batch: &[(Features, Gesture)]) -> f64 {
        let total: f64 = batch.iter().map(|(f, g)| -self.forward(f).p[g.index()].max(f64::MIN_POSITIVE).ln()).sum();
        total / batch.len() as f64
    }

    pub fn accuracy(&self, data: &[(Features, Gesture)]) -> f64 {
        let hits = data.iter().filter(|(f, g)| classify_window(self, f).0 == *g).count();
        hits as f64 / data.len() as f64
    }

    pub(crate) fn gradients(&self, batch: &[(Features, Gesture)]) -> Gradients {
        let h = self.hidden;
        let mut g = Gradients {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; h],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; CLASSES],
        };
        let scale = 1.0 / batch.len() as f64;
        for (f, label) in batch {
            let a = self.forward(f);
            let mut dz = a.p;
            dz[label.index()] -= 1.0;
            dz.iter_mut().for_each(|v| *v *= scale);
            let mut dh = vec![0.0; h];
            for k in 0..CLASSES {
                g.b2[k] += dz[k];
                for j in 0..h {
                    g.w2[k * h + j] += dz[k] * a.h[j];
                    dh[j] += self.w2[k * h + j] * dz[k];
                }
            }
            for j in 0..h {
                if a.pre[j] <= 0.0 {
                    continue;
                }
                g.b1[j] += dh[j];
                for i in 0..CHANNELS {
                    g.w1[j * CHANNELS + i] += dh[j] * a.x[i];
                }
            }
        }
        g
    }

    fn blocks_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn apply(&mut self, g: &Gradients, lr: f64) {
        let grads = [&g.w1, &g.b1, &g.w2, &g.b2];
        for (block, grad) in self.blocks_mut().into_iter().zip(grads) {
            for (p, d) in block.iter_mut().zip(grad) {
                *p -= lr * d;
            }
        }
    }
}

/// Compares backprop against central differences with step 1e-5 on every
/// parameter.
pub fn gradient_check(model: &MlpModel, batch: &[(Features, Gesture)]) -> GradientReport {
    let analytic = model.gradients(batch);
    let analytic = [&analytic.w1, &analytic.b1, &analytic.w2, &analytic.b2];
    let mut probe = model.clone();
    let mut layers = [0.0; 4];
    for (b, worst) in layers.iter_mut().enumerate() {
        for i in 0..analytic[b].len() {
            let orig = probe.blocks_mut()[b][i];
            probe.blocks_mut()[b][i] = orig + FD_STEP;
            let up = probe.loss(batch);
            probe.blocks_mut()[b][i] = orig - FD_STEP;
            let down = probe.loss(batch);
            probe.blocks_mut()[b][i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic[b][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FD_FLOOR);
            *worst = f64::max(*worst, rel);
        }
    }
    GradientReport { layers }
}

fn standardization(data: &[(Features, Gesture)]) -> (Features, Features) {
    let n = data.len() as f64;
    let mut mean = [0.0; CHANNELS];
    for (f, _) in data {
        for i in 0..CHANNELS {
            mean[i] += f[i] / n;
        }
    }
    let mut std = [0.0; CHANNELS];
    for (f, _) in data {
        for i in 0..CHANNELS {
            std[i] += (f[i] - mean[i]).powi(2) / n;
        }
    }
    for s in &mut std {
        *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
    }
    (mean, std)
}

/// Fits a fresh model. Runs the finite-difference self-check on a random batch
/// before the first update and fails if it exceeds 1e-4.
pub fn train_classifier<R: Rng + ?Sized>(
    data: &[(Features, Gesture)],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<MlpModel, EmgError> {
    if cfg.hidden == 0 || cfg.batch_size == 0 || !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(EmgError::DegenerateDataset("hidden, batch_size and learning_rate must be positive".into()));
    }
    let mut counts = [0usize; CLASSES];
    for (f, g) in data {
        if f.iter().any(|v| !v.is_finite()) {
            return Err(EmgError::DegenerateDataset("non-finite feature".into()));
        }
        counts[g.index()] += 1;
    }
    for g in Gesture::ALL {
        if counts[g.index()] < MIN_PER_CLASS {
            return Err(EmgError::DegenerateDataset(format!(
                "class '{g}' has {} examples, need at least {MIN_PER_CLASS}",
                counts[g.index()]
            )));
        }
    }

    let (mean, std) = standardization(data);
    let mut model = MlpModel::init(cfg.hidden, mean, std, rng);

    let check: Vec<_> = data.choose_multiple(rng, FD_BATCH).copied().collect();
    let report = gradient_check(&model, &check);
    if report.max() > FD_TOLERANCE {
        return Err(EmgError::GradientCheck(report.max()));
    }

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i]));
            let g = model.gradients(&batch);
            model.apply(&g, cfg.learning_rate);
        }
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub model: MlpModel,
    pub train_accuracy: f64,
    pub held_out_accuracy: f64,
    /// Gradient check of the trained model on a held-out batch.
    pub gradient_check: GradientReport,
}

/// Trains on `per_class` synthetic windows per gesture and scores a separate
/// `held_out_per_class` set drawn afterwards from the same stream.
pub fn train_and_evaluate<R: Rng + ?Sized>(
    per_class: usize,
    held_out_per_class: usize,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<TrainingReport, EmgError> {
    let train = crate::emg::generate_dataset(per_class, rng);
    let model = train_classifier(&train, cfg, rng)?;
    let test = crate::emg::generate_dataset(held_out_per_class.max(1), rng);
    let check: Vec<_> = test.choose_multiple(rng, FD_BATCH).copied().collect();
    Ok(TrainingReport {
        train_accuracy: model.accuracy(&train),
        held_out_accuracy: model.accuracy(&test),
        gradient_check: gradient_check(&model, &check),
        model,
    })
}

/// Argmax of the softmax scores; ties go to the lowest class index.
pub fn classify_window(model: &MlpModel, features: &Features) -> (Gesture, [f64; CLASSES]) {
    let p = model.predict(features);
    let mut best = 0;
    for k in 1..CLASSES {
        if p[k] > p[best] {
            best = k;
        }
    }
    (Gesture::from_index(best).expect("five classes"), p)
}
