use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{extract_features, EmgError, EmgWindow, Features, Gesture, CHANNELS, HOP_SAMPLES, WINDOW_SAMPLES};

/// Expected per-channel RMS for each gesture, rows in [`Gesture::ALL`] order.
/// Each active row is the previous one rotated by two electrodes.
pub const ACTIVATION_TEMPLATE: [[f64; CHANNELS]; 5] = [
    [0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05],
    [1.00, 0.60, 0.15, 0.05, 0.05, 0.05, 0.10, 0.30],
    [0.10, 0.30, 1.00, 0.60, 0.15, 0.05, 0.05, 0.05],
    [0.05, 0.05, 0.10, 0.30, 1.00, 0.60, 0.15, 0.05],
    [0.15, 0.05, 0.05, 0.05, 0.10, 0.30, 1.00, 0.60],
];

/// Standard deviation of the noise shared by all electrodes.
pub const COMMON_MODE_SIGMA: f64 = 0.01;

/// Band-pass kernel with unit energy: zeros at DC and Nyquist.
const KERNEL: [f64; 3] = [std::f64::consts::FRAC_1_SQRT_2, 0.0, -std::f64::consts::FRAC_1_SQRT_2];

/// Multichannel recording, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmgSignal {
    pub channels: Vec<Vec<f64>>,
}

impl EmgSignal {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// 200-sample windows advanced by 100 samples.
    pub fn windows(&self) -> impl Iterator<Item = EmgWindow> + '_ {
        let n = self.len();
        let count = if n >= WINDOW_SAMPLES { (n - WINDOW_SAMPLES) / HOP_SAMPLES + 1 } else { 0 };
        (0..count).map(move |w| {
            let start = w * HOP_SAMPLES;
            EmgWindow::new(self.channels.iter().map(|c| c[start..start + WINDOW_SAMPLES].to_vec()).collect())
                .expect("slices have window shape")
        })
    }
}

/// Band-limited Gaussian activity shaped by the gesture's template row, plus
/// common-mode noise. Per-channel amplitudes are set so the expected RMS equals
/// the template value.
pub fn synthesize_emg<R: Rng + ?Sized>(gesture: Gesture, samples: usize, rng: &mut R) -> Result<EmgSignal, EmgError> {
    if samples < WINDOW_SAMPLES {
        return Err(EmgError::TooShort);
    }
    Ok(synthesize_chunk(gesture, samples, rng))
}

/// Any-length variant used for streaming hops.
pub(crate) fn synthesize_chunk<R: Rng + ?Sized>(gesture: Gesture, samples: usize, rng: &mut R) -> EmgSignal {
    let template = &ACTIVATION_TEMPLATE[gesture.index()];
    let common: Vec<f64> = (0..samples).map(|_| COMMON_MODE_SIGMA * rng.sample::<f64, _>(StandardNormal)).collect();
    let channels = template
        .iter()
        .map(|&rms| {
            let amp = (rms * rms - COMMON_MODE_SIGMA * COMMON_MODE_SIGMA).max(0.0).sqrt();
            let white: Vec<f64> = (0..samples + KERNEL.len() - 1).map(|_| StandardNormal.sample(rng)).collect();
            (0..samples)
                .map(|i| {
                    let band: f64 = KERNEL.iter().enumerate().map(|(k, h)| h * white[i + KERNEL.len() - 1 - k]).sum();
                    amp * band + common[i]
                })
                .collect()
        })
        .collect();
    EmgSignal { channels }
}

/// Labelled feature vectors, `per_class` windows for each gesture.
pub fn generate_dataset<R: Rng + ?Sized>(per_class: usize, rng: &mut R) -> Vec<(Features, Gesture)> {
    let mut out = Vec::with_capacity(per_class * Gesture::ALL.len());
    for g in Gesture::ALL {
        for _ in 0..per_class {
            let sig = synthesize_emg(g, WINDOW_SAMPLES, rng).expect("one window is long enough");
            let w = sig.windows().next().expect("exactly one window");
            out.push((extract_features(&w), g));
        }
    }
    out
}
