use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swarmdeck_core::emg::{
    classify_window, extract_features, gradient_check, synthesize_emg, train_and_evaluate, Debouncer, EmgSignal,
    Gesture, MlpModel, TrainConfig, HOP_SECONDS, SAMPLE_RATE, WINDOW_SAMPLES,
};

fn trained(seed: u64) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    train_and_evaluate(100, 100, &TrainConfig::default(), &mut rng).unwrap().model
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let report = train_and_evaluate(100, 100, &TrainConfig::default(), &mut rng).unwrap();
    assert!(report.gradient_check.layers.iter().all(|&e| e <= 1e-4), "{:?}", report.gradient_check);

    let data = swarmdeck_core::emg::generate_dataset(4, &mut rng);
    let fresh = MlpModel::init(16, [0.0; 8], [1.0; 8], &mut rng);
    let r = gradient_check(&fresh, &data);
    assert!(r.max() <= 1e-4, "{r:?}");
}

#[test]
fn held_out_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let report = train_and_evaluate(100, 100, &TrainConfig::default(), &mut rng).unwrap();
    assert!(report.held_out_accuracy >= 0.9, "{}", report.held_out_accuracy);
    assert!(report.train_accuracy >= 0.9);
}

#[test]
fn debounce_waits_five_hops() {
    let mut d = Debouncer::default();
    let mut emitted = Vec::new();
    let labels = [Gesture::Up; 8].into_iter().chain([Gesture::Left; 8]);
    for (hop, g) in labels.enumerate() {
        if let Some(e) = d.push(g) {
            emitted.push((hop, e));
        }
    }
    // first Left label arrives on hop 8
    assert_eq!(emitted, vec![(4, Gesture::Up), (12, Gesture::Left)]);
    assert!(((12 - 8 + 1) as f64 * HOP_SECONDS - 0.5).abs() < 1e-12);
}

#[test]
fn flicker_shorter_than_the_run_is_suppressed() {
    let mut d = Debouncer::default();
    for _ in 0..5 {
        d.push(Gesture::Stop);
    }
    let mut out = Vec::new();
    for g in [Gesture::Up, Gesture::Up, Gesture::Stop, Gesture::Up, Gesture::Up, Gesture::Up, Gesture::Up] {
        out.extend(d.push(g));
    }
    assert!(out.is_empty(), "{out:?}");
    assert_eq!(d.push(Gesture::Up), Some(Gesture::Up));
}

#[test]
fn signal_transition_latency() {
    let model = trained(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = synthesize_emg(Gesture::Down, 2000, &mut rng).unwrap();
    let b = synthesize_emg(Gesture::Right, 2000, &mut rng).unwrap();
    let joined =
        EmgSignal { channels: a.channels.iter().zip(&b.channels).map(|(x, y)| [x.as_slice(), y].concat()).collect() };
    let mut d = Debouncer::default();
    let mut emitted = Vec::new();
    for (i, w) in joined.windows().enumerate() {
        let end = (i * 100 + WINDOW_SAMPLES) as f64 / SAMPLE_RATE;
        let (label, _) = classify_window(&model, &extract_features(&w));
        if let Some(g) = d.push(label) {
            emitted.push((end, g));
        }
    }
    assert_eq!(emitted.len(), 2, "{emitted:?}");
    assert_eq!(emitted[0].1, Gesture::Down);
    assert_eq!(emitted[1].1, Gesture::Right);
    // the window straddling the switch may go either way
    let latency = emitted[1].0 - 2.0;
    assert!((0.5 - 1e-9..=0.6 + 1e-9).contains(&latency), "{latency}");
}
