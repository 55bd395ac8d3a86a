//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarmdeck_client::{bench, BenchConfig};
use swarmdeck_core::emg::{
    classify_window, extract_features, gradient_check, synthesize_emg, train_and_evaluate, Debouncer, EmgSignal,
    Gesture, MlpModel, TrainConfig, HOP_SECONDS, SAMPLE_RATE, WINDOW_SAMPLES,
};
use swarmdeck_core::gateway::{presets, run_scenario};
use swarmdeck_core::robot::{KinematicParams, Kinematics, WheelSpeeds};
use swarmdeck_core::ssvep::{cca_rho, classify_ssvep, reference_signals, synthesize_eeg, EegParams, StimulusTable};
use swarmdeck_core::tuio::{decode_tuio_frame, encode_tuio_frame};
use swarmdeck_core::world::Twist;
use swarmdeck_server::{start, ServerConfig};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn criterion(id: u32, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let started = Instant::now();
    let mut result = f();
    let took = started.elapsed();
    if let (Ok(detail), Some(limit)) = (&result, limit) {
        if took > limit {
            result = Err(format!("{detail}; took {:.2} s, limit {:.0} s", took.as_secs_f64(), limit.as_secs_f64()));
        }
    }
    let ok = result.is_ok();
    let (tag, detail) = match result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} {id:>2} {title} [{:.2} s] {detail}", took.as_secs_f64());
    ok
}

fn tuio() -> Check {
    for (name, frame) in common::tuio::golden_frames() {
        let golden = common::tuio::fixture(name);
        ensure!(encode_tuio_frame(&frame).map_err(|e| e.to_string())? == golden, "{name}: encoder bytes differ");
        ensure!(decode_tuio_frame(&golden).map_err(|e| e.to_string())? == frame, "{name}: decoded frame differs");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [0usize; 3];
    for i in 0..1000 {
        let frame = common::tuio::random_frame(&mut rng);
        counts[0] += frame.cursors.len();
        counts[1] += frame.objects.len();
        counts[2] += frame.blobs.len();
        let bytes = encode_tuio_frame(&frame).map_err(|e| e.to_string())?;
        let back = decode_tuio_frame(&bytes).map_err(|e| e.to_string())?;
        ensure!(back == frame.quantized(), "frame {i} differs after round trip");
    }
    Ok(format!("3 golden fixtures, 1000 frames ({} cursors, {} objects, {} blobs)", counts[0], counts[1], counts[2]))
}

fn cca() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut sym, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..100 {
        let (x, y) = common::cca_instance(&mut rng, 200);
        let rho = cca_rho(&x, &y).map_err(|e| e.to_string())?;
        let grid = common::cca_grid(&x, &y, 0.05);
        worst = worst.max((rho - grid).abs());
        ensure!((rho - grid).abs() <= 1e-4, "instance {i}: {rho} vs grid {grid}");
        sym = sym.max((rho - cca_rho(&y, &x).unwrap()).abs());
        let mut xs = x.clone();
        for r in 0..xs.nrows() {
            let k = rng.random_range(0.01..100.0);
            xs.row_mut(r).iter_mut().for_each(|v| *v *= k);
        }
        scale = scale.max((rho - cca_rho(&xs, &(&y * 7.5)).unwrap()).abs());
    }
    ensure!(sym <= 1e-9 && scale <= 1e-9, "symmetry {sym:e}, scale {scale:e}");
    Ok(format!("max |rho - grid| {worst:.1e}, symmetry {sym:.1e}, scale {scale:.1e}"))
}

fn ssvep() -> Check {
    let table = StimulusTable::default();
    let params = EegParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let mut recovered = 0;
    for region in 1..=table.len() {
        let w = synthesize_eeg(region, &table, 10.0, &params, &mut rng).unwrap();
        let d = classify_ssvep(&w, &table, params.harmonics).unwrap();
        recovered += usize::from(d.region == region);
        let rhos: Vec<f64> = table
            .frequencies()
            .iter()
            .map(|&f| cca_rho(&w.samples, &reference_signals(f, w.fs, w.len(), params.harmonics).unwrap()).unwrap())
            .collect();
        let best = rhos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ensure!(rhos[d.region - 1] == best, "region {region}: decision is not the largest correlation");
    }
    ensure!(recovered == 40, "snr 10: {recovered}/40");
    let low = common::ssvep_correct(0.5, 200, 500);
    ensure!(low >= 190, "snr 0.5: {low}/200");
    let curve: Vec<usize> = [0.1, 0.3, 1.0, 3.0].iter().map(|&s| common::ssvep_correct(s, 200, 77)).collect();
    ensure!(curve.windows(2).all(|w| w[0] <= w[1]), "not monotone: {curve:?}");
    Ok(format!("snr 10: 40/40, snr 0.5: {low}/200, snr 0.1/0.3/1/3: {curve:?} of 200, argmax of rho"))
}

fn kinematics() -> Check {
    let p = KinematicParams::default();
    let k = Kinematics::new(p).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let t = Twist::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-5.0..5.0));
        let b = k.forward(k.inverse(t));
        worst = worst.max((b.vx - t.vx).abs()).max((b.vy - t.vy).abs()).max((b.omega - t.omega).abs());
    }
    ensure!(worst <= 1e-12, "forward(inverse(t)) error {worst:e}");
    let omega = 2.0;
    let spin = k.inverse(Twist::new(0.0, 0.0, omega));
    ensure!(spin.0 == [p.chassis_radius * omega / p.wheel_radius; 3], "pure rotation {spin:?}");
    let slide = k.inverse(Twist::new(1.0, 0.0, 0.0));
    ensure!(slide.0 == p.wheel_angles.map(|a| -a.sin() / p.wheel_radius), "pure translation {slide:?}");
    let r = p.chassis_radius / p.wheel_radius;
    let back = k.forward(WheelSpeeds([r; 3]));
    ensure!(back.vx.abs() < 1e-15 && back.vy.abs() < 1e-15 && (back.omega - 1.0).abs() < 1e-15, "{back:?}");
    Ok(format!("10^4 twists, max error {worst:.1e}; analytic rotation and translation exact"))
}

fn emg() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let report = train_and_evaluate(100, 100, &TrainConfig::default(), &mut rng).map_err(|e| e.to_string())?;
    let g = report.gradient_check.layers;
    ensure!(g.iter().all(|&e| e <= 1e-4), "trained gradient check {g:?}");
    let fresh = MlpModel::init(16, [0.0; 8], [1.0; 8], &mut rng);
    let batch = swarmdeck_core::emg::generate_dataset(4, &mut rng);
    let g0 = gradient_check(&fresh, &batch).max();
    ensure!(g0 <= 1e-4, "fresh gradient check {g0:e}");
    ensure!(report.held_out_accuracy >= 0.9, "held-out accuracy {:.3}", report.held_out_accuracy);

    let mut d = Debouncer::default();
    let mut emitted = Vec::new();
    for (hop, label) in [Gesture::Up; 8].into_iter().chain([Gesture::Left; 8]).enumerate() {
        emitted.extend(d.push(label).map(|e| (hop, e)));
    }
    ensure!(emitted == [(4, Gesture::Up), (12, Gesture::Left)], "debounce emissions {emitted:?}");
    let label_latency = (12 - 8 + 1) as f64 * HOP_SECONDS;
    ensure!((label_latency - 0.5).abs() < 1e-12, "label latency {label_latency}");

    let a = synthesize_emg(Gesture::Down, 2000, &mut rng).unwrap();
    let b = synthesize_emg(Gesture::Right, 2000, &mut rng).unwrap();
    let joined =
        EmgSignal { channels: a.channels.iter().zip(&b.channels).map(|(x, y)| [x.as_slice(), y].concat()).collect() };
    let mut d = Debouncer::default();
    let mut switch = None;
    for (i, w) in joined.windows().enumerate() {
        let (label, _) = classify_window(&report.model, &extract_features(&w));
        if d.push(label) == Some(Gesture::Right) {
            switch = Some((i * 100 + WINDOW_SAMPLES) as f64 / SAMPLE_RATE - 2.0);
        }
    }
    let lag = switch.ok_or("signal transition never emitted")?;
    ensure!((0.5 - 1e-9..=0.6 + 1e-9).contains(&lag), "signal transition latency {lag:.2} s");
    Ok(format!(
        "gradient check max {:.1e} (trained) / {g0:.1e} (fresh), held-out {:.1}% of 500, \
         emission on 5th hop = {label_latency:.1} s, signal switch {lag:.1} s",
        report.gradient_check.max(),
        report.held_out_accuracy * 100.0
    ))
}

fn determinism() -> Check {
    let mut lines = Vec::new();
    for name in presets::NAMES {
        let cfg = presets::by_name(name).unwrap();
        let a = run_scenario(&cfg, None).map_err(|e| e.to_string())?;
        let b = run_scenario(&cfg, None).map_err(|e| e.to_string())?;
        ensure!(a.report.log_sha256 == b.report.log_sha256, "{name}: hashes differ");
        lines.push(format!("{name} {}", &a.report.log_sha256[..12]));
    }
    Ok(lines.join(", "))
}

fn broker() -> Check {
    common::wildcard_suite(10_000)?;
    common::ordering_suite(10_000)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let report = rt.block_on(async {
        let any = "127.0.0.1:0".parse().unwrap();
        let server = start(ServerConfig { broker_addr: any, http_addr: any, scenario: None, record: None })
            .await
            .map_err(|e| e.to_string())?;
        let r = bench(server.broker_addr, BenchConfig::default()).await.map_err(|e| e.to_string());
        server.shutdown();
        r
    })?;
    ensure!(report.lossless(), "lost or reordered: received {:?} of {}", report.received, report.published);
    ensure!(report.publish_rate >= 950.0, "publish rate {:.0}/s", report.publish_rate);
    Ok(format!(
        "wildcard and ordering 10^4 cases each; {} msgs at {:.0}/s to 10 subscribers lossless in order, p99 {:.2} ms",
        report.published, report.publish_rate, report.latency_p99_ms
    ))
}

fn main() -> ExitCode {
    let s = Some;
    let secs = Duration::from_secs;
    let results = [
        criterion(1, "TUIO/OSC round trip and golden bytes", s(secs(5)), tuio),
        criterion(2, "CCA against angle-grid brute force", s(secs(30)), cca),
        criterion(3, "SSVEP closed loop", s(secs(120)), ssvep),
        criterion(4, "omni-wheel kinematics", s(secs(1)), kinematics),
        criterion(5, "EMG classifier and debounce", s(secs(60)), emg),
        criterion(6, "leader-first surround of region 26", None, || {
            let cfg = presets::surround();
            let out = run_scenario(&cfg, None).map_err(|e| e.to_string())?;
            common::scenario::check_surround(&cfg, &out)
        }),
        criterion(7, "ten robots under the gesture script", None, || {
            let cfg = presets::common_velocity();
            let out = run_scenario(&cfg, None).map_err(|e| e.to_string())?;
            common::scenario::check_common_velocity(&cfg, &out)
        }),
        criterion(8, "formation along a gaze semicircle", None, || {
            let out = run_scenario(&presets::formation(), None).map_err(|e| e.to_string())?;
            common::scenario::check_formation(&out)
        }),
        criterion(9, "identical log hashes for repeated runs", None, determinism),
        criterion(10, "broker properties and sustained load", None, broker),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
