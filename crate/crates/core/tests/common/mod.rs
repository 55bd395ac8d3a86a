//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod scenario;
pub mod tuio;

use nalgebra::{DMatrix, Matrix2, Vector2};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;
use rand_distr::StandardNormal;
use swarmdeck_core::broker::{decode_frame, encode_frame, Envelope, Frame, Hub, TopicFilter};

/// Two correlated random 2 × n blocks.
pub fn cca_instance(rng: &mut impl Rng, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut g = || -> f64 { rng.sample(StandardNormal) };
    let x = DMatrix::from_fn(2, n, |_, _| g());
    let mix = Matrix2::new(g(), g(), g(), g());
    let noise = g().abs() * 2.0;
    let mut y = DMatrix::zeros(2, n);
    for c in 0..n {
        let v = mix * Vector2::new(x[(0, c)], x[(1, c)]);
        y[(0, c)] = v[0] + noise * g() + 3.0;
        y[(1, c)] = v[1] + noise * g() - 1.0;
    }
    (x, y)
}

fn cov2(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Matrix2<f64> {
    let n = a.ncols();
    let ma = [a.row(0).mean(), a.row(1).mean()];
    let mb = [b.row(0).mean(), b.row(1).mean()];
    let mut c = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let s: f64 = (0..n).map(|k| (a[(i, k)] - ma[i]) * (b[(j, k)] - mb[j])).sum();
            c[(i, j)] = s / (n - 1) as f64;
        }
    }
    c
}

/// Largest correlation between `x·a` and `y·b` over unit directions on a
/// `step_deg` angle grid. Directions a and -a give the same |corr|, so half a
/// turn covers everything.
pub fn cca_grid(x: &DMatrix<f64>, y: &DMatrix<f64>, step_deg: f64) -> f64 {
    let (cxx, cyy, cxy) = (cov2(x, x), cov2(y, y), cov2(x, y));
    let steps = (180.0 / step_deg).round() as usize;
    let dir = |k: usize| {
        let t = (k as f64 * step_deg).to_radians();
        Vector2::new(t.cos(), t.sin())
    };
    let bs: Vec<(Vector2<f64>, f64)> = (0..steps)
        .map(|k| {
            let b = dir(k);
            (b, 1.0 / (b.dot(&(cyy * b))).sqrt())
        })
        .collect();
    let mut best = 0.0f64;
    for k in 0..steps {
        let a = dir(k);
        let u = cxy.transpose() * a;
        let sa = 1.0 / (a.dot(&(cxx * a))).sqrt();
        for (b, sb) in &bs {
            best = best.max((u[0] * b[0] + u[1] * b[1]).abs() * sa * sb);
        }
    }
    best
}

/// Straightforward recursive wildcard matcher over split levels.
pub fn filter_matches(filter: &str, topic: &str) -> bool {
    fn go(f: &[&str], t: &[&str]) -> bool {
        match (f.split_first(), t.split_first()) {
            (None, None) => true,
            (Some((&"#", _)), _) => true,
            (Some(_), None) | (None, Some(_)) => false,
            (Some((fh, fr)), Some((th, tr))) => (*fh == "+" || fh == th) && go(fr, tr),
        }
    }
    let f: Vec<&str> = filter.split('/').collect();
    let t: Vec<&str> = topic.split('/').collect();
    go(&f, &t)
}

fn topic_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "", "robot"]), 1..5)
        .prop_map(|l| l.join("/"))
        .prop_filter("empty topic", |t| !t.is_empty())
}

fn filter_strategy() -> impl Strategy<Value = String> {
    (prop::collection::vec(prop::sample::select(vec!["a", "b", "+", "", "robot"]), 0..5), any::<bool>())
        .prop_filter_map("empty filter", |(mut levels, multi)| {
            if multi {
                levels.push("#");
            }
            Some(levels.join("/")).filter(|f| !f.is_empty())
        })
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

/// Filter matching agrees with the recursive matcher.
pub fn wildcard_suite(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(filter_strategy(), topic_strategy()), |(f, t)| {
            let parsed = TopicFilter::parse(&f).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(parsed.matches(&t), filter_matches(&f, &t), "filter {} topic {}", f, t);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Every subscriber receives exactly the matching publishes, once each, in
/// publish order.
pub fn ordering_suite(cases: u32) -> Result<(), String> {
    let subs = prop::collection::vec(prop::collection::vec(filter_strategy(), 1..4), 1..5);
    let msgs = prop::collection::vec(topic_strategy(), 0..40);
    runner(cases)
        .run(&(subs, msgs), |(subs, msgs)| {
            let hub = Hub::new();
            let clients: Vec<_> = subs
                .iter()
                .map(|filters| {
                    let c = hub.connect_local("sub");
                    for f in filters {
                        c.subscribe(f).unwrap();
                    }
                    c
                })
                .collect();
            let publisher = hub.connect_local("pub");
            for (i, t) in msgs.iter().enumerate() {
                publisher.publish(t, i as u64, (i as u32).to_be_bytes().to_vec()).unwrap();
            }
            for (filters, c) in subs.iter().zip(&clients) {
                let want: Vec<u64> = msgs
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| filters.iter().any(|f| filter_matches(f, t)))
                    .map(|(i, _)| i as u64)
                    .collect();
                let got: Vec<u64> = c.drain().iter().map(|e| e.timestamp_us).collect();
                prop_assert_eq!(got, want);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Publish frames survive encoding and decoding from an arbitrarily split
/// byte stream.
pub fn framing_suite(cases: u32) -> Result<(), String> {
    let env = (topic_strategy(), any::<u64>(), prop::collection::vec(any::<u8>(), 0..64))
        .prop_map(|(t, ts, p)| Envelope::new(t, ts, p));
    let envs = prop::collection::vec(env, 1..8);
    runner(cases)
        .run(&(envs, prop::collection::vec(1usize..32, 1..16)), |(envs, chunks)| {
            let mut stream = Vec::new();
            for e in &envs {
                stream.extend(encode_frame(&Frame::publish(e)));
            }
            let mut buf = Vec::new();
            let mut out = Vec::new();
            let mut pos = 0;
            let mut chunk = chunks.iter().cycle();
            while pos < stream.len() {
                let end = (pos + chunk.next().unwrap()).min(stream.len());
                buf.extend_from_slice(&stream[pos..end]);
                pos = end;
                while let Some((frame, used)) = decode_frame(&buf).map_err(|e| TestCaseError::fail(e.to_string()))? {
                    buf.drain(..used);
                    out.push(swarmdeck_core::broker::decode_publish_body(&frame.body).unwrap());
                }
            }
            prop_assert!(buf.is_empty());
            prop_assert_eq!(out, envs);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// Correct decisions out of `trials` closed-loop epochs at `snr`, each attending
/// a random region.
pub fn ssvep_correct(snr: f64, trials: usize, seed: u64) -> usize {
    use rand::SeedableRng;
    use swarmdeck_core::ssvep::{classify_ssvep, synthesize_eeg, EegParams, StimulusTable};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let table = StimulusTable::default();
    let params = EegParams::default();
    (0..trials)
        .filter(|_| {
            let region = rng.random_range(1..=table.len());
            let w = synthesize_eeg(region, &table, snr, &params, &mut rng).unwrap();
            classify_ssvep(&w, &table, params.harmonics).unwrap().region == region
        })
        .count()
}

/// Pearson χ² statistic of `counts` against a uniform expectation.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}
