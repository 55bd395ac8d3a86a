use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::net::ToSocketAddrs;
use tokio::time::{Instant, MissedTickBehavior};

use crate::{BrokerClient, ClientError};
use swarmdeck_core::broker::Envelope;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub subscribers: usize,
    /// Messages per second from the single publisher.
    pub rate: f64,
    pub duration: Duration,
    pub payload_bytes: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { subscribers: 10, rate: 1000.0, duration: Duration::from_secs(2), payload_bytes: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub published: u64,
    /// Per subscriber.
    pub received: Vec<u64>,
    /// Per subscriber: every message arrived, in publish order.
    pub in_order: Vec<bool>,
    pub elapsed_s: f64,
    /// Achieved publish rate.
    pub publish_rate: f64,
    pub latency_p50_ms: f64,
    pub latency_p99_ms: f64,
    pub latency_max_ms: f64,
}

impl BenchReport {
    pub fn lossless(&self) -> bool {
        self.received.iter().all(|r| *r == self.published) && self.in_order.iter().all(|o| *o)
    }
}

const BENCH_TOPIC: &str = "bench/load";

/// Publishes sequence-numbered messages at a fixed rate to `subscribers`
/// connections and measures delivery. Timestamps carry the send time so each
/// subscriber can compute latency.
pub async fn bench(addr: impl ToSocketAddrs + Clone, cfg: BenchConfig) -> Result<BenchReport, ClientError> {
    let epoch = Instant::now();
    let expected = (cfg.rate * cfg.duration.as_secs_f64()).round() as u64;
    let mut subs = Vec::with_capacity(cfg.subscribers);
    for i in 0..cfg.subscribers {
        let mut c = BrokerClient::connect(addr.clone(), &format!("bench-sub-{i}")).await?;
        c.subscribe(BENCH_TOPIC).await?;
        subs.push(c);
    }
    let tasks: Vec<_> = subs
        .into_iter()
        .map(|mut c| {
            tokio::spawn(async move {
                let mut next = 0u64;
                let mut ordered = true;
                let mut lat = Vec::with_capacity(expected as usize);
                while next < expected {
                    let Some(env) = c.recv_timeout(Duration::from_secs(5)).await else { break };
                    let seq = u64::from_be_bytes(env.payload[..8].try_into().expect("8-byte sequence"));
                    ordered &= seq == next;
                    next = seq + 1;
                    let now = epoch.elapsed().as_micros() as u64;
                    lat.push(now.saturating_sub(env.timestamp_us) as f64 / 1000.0);
                }
                (lat, ordered)
            })
        })
        .collect();

    let mut publisher = BrokerClient::connect(addr, "bench-pub").await?;
    let mut timer = tokio::time::interval(Duration::from_secs_f64(1.0 / cfg.rate));
    timer.set_missed_tick_behavior(MissedTickBehavior::Burst);
    let started = Instant::now();
    for seq in 0..expected {
        timer.tick().await;
        let mut payload = seq.to_be_bytes().to_vec();
        payload.resize(cfg.payload_bytes.max(8), 0);
        publisher.publish(&Envelope::new(BENCH_TOPIC, epoch.elapsed().as_micros() as u64, payload)).await?;
    }
    let elapsed = started.elapsed().as_secs_f64();
    publisher.ping().await?;

    let mut received = Vec::new();
    let mut in_order = Vec::new();
    let mut all = Vec::new();
    for t in tasks {
        let (lat, ordered) = t.await.expect("subscriber task");
        received.push(lat.len() as u64);
        in_order.push(ordered);
        all.extend(lat);
    }
    all.sort_by(f64::total_cmp);
    let pct = |p: f64| if all.is_empty() { 0.0 } else { all[((all.len() - 1) as f64 * p).round() as usize] };
    Ok(BenchReport {
        published: expected,
        received,
        in_order,
        elapsed_s: elapsed,
        publish_rate: expected as f64 / elapsed.max(1e-9),
        latency_p50_ms: pct(0.5),
        latency_p99_ms: pct(0.99),
        latency_max_ms: all.last().copied().unwrap_or(0.0),
    })
}
