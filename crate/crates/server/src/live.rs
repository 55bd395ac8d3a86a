//! Wall-clock simulation: the same tick as headless runs, paced by a timer.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use swarmdeck_core::broker::{Hub, LocalClient};
use swarmdeck_core::gateway::log::encode_record;
use swarmdeck_core::gateway::{load_or_train_model, LogRecord, ScenarioConfig, Simulation};
use tokio::io::AsyncWriteExt;
use tokio::time::MissedTickBehavior;

use crate::ServerError;

pub struct Live {
    sim: Simulation,
    recorder: Option<(LocalClient, tokio::fs::File)>,
}

pub async fn prepare(cfg: ScenarioConfig, hub: Hub, record: Option<PathBuf>) -> Result<Live, ServerError> {
    cfg.validate().map_err(swarmdeck_core::gateway::SimError::from)?;
    let model_cfg = cfg.clone();
    let model = tokio::task::spawn_blocking(move || load_or_train_model(&model_cfg))
        .await
        .expect("training task does not panic")
        .map_err(swarmdeck_core::gateway::SimError::from)?;
    let recorder = match record {
        Some(path) => {
            let client = hub.connect_local("recorder");
            client.subscribe("#").map_err(swarmdeck_core::gateway::SimError::from)?;
            Some((client, tokio::fs::File::create(path).await?))
        }
        None => None,
    };
    let sim = Simulation::with_model(cfg, hub, model)?;
    Ok(Live { sim, recorder })
}

pub async fn run(mut live: Live, clock: Arc<AtomicU64>) {
    let dt = live.sim.config().dt();
    let mut timer = tokio::time::interval(Duration::from_secs_f64(dt));
    timer.set_missed_tick_behavior(MissedTickBehavior::Delay);
    loop {
        timer.tick().await;
        clock.store(live.sim.time_us(), Ordering::Relaxed);
        live.sim.step();
        if let Some((client, file)) = &mut live.recorder {
            let mut buf = Vec::new();
            for e in client.drain() {
                encode_record(&LogRecord { sim_time: e.timestamp_us, topic: e.topic, payload: e.payload }, &mut buf);
            }
            if let Err(e) = file.write_all(&buf).await {
                tracing::error!("recording stopped: {e}");
                live.recorder = None;
            }
        }
    }
}
