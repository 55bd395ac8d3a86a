//! The swarmdeck service: TCP broker, console WebSocket bridge, HTTP/JSON API
//! and the optional wall-clock simulation, all sharing one in-process hub.

mod api;
mod bridge;
pub mod broker;
mod live;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use swarmdeck_core::broker::{Envelope, Hub, Sink};
use swarmdeck_core::gateway::ScenarioConfig;
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

pub use swarmdeck_core::broker::DEFAULT_PORT as DEFAULT_BROKER_PORT;
pub const DEFAULT_HTTP_PORT: u16 = 7789;

/// Hub sink feeding a tokio channel.
pub(crate) struct ChannelSink(pub mpsc::UnboundedSender<Envelope>);

impl Sink for ChannelSink {
    fn deliver(&self, env: &Envelope) -> bool {
        self.0.send(env.clone()).is_ok()
    }
}

/// Timestamp source for messages entering from outside the simulation: the
/// live sim's clock when one runs, else microseconds since start-up.
#[derive(Clone)]
pub(crate) struct Clock {
    started: Instant,
    sim_us: Arc<AtomicU64>,
    live: bool,
}

impl Clock {
    fn now_us(&self) -> u64 {
        if self.live {
            self.sim_us.load(Ordering::Relaxed)
        } else {
            self.started.elapsed().as_micros() as u64
        }
    }
}

#[derive(Clone)]
pub(crate) struct AppState {
    hub: Hub,
    clock: Clock,
    broker_addr: SocketAddr,
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub broker_addr: SocketAddr,
    pub http_addr: SocketAddr,
    /// Scenario to run on the wall clock; `None` serves the hub only.
    pub scenario: Option<ScenarioConfig>,
    /// Append every broker message to this log while the live sim runs.
    pub record: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            broker_addr: SocketAddr::from(([127, 0, 0, 1], DEFAULT_BROKER_PORT)),
            http_addr: SocketAddr::from(([127, 0, 0, 1], DEFAULT_HTTP_PORT)),
            scenario: None,
            record: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("simulation: {0}")]
    Sim(#[from] swarmdeck_core::gateway::SimError),
}

pub struct RunningServer {
    pub broker_addr: SocketAddr,
    pub http_addr: SocketAddr,
    pub hub: Hub,
    tasks: Vec<JoinHandle<()>>,
}

impl RunningServer {
    /// Waits until any component stops (normally never).
    pub async fn wait(mut self) {
        let (_, _, rest) = futures::future::select_all(self.tasks.drain(..)).await;
        for t in rest {
            t.abort();
        }
    }

    pub fn shutdown(self) {
        for t in &self.tasks {
            t.abort();
        }
    }
}

/// Binds both listeners and spawns every component.
pub async fn start(cfg: ServerConfig) -> Result<RunningServer, ServerError> {
    let hub = Hub::new();
    let broker_listener = TcpListener::bind(cfg.broker_addr).await?;
    let http_listener = TcpListener::bind(cfg.http_addr).await?;
    let broker_addr = broker_listener.local_addr()?;
    let http_addr = http_listener.local_addr()?;

    let clock = Clock { started: Instant::now(), sim_us: Arc::new(AtomicU64::new(0)), live: cfg.scenario.is_some() };
    let mut tasks = vec![tokio::spawn(broker::serve(broker_listener, hub.clone()))];
    if let Some(scenario) = cfg.scenario {
        let sim = live::prepare(scenario, hub.clone(), cfg.record).await?;
        tasks.push(tokio::spawn(live::run(sim, clock.sim_us.clone())));
    }
    let state = AppState { hub: hub.clone(), clock, broker_addr };
    let app = api::router(state);
    tasks.push(tokio::spawn(async move {
        if let Err(e) = axum::serve(http_listener, app).await {
            tracing::error!("http server stopped: {e}");
        }
    }));
    tracing::info!(%broker_addr, %http_addr, "swarmdeck serving");
    Ok(RunningServer { broker_addr, http_addr, hub, tasks })
}
