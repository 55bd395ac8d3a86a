use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use clap::{Args, Parser, Subcommand};
use swarmdeck_client::{bench, replay, BenchConfig, BrokerClient, HttpClient};
use swarmdeck_core::emg::{model_file, train_and_evaluate, TrainConfig};
use swarmdeck_core::gateway::api::{EmgTrainRequest, RunRequest};
use swarmdeck_core::gateway::{
    apply_seed_override, module_rng, parse_log, presets, run_scenario, ExitReport, ScenarioConfig, SEED_ENV,
};
use swarmdeck_server::{ServerConfig, DEFAULT_BROKER_PORT, DEFAULT_HTTP_PORT};

#[derive(Parser)]
#[command(name = "swarmdeck", version, about = "Hardware-free human-swarm interaction platform")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Remote {
    /// Base URL of a running service.
    #[arg(long, default_value = "http://127.0.0.1:7789", env = "SWARMDECK_SERVER")]
    server: String,
    /// Do the work in this process instead of calling the service.
    #[arg(long)]
    offline: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario headless and print the exit report.
    Run {
        /// Scenario file, or a preset name (surround, common-velocity, formation).
        scenario: String,
        /// Simulated seconds; defaults to the scenario's own duration.
        #[arg(long)]
        duration: Option<f64>,
        /// Write the broker log (NDJSON) here.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        remote: Remote,
    },
    /// Republish a recorded log to the broker.
    Replay {
        log: PathBuf,
        /// Playback speed multiplier; 0 sends as fast as possible.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value_t = SocketAddr::from(([127, 0, 0, 1], DEFAULT_BROKER_PORT)))]
        broker: SocketAddr,
    },
    /// Start the broker, console bridge and HTTP API.
    Serve {
        /// Scenario to run live on the wall clock (file or preset name).
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = DEFAULT_BROKER_PORT)]
        broker_port: u16,
        /// HTTP API and WebSocket port.
        #[arg(long, default_value_t = DEFAULT_HTTP_PORT)]
        port: u16,
        /// Record every broker message of the live run to this log file.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Check a scenario and list every violation.
    Validate {
        scenario: String,
        #[command(flatten)]
        remote: Remote,
    },
    /// Train the EMG gesture classifier on synthetic data and save it.
    TrainEmg {
        #[arg(long, default_value = "model.emg")]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        per_class: usize,
        #[arg(long, default_value_t = 50)]
        held_out_per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[command(flatten)]
        remote: Remote,
    },
    /// Measure broker fan-out throughput and latency.
    Bench {
        /// Broker to load; without it an embedded broker is started.
        #[arg(long)]
        broker: Option<SocketAddr>,
        #[arg(long, default_value_t = 10)]
        subscribers: usize,
        #[arg(long, default_value_t = 1000.0)]
        rate: f64,
        /// Seconds of load.
        #[arg(long, default_value_t = 2.0)]
        duration: f64,
        #[arg(long, default_value_t = 64)]
        payload: usize,
    },
}

fn load_text(scenario: &str) -> Result<String> {
    if let Some(cfg) = presets::by_name(scenario) {
        return Ok(serde_json::to_string_pretty(&cfg)?);
    }
    std::fs::read_to_string(scenario).with_context(|| format!("reading scenario {scenario}"))
}

fn load_scenario(scenario: &str) -> Result<ScenarioConfig> {
    let text = load_text(scenario)?;
    let mut cfg = match ScenarioConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => bail!("{scenario}: {}", e.violations.join("; ")),
    };
    apply_seed_override(&mut cfg, std::env::var(SEED_ENV).ok().as_deref()).map_err(anyhow::Error::msg)?;
    Ok(cfg)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn report_code(r: &ExitReport) -> ExitCode {
    if r.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

async fn cmd_run(scenario: String, duration: Option<f64>, log: Option<PathBuf>, remote: Remote) -> Result<ExitCode> {
    let cfg = load_scenario(&scenario)?;
    let (report, text) = if remote.offline {
        let out = tokio::task::spawn_blocking(move || run_scenario(&cfg, duration)).await??;
        (out.report, Some(String::from_utf8(out.log)?))
    } else {
        let client = HttpClient::new(&remote.server);
        let req = RunRequest { config: serde_json::to_value(&cfg)?, duration, include_log: log.is_some() };
        let resp = client.run(&req).await.map_err(with_violations)?;
        (resp.report, resp.log)
    };
    if let (Some(path), Some(text)) = (log, text) {
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&report)?;
    Ok(report_code(&report))
}

fn with_violations(e: swarmdeck_client::ClientError) -> anyhow::Error {
    let v = e.violations().join("\n  ");
    if v.is_empty() {
        e.into()
    } else {
        anyhow::Error::from(e).context(format!("violations:\n  {v}"))
    }
}

async fn cmd_validate(scenario: String, remote: Remote) -> Result<ExitCode> {
    let text = load_text(&scenario)?;
    let violations = if remote.offline {
        match ScenarioConfig::from_json(&text) {
            Ok(cfg) => cfg.validate().err().map(|e| e.violations).unwrap_or_default(),
            Err(e) => e.violations,
        }
    } else {
        HttpClient::new(&remote.server).validate(&text).await?.violations
    };
    if violations.is_empty() {
        println!("{scenario}: ok");
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            println!("{scenario}: {v}");
        }
        Ok(ExitCode::from(1))
    }
}

async fn cmd_train(out: PathBuf, req: EmgTrainRequest, remote: Remote) -> Result<ExitCode> {
    let (report, bytes) = if remote.offline {
        let report = tokio::task::spawn_blocking(move || {
            let mut rng = module_rng(req.seed, "emg/train");
            train_and_evaluate(req.per_class, req.held_out_per_class, &req.train, &mut rng)
        })
        .await??;
        let bytes = model_file::to_bytes(&report.model);
        (report, bytes)
    } else {
        let resp = HttpClient::new(&remote.server).emg_train(&req).await?;
        let bytes = STANDARD.decode(resp.model_file_b64)?;
        (resp.report, bytes)
    };
    std::fs::write(&out, bytes).with_context(|| format!("writing {}", out.display()))?;
    print_json(&serde_json::json!({
        "model": out,
        "train_accuracy": report.train_accuracy,
        "held_out_accuracy": report.held_out_accuracy,
        "gradient_check": report.gradient_check.layers,
    }))?;
    Ok(ExitCode::SUCCESS)
}

async fn cmd_replay(log: &Path, speed: f64, broker: SocketAddr) -> Result<ExitCode> {
    let bytes = std::fs::read(log).with_context(|| format!("reading {}", log.display()))?;
    let records = parse_log(&bytes).map_err(|e| anyhow::anyhow!("{}: {e}", log.display()))?;
    let mut client = BrokerClient::connect(broker, "replay").await?;
    let started = std::time::Instant::now();
    let n = replay(&mut client, &records, speed).await?;
    println!("replayed {n} records in {:.2} s", started.elapsed().as_secs_f64());
    Ok(ExitCode::SUCCESS)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match dispatch(Cli::parse().cmd).await {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

async fn dispatch(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Run { scenario, duration, log, remote } => cmd_run(scenario, duration, log, remote).await,
        Cmd::Validate { scenario, remote } => cmd_validate(scenario, remote).await,
        Cmd::TrainEmg { out, per_class, held_out_per_class, seed, epochs, remote } => {
            let train = TrainConfig { epochs, ..TrainConfig::default() };
            cmd_train(out, EmgTrainRequest { per_class, held_out_per_class, seed, train }, remote).await
        }
        Cmd::Replay { log, speed, broker } => cmd_replay(&log, speed, broker).await,
        Cmd::Serve { scenario, host, broker_port, port, record } => {
            let scenario = scenario.map(|s| load_scenario(&s)).transpose()?;
            let cfg = ServerConfig {
                broker_addr: SocketAddr::new(host, broker_port),
                http_addr: SocketAddr::new(host, port),
                scenario,
                record,
            };
            let server = swarmdeck_server::start(cfg).await?;
            eprintln!("broker on {}, http/ws on {}", server.broker_addr, server.http_addr);
            server.wait().await;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bench { broker, subscribers, rate, duration, payload } => {
            if !(rate > 0.0 && duration > 0.0) {
                bail!("rate and duration must be positive");
            }
            let cfg =
                BenchConfig { subscribers, rate, duration: Duration::from_secs_f64(duration), payload_bytes: payload };
            let (addr, embedded) = match broker {
                Some(a) => (a, None),
                None => {
                    let any = SocketAddr::from(([127, 0, 0, 1], 0));
                    let s = swarmdeck_server::start(ServerConfig {
                        broker_addr: any,
                        http_addr: any,
                        ..Default::default()
                    })
                    .await?;
                    (s.broker_addr, Some(s))
                }
            };
            let report = bench(addr, cfg).await?;
            if let Some(s) = embedded {
                s.shutdown();
            }
            print_json(&report)?;
            Ok(if report.lossless() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}
