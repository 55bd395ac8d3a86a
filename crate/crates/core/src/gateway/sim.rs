//! The simulation loop. One tick: announce, publish robot state, observe,
//! inject due script messages, run the time-driven decoders, run the swarm
//! controller, apply commands, integrate.

use std::collections::{BTreeMap, VecDeque};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, ScenarioConfig};
use super::log::{encode_log, log_hash, LogRecord};
use super::schema::*;
use super::script::{expand_script, Scheduled};
use super::seed::module_rng;
use crate::behaviors::{BehaviorError, BehaviorEvent, SwarmCommand, SwarmController};
use crate::broker::{BrokerError, Hub, LocalClient};
use crate::emg::{
    self, classify_window, extract_features, generate_dataset, train_classifier, Debouncer, EmgError, EmgWindow,
    Gesture, MlpModel, CHANNELS, HOP_SAMPLES, HOP_SECONDS, WINDOW_SAMPLES,
};
use crate::gaze::{fit_trajectory, DwellDetector, GazeSample, TrajectoryCapture};
use crate::robot::Kinematics;
use crate::ssvep::{classify_ssvep_with_beta, synthesize_eeg, StimulusTable};
use crate::tracking::{Touch, Tracker, WorldSnapshot};
use crate::tuio::{encode_tuio_frame, TUIO_TOPIC};
use crate::world::{Point, Pose, RegionGrid, RobotState, Twist};

const TIME_EPS: f64 = 1e-9;
const MAX_PUMP_ROUNDS: usize = 64;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("emg model: {0}")]
    Emg(#[from] EmgError),
    #[error("broker: {0}")]
    Broker(#[from] BrokerError),
}

/// Collision and containment bookkeeping over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SafetyStats {
    pub min_pair_distance: Option<f64>,
    pub collision_violations: u64,
    pub containment_violations: u64,
    pub first_violation: Option<String>,
}

impl SafetyStats {
    pub fn collision_ok(&self) -> bool {
        self.collision_violations == 0
    }

    pub fn containment_ok(&self) -> bool {
        self.containment_violations == 0
    }
}

/// Trains the start-up EMG classifier from the scenario's seed.
pub fn train_default_model(cfg: &ScenarioConfig) -> Result<MlpModel, EmgError> {
    let mut rng = module_rng(cfg.seed, "emg/train");
    let data = generate_dataset(cfg.emg.train_per_class, &mut rng);
    train_classifier(&data, &cfg.emg.train, &mut rng)
}

pub fn load_or_train_model(cfg: &ScenarioConfig) -> Result<MlpModel, EmgError> {
    match &cfg.emg.model {
        Some(path) => emg::model_file::load(std::path::Path::new(path)),
        None => train_default_model(cfg),
    }
}

struct EmgStream {
    model: MlpModel,
    rng: ChaCha8Rng,
    gesture: Option<Gesture>,
    buffer: Vec<VecDeque<f64>>,
    hop_origin: f64,
    hops: u64,
    debouncer: Debouncer,
}

struct PendingDecision {
    due: f64,
    epoch: u64,
    decision: crate::ssvep::SsvepDecision,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    hub: Hub,
    io: LocalClient,
    kin: Kinematics,
    robots: Vec<RobotState>,
    commands: BTreeMap<u32, Twist>,
    tracker: Tracker,
    tracker_rng: ChaCha8Rng,
    track_frames: u64,
    controller: SwarmController,
    idle_zeroed: bool,
    grid: RegionGrid,
    table: StimulusTable,
    ssvep_rng: ChaCha8Rng,
    epochs: u64,
    pending: VecDeque<PendingDecision>,
    emg: EmgStream,
    dwell: DwellDetector,
    capture: TrajectoryCapture,
    touches: BTreeMap<u32, Point>,
    script: VecDeque<Scheduled>,
    tick: u64,
    safety: SafetyStats,
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig, hub: Hub) -> Result<Self, SimError> {
        cfg.validate()?;
        let model = load_or_train_model(&cfg)?;
        Self::with_model(cfg, hub, model)
    }

    pub fn with_model(cfg: ScenarioConfig, hub: Hub, model: MlpModel) -> Result<Self, SimError> {
        cfg.validate()?;
        model.validate()?;
        let kin = Kinematics::new(cfg.kinematics).map_err(|e| ConfigError { violations: vec![e.to_string()] })?;
        let mut robots: Vec<RobotState> = cfg
            .robots
            .iter()
            .map(|r| RobotState::at_rest(r.id, Pose::new(r.x, r.y, r.theta).expect("validated pose"), cfg.robot_radius))
            .collect();
        robots.sort_by_key(|r| r.id);
        let io = hub.connect_local("sim");
        for f in ["ui/#", "intent/#", "robot/+/cmd_vel"] {
            io.subscribe(f)?;
        }
        let mut script_rng = module_rng(cfg.seed, "script/gaze");
        let script = expand_script(&cfg.script, &cfg.gaze, &mut script_rng).into();
        let tracker_label = format!("tracker/{}", cfg.tracker.seed);
        Ok(Self {
            hub,
            io,
            kin,
            commands: robots.iter().map(|r| (r.id, Twist::ZERO)).collect(),
            robots,
            tracker: Tracker::new(cfg.tracker, cfg.field),
            tracker_rng: module_rng(cfg.seed, &tracker_label),
            track_frames: 0,
            controller: SwarmController::new(cfg.behavior.clone(), cfg.field),
            idle_zeroed: true,
            grid: RegionGrid::ssvep(&cfg.field),
            table: StimulusTable::default(),
            ssvep_rng: module_rng(cfg.seed, "ssvep"),
            epochs: 0,
            pending: VecDeque::new(),
            emg: EmgStream {
                model,
                rng: module_rng(cfg.seed, "emg/stream"),
                gesture: None,
                buffer: vec![VecDeque::with_capacity(WINDOW_SAMPLES); CHANNELS],
                hop_origin: 0.0,
                hops: 0,
                debouncer: Debouncer::new(cfg.emg.debounce),
            },
            dwell: DwellDetector::new(cfg.gaze.dwell, RegionGrid::ssvep(&cfg.field)),
            capture: TrajectoryCapture::default(),
            touches: BTreeMap::new(),
            script,
            tick: 0,
            safety: SafetyStats::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn hub(&self) -> &Hub {
        &self.hub
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Simulated time of the next tick, seconds.
    pub fn time(&self) -> f64 {
        self.tick as f64 / self.cfg.tick_rate
    }

    pub fn time_us(&self) -> u64 {
        (self.tick as f64 * 1e6 / self.cfg.tick_rate).round() as u64
    }

    pub fn robots(&self) -> &[RobotState] {
        &self.robots
    }

    pub fn safety(&self) -> &SafetyStats {
        &self.safety
    }

    pub fn mode_name(&self) -> &'static str {
        self.controller.mode_name()
    }

    fn publish(&self, topic: &str, payload: Vec<u8>) {
        // topics are generated here and payloads are bounded, so this cannot fail
        self.hub.publish(&crate::broker::Envelope::new(topic, self.time_us(), payload)).expect("valid sim message");
    }

    fn publish_json<T: Serialize>(&self, topic: &str, v: &T) {
        self.publish(topic, serde_json::to_vec(v).expect("payload serializes"));
    }

    fn reject(&self, topic: &str, error: impl Into<String>) {
        self.publish_json(LOG_REJECTED, &RejectedMsg { topic: topic.into(), error: error.into() });
    }

    pub fn step(&mut self) {
        let t = self.time();
        self.publish_json(SIM_TICK, &TickMsg { tick: self.tick, t });
        self.check_safety();
        for r in &self.robots {
            let w = r.world_twist();
            let msg =
                RobotStateMsg { x: r.pose.x, y: r.pose.y, theta: r.pose.theta, vx: w.vx, vy: w.vy, w: w.omega, t };
            self.publish_json(&state_topic(r.id), &msg);
        }
        self.observe(t);

        while self.script.front().is_some_and(|m| m.t <= t + TIME_EPS) {
            let m = self.script.pop_front().expect("front exists");
            if let Err(e) = self.hub.publish(&crate::broker::Envelope::new(m.topic.clone(), self.time_us(), m.payload))
            {
                self.reject(&m.topic, e.to_string());
            }
        }
        self.pump();

        self.run_decoders(t);
        self.pump();

        let out = self.controller.step(&self.robots, self.cfg.dt());
        self.publish_events(&out.events, t);
        if let Some(f) = &out.formation {
            self.publish_json(
                LOG_FORMATION,
                &FormationMsg { t, progress: f.progress, length: f.length, errors: f.errors.clone() },
            );
        }
        let idle = self.controller.mode_name() == "idle";
        if !idle || !self.idle_zeroed {
            for (r, (id, world)) in self.robots.iter().zip(&out.twists) {
                let body = world.rotated(-r.pose.theta);
                self.publish_json(&cmd_vel_topic(*id), &CmdVel { vx: body.vx, vy: body.vy, w: body.omega });
            }
            self.idle_zeroed = idle;
        }
        self.pump();

        let dt = self.cfg.dt();
        for r in &mut self.robots {
            let cmd = self.commands.get(&r.id).copied().unwrap_or(Twist::ZERO);
            if let Ok(next) = self.kin.step(r, cmd, dt) {
                *r = next;
            }
        }
        self.tick += 1;
    }

    fn check_safety(&mut self) {
        let s = &mut self.safety;
        let t = self.tick as f64 / self.cfg.tick_rate;
        for (i, a) in self.robots.iter().enumerate() {
            if !self.cfg.field.contains_with_margin(a.position()) {
                s.containment_violations += 1;
                s.first_violation.get_or_insert_with(|| {
                    format!("t={t:.2}: robot {} at ({:.4}, {:.4}) left the field margin", a.id, a.pose.x, a.pose.y)
                });
            }
            for b in &self.robots[i + 1..] {
                let d = a.position().distance(b.position());
                s.min_pair_distance = Some(s.min_pair_distance.map_or(d, |m| m.min(d)));
                if d < a.radius + b.radius {
                    s.collision_violations += 1;
                    s.first_violation
                        .get_or_insert_with(|| format!("t={t:.2}: robots {} and {} are {d:.4} m apart", a.id, b.id));
                }
            }
        }
    }

    fn observe(&mut self, t: f64) {
        let rate = self.cfg.tracker.rate;
        if (self.track_frames as f64) / rate > t + TIME_EPS {
            return;
        }
        self.track_frames += 1;
        let snapshot = WorldSnapshot {
            robots: self.robots.iter().map(|r| (r.id, r.pose)).collect(),
            obstacles: self.cfg.obstacles.clone(),
            touches: self.touches.iter().map(|(id, p)| Touch { id: *id, point: *p }).collect(),
        };
        let frame = self.tracker.observe(&snapshot, &mut self.tracker_rng);
        match encode_tuio_frame(&frame) {
            Ok(bytes) => self.publish(TUIO_TOPIC, bytes),
            Err(e) => self.reject(TUIO_TOPIC, e.to_string()),
        }
    }

    fn run_decoders(&mut self, t: f64) {
        while self.pending.front().is_some_and(|p| p.due <= t + TIME_EPS) {
            let p = self.pending.pop_front().expect("front exists");
            let msg = SsvepIntent {
                epoch: p.epoch,
                region: p.decision.region,
                probabilities: p.decision.probabilities,
                correlations: p.decision.correlations,
                t,
            };
            self.publish_json(INTENT_SSVEP, &msg);
        }

        self.advance_emg(t);
    }

    /// Synthesizes and classifies every EMG hop due by `t`.
    fn advance_emg(&mut self, t: f64) {
        let Some(gesture) = self.emg.gesture else { return };
        loop {
            let due = self.emg.hop_origin + (self.emg.hops + 1) as f64 * HOP_SECONDS;
            if due > t + TIME_EPS {
                break;
            }
            self.emg.hops += 1;
            let chunk = emg::synthesize_chunk(gesture, HOP_SAMPLES, &mut self.emg.rng);
            for (buf, ch) in self.emg.buffer.iter_mut().zip(chunk.channels) {
                buf.extend(ch);
                while buf.len() > WINDOW_SAMPLES {
                    buf.pop_front();
                }
            }
            if self.emg.buffer[0].len() < WINDOW_SAMPLES {
                continue;
            }
            let window = EmgWindow::new(self.emg.buffer.iter().map(|b| b.iter().copied().collect()).collect())
                .expect("buffer holds one full window");
            let (label, scores) = classify_window(&self.emg.model, &extract_features(&window));
            if let Some(cmd) = self.emg.debouncer.push(label) {
                self.publish_json(INTENT_EMG, &EmgIntent { gesture: cmd, scores: scores.to_vec(), t });
            }
        }
    }

    /// Delivers queued broker traffic to the sim's consumers until quiet.
    fn pump(&mut self) {
        for _ in 0..MAX_PUMP_ROUNDS {
            let batch = self.io.drain();
            if batch.is_empty() {
                return;
            }
            for env in batch {
                self.handle(&env.topic, &env.payload);
            }
        }
    }

    fn handle(&mut self, topic: &str, payload: &[u8]) {
        if let Some(id) = robot_topic_id(topic, "cmd_vel") {
            match serde_json::from_slice::<CmdVel>(payload) {
                Ok(c) if c.vx.is_finite() && c.vy.is_finite() && c.w.is_finite() => {
                    if let Some(slot) = self.commands.get_mut(&id) {
                        *slot = Twist::new(c.vx, c.vy, c.w);
                    }
                }
                Ok(_) => self.reject(topic, "non-finite command"),
                Err(e) => self.reject(topic, e.to_string()),
            }
            return;
        }
        if topic.starts_with("ui/") {
            match validate_ui(topic, payload) {
                Ok(m) => self.handle_ui(m),
                Err(e) => self.reject(topic, e),
            }
            return;
        }
        let t = self.time();
        let cmd = match topic {
            INTENT_SSVEP => match serde_json::from_slice::<SsvepIntent>(payload) {
                Ok(m) => match self.grid.region_center(m.region) {
                    Ok(target) => SwarmCommand::GotoSurround { target },
                    Err(e) => return self.reject(topic, e.to_string()),
                },
                Err(e) => return self.reject(topic, e.to_string()),
            },
            INTENT_EMG => match serde_json::from_slice::<EmgIntent>(payload) {
                Ok(m) => SwarmCommand::CommonVelocity { twist: m.gesture.twist(self.cfg.emg.speed) },
                Err(e) => return self.reject(topic, e.to_string()),
            },
            INTENT_GAZE_SELECTION => match serde_json::from_slice::<GazeSelection>(payload) {
                Ok(m) => SwarmCommand::GotoSurround { target: self.cfg.field.clamp_with_margin(Point::new(m.x, m.y)) },
                Err(e) => return self.reject(topic, e.to_string()),
            },
            INTENT_GAZE_PATH => match serde_json::from_slice::<GazePathMsg>(payload) {
                Ok(m) => SwarmCommand::FormationFollow { path: m.path },
                Err(e) => return self.reject(topic, e.to_string()),
            },
            _ => return,
        };
        self.apply(cmd, t);
    }

    fn apply(&mut self, cmd: SwarmCommand, t: f64) {
        match self.controller.command(cmd, &self.robots) {
            Ok(events) => {
                self.publish_json(SWARM_MODE, &SwarmModeMsg { mode: self.controller.mode_name().into(), t });
                self.publish_events(&events, t);
            }
            Err(e @ (BehaviorError::ShapeMismatch { .. } | BehaviorError::NoRobots | BehaviorError::Config(_))) => {
                self.reject(SWARM_MODE, e.to_string())
            }
        }
    }

    fn publish_events(&self, events: &[BehaviorEvent], t: f64) {
        for e in events {
            self.publish_json(LOG_BEHAVIOR, &BehaviorEventMsg { event: e.clone(), t });
        }
    }

    fn handle_ui(&mut self, m: UiMessage) {
        let t = self.time();
        match m {
            UiMessage::Touch(touch) => match touch.phase {
                TouchPhase::Down | TouchPhase::Move => {
                    self.touches.insert(touch.id, self.cfg.field.clamp_with_margin(Point::new(touch.x, touch.y)));
                }
                TouchPhase::Up => {
                    self.touches.remove(&touch.id);
                }
            },
            UiMessage::SsvepEpoch(e) => {
                self.epochs += 1;
                let decision = synthesize_eeg(e.region, &self.table, e.snr, &self.cfg.ssvep.eeg, &mut self.ssvep_rng)
                    .and_then(|w| {
                        classify_ssvep_with_beta(
                            &w,
                            &self.table,
                            self.cfg.ssvep.eeg.harmonics,
                            self.cfg.ssvep.softmax_beta,
                        )
                    });
                match decision {
                    Ok(decision) => self.pending.push_back(PendingDecision {
                        due: t + self.cfg.ssvep.eeg.duration,
                        epoch: self.epochs,
                        decision,
                    }),
                    Err(err) => self.reject(UI_SSVEP_EPOCH, err.to_string()),
                }
            }
            UiMessage::Gesture(g) => {
                // samples up to now were produced under the previous gesture
                self.advance_emg(t);
                if self.emg.gesture.is_none() {
                    self.emg.hop_origin = t;
                    self.emg.hops = 0;
                }
                self.emg.gesture = Some(g.gesture);
            }
            UiMessage::Gaze(g) => {
                let sample = GazeSample { t: g.t, point: Point::new(g.x, g.y), valid: g.valid };
                if let Some(ev) = self.dwell.push(sample) {
                    let msg = GazeSelection { x: ev.point.x, y: ev.point.y, region: ev.region, t };
                    self.publish_json(INTENT_GAZE_SELECTION, &msg);
                }
                self.capture.push(&sample);
            }
            UiMessage::GazeCapture(c) => match c.action {
                CaptureAction::Start => self.capture.begin(),
                CaptureAction::Stop => match self.capture.finish().and_then(|pts| fit_trajectory(&pts)) {
                    Ok(path) => self.publish_json(INTENT_GAZE_PATH, &GazePathMsg { path, t }),
                    Err(e) => self.publish_json(INTENT_GAZE_ERROR, &ErrorMsg { error: e.to_string(), t }),
                },
            },
            UiMessage::Target(p) => {
                let target = self.cfg.field.clamp_with_margin(Point::new(p.x, p.y));
                self.apply(SwarmCommand::GotoSurround { target }, t);
            }
            UiMessage::Mode(_) => self.apply(SwarmCommand::Idle, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSummary {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitReport {
    pub name: String,
    pub seed: u64,
    pub ticks: u64,
    pub sim_time: f64,
    pub records: usize,
    pub log_sha256: String,
    pub final_mode: String,
    pub safety: SafetyStats,
    pub collision: String,
    pub containment: String,
    pub robots: Vec<RobotSummary>,
}

impl ExitReport {
    pub fn passed(&self) -> bool {
        self.safety.collision_ok() && self.safety.containment_ok()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<LogRecord>,
    pub log: Vec<u8>,
    pub report: ExitReport,
}

fn verdict(ok: bool) -> String {
    if ok { "pass" } else { "fail" }.to_string()
}

/// Runs headless for `duration` seconds (config default when `None`) and
/// returns the full broker log.
pub fn run_scenario(cfg: &ScenarioConfig, duration: Option<f64>) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let model = load_or_train_model(cfg)?;
    run_scenario_with_model(cfg, duration, model)
}

pub fn run_scenario_with_model(
    cfg: &ScenarioConfig,
    duration: Option<f64>,
    model: MlpModel,
) -> Result<RunOutput, SimError> {
    let duration = duration.unwrap_or(cfg.duration);
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(ConfigError { violations: vec![format!("duration must be >= 0, got {duration}")] }.into());
    }
    let hub = Hub::new();
    let recorder = hub.connect_local("recorder");
    recorder.subscribe("#")?;
    let mut sim = Simulation::with_model(cfg.clone(), hub, model)?;
    let ticks = (duration * cfg.tick_rate).round() as u64;
    let mut records = Vec::new();
    for _ in 0..ticks {
        sim.step();
        records.extend(recorder.drain().into_iter().map(|e| LogRecord {
            sim_time: e.timestamp_us,
            topic: e.topic,
            payload: e.payload,
        }));
    }
    sim.check_safety();
    let log = encode_log(&records);
    let safety = sim.safety().clone();
    let report = ExitReport {
        name: cfg.name.clone(),
        seed: cfg.seed,
        ticks,
        sim_time: sim.time(),
        records: records.len(),
        log_sha256: log_hash(&log),
        final_mode: sim.mode_name().into(),
        collision: verdict(safety.collision_ok()),
        containment: verdict(safety.containment_ok()),
        safety,
        robots: sim
            .robots()
            .iter()
            .map(|r| RobotSummary { id: r.id, x: r.pose.x, y: r.pose.y, theta: r.pose.theta })
            .collect(),
    };
    Ok(RunOutput { records, log, report })
}
