//! Scenario configuration, topic schemas, the simulation loop and the
//! record/replay log.

pub mod api;
pub mod bridge;
pub mod config;
pub mod log;
pub mod presets;
pub mod schema;
pub mod script;
pub mod seed;
pub mod sim;

pub use config::{ConfigError, EmgBlock, GazeBlock, RobotSpec, RunMode, ScenarioConfig, SsvepBlock};
pub use log::{encode_log, log_hash, parse_log, replay_delays, LogError, LogRecord};
pub use script::{expand_script, Action, Scheduled, ScriptEvent, Shape};
pub use seed::{derive_seed, module_rng};
pub use sim::{
    load_or_train_model, run_scenario, run_scenario_with_model, train_default_model, ExitReport, RunOutput,
    SafetyStats, SimError, Simulation,
};

/// Environment variable that overrides a scenario's seed.
pub const SEED_ENV: &str = "SWARMDECK_SEED";

/// Applies `SWARMDECK_SEED` when set to a valid u64.
pub fn apply_seed_override(cfg: &mut ScenarioConfig, value: Option<&str>) -> Result<(), String> {
    if let Some(v) = value {
        cfg.seed = v.trim().parse().map_err(|_| format!("{SEED_ENV} must be an unsigned 64-bit integer, got '{v}'"))?;
    }
    Ok(())
}
