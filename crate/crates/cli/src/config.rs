//! TOML configuration files: partial settings merged over the built-in
//! defaults, and the reverse echo of an effective configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use unim_core::model::{NetworkConfig, Policy, UserOverride};

/// Partial configuration as written in a file. Every key is optional and
/// unknown keys are rejected, so typos fail loudly instead of silently
/// running defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    node_count: Option<usize>,
    user_count: Option<usize>,
    scheduling_rate: Option<f64>,
    neighbour_degree: Option<usize>,
    zipf_exponent: Option<f64>,
    load_fraction: Option<f64>,
    policy: Option<String>,
    duration: Option<f64>,
    warmup: Option<f64>,
    mc_runs: Option<usize>,
    rng_seed: Option<u64>,
    qos_publish_interval: Option<f64>,
    filter_window: Option<usize>,
    metrics_interval: Option<f64>,
    aimd: Option<AimdFile>,
    controller: Option<ControllerFile>,
    user: Option<UserFile>,
    #[serde(default)]
    user_overrides: Vec<OverrideFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AimdFile {
    enabled: Option<bool>,
    initial_rate: Option<f64>,
    additive_step: Option<f64>,
    multiplicative_factor: Option<f64>,
    update_interval: Option<f64>,
    rate_floor: Option<f64>,
    congestion_window: Option<f64>,
    decrease_cooldown: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerFile {
    gain: Option<f64>,
    setpoint: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct UserFile {
    tradeoff_weight: Option<f64>,
    cost_threshold: Option<f64>,
    cost_threshold_spread: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideFile {
    user_id: u32,
    tradeoff_weight: Option<f64>,
    cost_threshold: Option<f64>,
    send_rate: Option<f64>,
}

macro_rules! merge {
    ($dst:expr, $src:expr; $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $src.$field { $dst.$field = v; })+
    };
}

impl FileConfig {
    fn apply(self, cfg: &mut NetworkConfig) -> Result<(), String> {
        merge!(*cfg, self;
            node_count, user_count, scheduling_rate, neighbour_degree,
            zipf_exponent, load_fraction, duration, warmup, mc_runs,
            rng_seed, qos_publish_interval, filter_window, metrics_interval,
        );
        if let Some(name) = self.policy {
            cfg.policy = Policy::from_name(&name).ok_or_else(|| {
                format!(
                    "unknown policy `{name}`; valid policies: urns, rbns, dbns, dbns-plus"
                )
            })?;
        }
        if let Some(a) = self.aimd {
            merge!(cfg.aimd, a;
                enabled, initial_rate, additive_step, multiplicative_factor,
                update_interval, rate_floor, congestion_window, decrease_cooldown,
            );
        }
        if let Some(c) = self.controller {
            merge!(cfg.controller, c; gain, setpoint);
        }
        if let Some(u) = self.user {
            merge!(cfg.user, u; tradeoff_weight, cost_threshold, cost_threshold_spread);
        }
        cfg.user_overrides = self
            .user_overrides
            .into_iter()
            .map(|o| UserOverride {
                user_id: o.user_id,
                tradeoff_weight: o.tradeoff_weight,
                cost_threshold: o.cost_threshold,
                send_rate: o.send_rate,
            })
            .collect();
        Ok(())
    }
}

/// Defaults, overlaid with the file at `path` when given. Does not run
/// `NetworkConfig::validate`; callers do that after applying CLI flags.
pub fn load(path: Option<&Path>) -> Result<NetworkConfig, String> {
    let mut cfg = NetworkConfig::default();
    let Some(path) = path else { return Ok(cfg) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let file: FileConfig =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    file.apply(&mut cfg)?;
    Ok(cfg)
}

/// Serializable mirror of [`NetworkConfig`] with every field explicit, used
/// for the `validate-config` echo and the `run_meta.json` config block.
#[derive(Debug, Serialize)]
pub struct EchoConfig {
    node_count: usize,
    user_count: usize,
    scheduling_rate: f64,
    neighbour_degree: usize,
    zipf_exponent: f64,
    load_fraction: f64,
    policy: &'static str,
    duration: f64,
    warmup: f64,
    mc_runs: usize,
    rng_seed: u64,
    qos_publish_interval: f64,
    filter_window: usize,
    metrics_interval: f64,
    aimd: AimdEcho,
    controller: ControllerEcho,
    user: UserEcho,
    user_overrides: Vec<OverrideEcho>,
}

#[derive(Debug, Serialize)]
struct AimdEcho {
    enabled: bool,
    initial_rate: f64,
    additive_step: f64,
    multiplicative_factor: f64,
    update_interval: f64,
    rate_floor: f64,
    congestion_window: f64,
    decrease_cooldown: f64,
}

#[derive(Debug, Serialize)]
struct ControllerEcho {
    gain: f64,
    setpoint: f64,
}

#[derive(Debug, Serialize)]
struct UserEcho {
    tradeoff_weight: f64,
    cost_threshold: f64,
    cost_threshold_spread: f64,
}

#[derive(Debug, Serialize)]
struct OverrideEcho {
    user_id: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    tradeoff_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    send_rate: Option<f64>,
}

impl From<&NetworkConfig> for EchoConfig {
    fn from(c: &NetworkConfig) -> Self {
        EchoConfig {
            node_count: c.node_count,
            user_count: c.user_count,
            scheduling_rate: c.scheduling_rate,
            neighbour_degree: c.neighbour_degree,
            zipf_exponent: c.zipf_exponent,
            load_fraction: c.load_fraction,
            policy: c.policy.name(),
            duration: c.duration,
            warmup: c.warmup,
            mc_runs: c.mc_runs,
            rng_seed: c.rng_seed,
            qos_publish_interval: c.qos_publish_interval,
            filter_window: c.filter_window,
            metrics_interval: c.metrics_interval,
            aimd: AimdEcho {
                enabled: c.aimd.enabled,
                initial_rate: c.aimd.initial_rate,
                additive_step: c.aimd.additive_step,
                multiplicative_factor: c.aimd.multiplicative_factor,
                update_interval: c.aimd.update_interval,
                rate_floor: c.aimd.rate_floor,
                congestion_window: c.aimd.congestion_window,
                decrease_cooldown: c.aimd.decrease_cooldown,
            },
            controller: ControllerEcho {
                gain: c.controller.gain,
                setpoint: c.controller.setpoint,
            },
            user: UserEcho {
                tradeoff_weight: c.user.tradeoff_weight,
                cost_threshold: c.user.cost_threshold,
                cost_threshold_spread: c.user.cost_threshold_spread,
            },
            user_overrides: c
                .user_overrides
                .iter()
                .map(|o| OverrideEcho {
                    user_id: o.user_id,
                    tradeoff_weight: o.tradeoff_weight,
                    cost_threshold: o.cost_threshold,
                    send_rate: o.send_rate,
                })
                .collect(),
        }
    }
}

/// The effective configuration as a TOML document, loadable back by `load`.
pub fn echo(cfg: &NetworkConfig) -> String {
    toml::to_string(&EchoConfig::from(cfg)).expect("config serializes")
}
