//! Domain data: reputations, QoS indicators, transactions, run configuration.

use alloc::vec::Vec;

use crate::error::ConfigError;
use crate::math;

/// Node-selection policy a user applies to each transaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Uniform random node selection.
    Urns,
    /// Reputation-weighted selection.
    Rbns,
    /// Delay-aware selection: weight reputation by inverse expected delay.
    Dbns,
    /// Cost-aware selection with a per-user spend threshold; may defer.
    DbnsPlus,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Urns, Policy::Rbns, Policy::Dbns, Policy::DbnsPlus];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Urns => "urns",
            Policy::Rbns => "rbns",
            Policy::Dbns => "dbns",
            Policy::DbnsPlus => "dbns-plus",
        }
    }

    pub fn from_name(name: &str) -> Option<Policy> {
        Policy::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Offered-load scenarios used throughout the evaluation: aggregate user
/// demand as a fraction of scheduler capacity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    /// 90% of capacity.
    A90,
    /// 98% of capacity.
    B98,
    /// 120% of capacity (sustained overload).
    C120,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::A90, Scenario::B98, Scenario::C120];

    pub fn load_fraction(self) -> f64 {
        match self {
            Scenario::A90 => 0.90,
            Scenario::B98 => 0.98,
            Scenario::C120 => 1.20,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::A90 => "a90",
            Scenario::B98 => "b98",
            Scenario::C120 => "c120",
        }
    }

    pub fn from_name(name: &str) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Fixed, publicly known per-node reputations.
///
/// Entries are strictly positive and normalized so they sum to the node
/// count, i.e. mean reputation is 1 and a node's fair share of scheduler
/// capacity is `rep_i / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReputationVector(Vec<f64>);

impl ReputationVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, ConfigError> {
        if weights.is_empty() {
            return Err(ConfigError::new("node_count", "must be at least 1"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(ConfigError::new(
                "reputation",
                "entries must be strictly positive",
            ));
        }
        let sum: f64 = weights.iter().sum();
        let n = weights.len() as f64;
        if ((sum - n) / n).abs() > 1e-9 {
            return Err(ConfigError::new(
                "reputation",
                "entries must sum to the node count",
            ));
        }
        Ok(ReputationVector(weights))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: usize) -> f64 {
        self.0[node]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Sum of all entries (equals the node count by construction).
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Deterministic Zipf rank weights: rank-k weight proportional to k^(-s),
/// normalized to sum to `n`. Node index is rank order, so node 0 always
/// holds the largest reputation.
pub fn generate_reputation(n: usize, s: f64) -> Result<ReputationVector, ConfigError> {
    if n == 0 {
        return Err(ConfigError::new("node_count", "must be at least 1"));
    }
    if !(s >= 0.0) {
        return Err(ConfigError::new("zipf_exponent", "must be nonnegative"));
    }
    let mut weights: Vec<f64> = (1..=n).map(|k| math::powf(k as f64, -s)).collect();
    let sum: f64 = weights.iter().sum();
    let scale = n as f64 / sum;
    for w in &mut weights {
        *w *= scale;
    }
    ReputationVector::new(weights)
}

/// QoS advertisement a node publishes: expected local-pool delay (seconds)
/// and the fee currently charged for access.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QosIndicator {
    pub expected_delay: f64,
    pub fee: f64,
    pub published_at: f64,
}

impl QosIndicator {
    pub fn initial() -> Self {
        QosIndicator {
            expected_delay: 0.0,
            fee: 0.0,
            published_at: 0.0,
        }
    }
}

/// One user transaction moving through the pipeline: created at the user,
/// enqueued into a node's local transaction pool, then issued into the
/// ledger when the scheduler serves it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transaction {
    pub id: u64,
    pub user_id: u32,
    pub node_id: u32,
    pub created_at: f64,
    pub enqueued_at: f64,
    /// Fee advertised by the chosen node at selection time.
    pub fee_paid: f64,
}

/// AIMD rate-setter parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AimdParams {
    /// When false, every node issues at `initial_rate` for the whole run.
    pub enabled: bool,
    /// Issue rate each node starts from, tx/s.
    pub initial_rate: f64,
    /// Climb slope of the additive increase: tx/s gained per second, per
    /// unit of reputation. Each update adds `additive_step * reputation *
    /// update_interval`.
    pub additive_step: f64,
    /// Multiplicative decrease factor applied on congestion.
    pub multiplicative_factor: f64,
    /// Seconds between rate updates.
    pub update_interval: f64,
    /// Lower bound on the issue rate, tx/s.
    pub rate_floor: f64,
    /// Seconds of claimed work a node may hold at the access layer before
    /// it counts as congested. Work-time, not a transaction count, so the
    /// detection lag is the same for every reputation tier.
    pub congestion_window: f64,
    /// Minimum seconds between consecutive multiplicative decreases.
    pub decrease_cooldown: f64,
}

impl Default for AimdParams {
    fn default() -> Self {
        AimdParams {
            enabled: true,
            initial_rate: 1.0,
            additive_step: 0.075,
            multiplicative_factor: 0.7,
            update_interval: 0.1,
            rate_floor: 0.05,
            congestion_window: 0.2,
            decrease_cooldown: 0.1,
        }
    }
}

/// Proportional fee controller: fee = gain * max(0, delay - setpoint).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerParams {
    pub gain: f64,
    /// Delay setpoint in seconds; fees activate above it.
    pub setpoint: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams {
            gain: 0.8,
            setpoint: 15.0,
        }
    }
}

/// User-side parameters shared by all users unless overridden.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserParams {
    /// Weight of delay versus fee in the cost a user assigns to a node.
    pub tradeoff_weight: f64,
    /// Cost above which a node is not worth selecting.
    pub cost_threshold: f64,
    /// Half-width of the per-user spread around `cost_threshold`: user m of
    /// M gets threshold `cost_threshold - spread + 2*spread*m/(M-1)`. With
    /// identical thresholds, overload admission is all-or-nothing and the
    /// network oscillates between a closed gate and a flood; a spread lets
    /// demand fall off smoothly as advertised costs rise, so an equilibrium
    /// exists where the marginal user is priced out.
    pub cost_threshold_spread: f64,
}

impl Default for UserParams {
    fn default() -> Self {
        UserParams {
            tradeoff_weight: 0.6,
            cost_threshold: 12.0,
            cost_threshold_spread: 1.0,
        }
    }
}

/// Per-user deviation from the shared [`UserParams`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserOverride {
    pub user_id: u32,
    pub tradeoff_weight: Option<f64>,
    pub cost_threshold: Option<f64>,
    /// Poisson sending rate, tx/s; defaults to an equal split of the load.
    pub send_rate: Option<f64>,
}

/// Everything a run needs. `Default` is the reference scale: 50 nodes,
/// 100 users, 50 tx/s scheduler capacity, Zipf(0.9) reputations.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub node_count: usize,
    pub user_count: usize,
    /// Scheduler capacity, tx/s.
    pub scheduling_rate: f64,
    /// Gossip fan-out; recorded in run metadata, no effect on dynamics.
    pub neighbour_degree: usize,
    pub zipf_exponent: f64,
    /// Aggregate user demand as a fraction of `scheduling_rate`.
    pub load_fraction: f64,
    pub policy: Policy,
    /// Simulated seconds per run.
    pub duration: f64,
    /// Leading seconds excluded from delay-density statistics.
    pub warmup: f64,
    pub mc_runs: usize,
    pub rng_seed: u64,
    /// Seconds between QoS republications.
    pub qos_publish_interval: f64,
    /// Ring-buffer length of the sawtooth filter (completed cycles kept).
    pub filter_window: usize,
    /// Seconds between time-series samples.
    pub metrics_interval: f64,
    pub aimd: AimdParams,
    pub controller: ControllerParams,
    pub user: UserParams,
    pub user_overrides: Vec<UserOverride>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            node_count: 50,
            user_count: 100,
            scheduling_rate: 50.0,
            neighbour_degree: 4,
            zipf_exponent: 0.9,
            load_fraction: 0.9,
            policy: Policy::Urns,
            duration: 2000.0,
            warmup: 100.0,
            mc_runs: 10,
            rng_seed: 42,
            qos_publish_interval: 0.5,
            filter_window: 5,
            metrics_interval: 1.0,
            aimd: AimdParams::default(),
            controller: ControllerParams::default(),
            user: UserParams::default(),
            user_overrides: Vec::new(),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_count == 0 {
            return Err(ConfigError::new("node_count", "must be at least 1"));
        }
        if self.user_count == 0 {
            return Err(ConfigError::new("user_count", "must be at least 1"));
        }
        if !(self.scheduling_rate > 0.0) {
            return Err(ConfigError::new("scheduling_rate", "must be positive"));
        }
        if !(self.zipf_exponent >= 0.0) {
            return Err(ConfigError::new("zipf_exponent", "must be nonnegative"));
        }
        if !(self.load_fraction > 0.0) {
            return Err(ConfigError::new("load_fraction", "must be positive"));
        }
        if !(self.duration >= 0.0) {
            return Err(ConfigError::new("duration", "must be nonnegative"));
        }
        if !(self.warmup >= 0.0) {
            return Err(ConfigError::new("warmup", "must be nonnegative"));
        }
        if self.mc_runs == 0 {
            return Err(ConfigError::new("mc_runs", "must be at least 1"));
        }
        if !(self.qos_publish_interval > 0.0) {
            return Err(ConfigError::new("qos_publish_interval", "must be positive"));
        }
        if self.filter_window == 0 {
            return Err(ConfigError::new("filter_window", "must be at least 1"));
        }
        if !(self.metrics_interval > 0.0) {
            return Err(ConfigError::new("metrics_interval", "must be positive"));
        }
        let a = &self.aimd;
        if !(a.update_interval > 0.0) {
            return Err(ConfigError::new("aimd.update_interval", "must be positive"));
        }
        if !(a.additive_step > 0.0) {
            return Err(ConfigError::new("aimd.additive_step", "must be positive"));
        }
        if !(a.multiplicative_factor > 0.0 && a.multiplicative_factor < 1.0) {
            return Err(ConfigError::new(
                "aimd.multiplicative_factor",
                "must lie strictly between 0 and 1",
            ));
        }
        if !(a.rate_floor > 0.0) {
            return Err(ConfigError::new("aimd.rate_floor", "must be positive"));
        }
        if !(a.congestion_window > 0.0) {
            return Err(ConfigError::new("aimd.congestion_window", "must be positive"));
        }
        if !(a.decrease_cooldown >= 0.0) {
            return Err(ConfigError::new("aimd.decrease_cooldown", "must be nonnegative"));
        }
        if !(a.initial_rate >= a.rate_floor && a.initial_rate <= self.scheduling_rate) {
            return Err(ConfigError::new(
                "aimd.initial_rate",
                "must lie between aimd.rate_floor and scheduling_rate",
            ));
        }
        if !(self.controller.gain >= 0.0) {
            return Err(ConfigError::new("controller.gain", "must be nonnegative"));
        }
        if !(self.controller.setpoint >= 0.0) {
            return Err(ConfigError::new("controller.setpoint", "must be nonnegative"));
        }
        self.validate_user(&self.user)?;
        for o in &self.user_overrides {
            if o.user_id as usize >= self.user_count {
                return Err(ConfigError::new(
                    "user_overrides.user_id",
                    "must be below user_count",
                ));
            }
            if let Some(w) = o.tradeoff_weight {
                if !(0.0..=1.0).contains(&w) {
                    return Err(ConfigError::new(
                        "user_overrides.tradeoff_weight",
                        "must lie in [0, 1]",
                    ));
                }
            }
            if let Some(c) = o.cost_threshold {
                if !(c > 0.0) {
                    return Err(ConfigError::new(
                        "user_overrides.cost_threshold",
                        "must be positive",
                    ));
                }
            }
            if let Some(r) = o.send_rate {
                if !(r > 0.0) {
                    return Err(ConfigError::new(
                        "user_overrides.send_rate",
                        "must be positive",
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_user(&self, u: &UserParams) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&u.tradeoff_weight) {
            return Err(ConfigError::new("user.tradeoff_weight", "must lie in [0, 1]"));
        }
        if !(u.cost_threshold > 0.0) {
            return Err(ConfigError::new("user.cost_threshold", "must be positive"));
        }
        if !(0.0..u.cost_threshold).contains(&u.cost_threshold_spread) {
            return Err(ConfigError::new(
                "user.cost_threshold_spread",
                "must be nonnegative and below user.cost_threshold",
            ));
        }
        Ok(())
    }

    /// Per-user Poisson sending rate before overrides: an equal split of
    /// the offered load.
    pub fn base_send_rate(&self) -> f64 {
        self.load_fraction * self.scheduling_rate / self.user_count as f64
    }

    /// Order- and representation-stable hash of every field, recorded in
    /// run metadata so exported artifacts can be traced to their config.
    pub fn stable_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.usize(self.node_count);
        h.usize(self.user_count);
        h.f64(self.scheduling_rate);
        h.usize(self.neighbour_degree);
        h.f64(self.zipf_exponent);
        h.f64(self.load_fraction);
        h.u64(match self.policy {
            Policy::Urns => 0,
            Policy::Rbns => 1,
            Policy::Dbns => 2,
            Policy::DbnsPlus => 3,
        });
        h.f64(self.duration);
        h.f64(self.warmup);
        h.usize(self.mc_runs);
        h.u64(self.rng_seed);
        h.f64(self.qos_publish_interval);
        h.usize(self.filter_window);
        h.f64(self.metrics_interval);
        h.u64(self.aimd.enabled as u64);
        h.f64(self.aimd.initial_rate);
        h.f64(self.aimd.additive_step);
        h.f64(self.aimd.multiplicative_factor);
        h.f64(self.aimd.update_interval);
        h.f64(self.aimd.rate_floor);
        h.f64(self.aimd.congestion_window);
        h.f64(self.aimd.decrease_cooldown);
        h.f64(self.controller.gain);
        h.f64(self.controller.setpoint);
        h.f64(self.user.tradeoff_weight);
        h.f64(self.user.cost_threshold);
        h.f64(self.user.cost_threshold_spread);
        for o in &self.user_overrides {
            h.u64(o.user_id as u64);
            h.f64(o.tradeoff_weight.unwrap_or(f64::NAN));
            h.f64(o.cost_threshold.unwrap_or(f64::NAN));
            h.f64(o.send_rate.unwrap_or(f64::NAN));
        }
        h.finish()
    }
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    fn u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
