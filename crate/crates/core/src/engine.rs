//! Event-driven simulation loop: Poisson users pick nodes through their
//! selection policy, nodes pace ledger issuance with AIMD timers, and the
//! shared scheduler clears each node's traffic at its reputation-weighted
//! share of capacity.
//!
//! The access-control layer of the modelled network runs saturated: every
//! node's scheduler carries the entire network's traffic (the simulated
//! users' transactions plus background load), so a node's long-run
//! scheduling share is pinned at rep_i / Σrep · ν regardless of how much
//! capacity its peers leave unused. Two consequences shape the engine.
//! First, ledger inclusions run on a per-node service grid of exactly
//! share_i slots per second; unused slots stand for background traffic and
//! never redistribute to user traffic. Second, the congestion signal that
//! drives AIMD is the node's claimed-work backlog at that saturated layer:
//! claim_i integrates (rate_i - share_i) over time, floored at zero, and
//! the node counts as congested while claim_i exceeds congestion_window
//! seconds of its share. A multiplicative decrease relinquishes the
//! over-claim and resets it. Measured in work-time rather than transaction
//! counts, the signal gives every reputation tier the same normalized
//! sawtooth: the rate oscillates around share_i with a period of a few
//! seconds, independent of reputation.
//!
//! A transaction is recorded when its node issues it (it leaves the LTP);
//! the scheduling stage after that point feeds only the throughput
//! counters and the conservation totals.
//!
//! Determinism: the event heap orders by (time, insertion sequence), every
//! stochastic actor draws from its own seeded stream, and all state lives
//! in plain collections, so a (config, seed) pair always reproduces the
//! same `SimResult` bit for bit.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand_chacha::ChaCha8Rng;

use crate::access::{AimdState, RateEvent};
use crate::error::ConfigError;
use crate::model::{
    generate_reputation, NetworkConfig, Policy, QosIndicator, Scenario, Transaction,
};
use crate::policy::{
    dbns_plus_select, dbns_probabilities, rbns_probabilities, sample_node, urns_probabilities,
    PolicyInput, Selection,
};
use crate::qos::{publish_indicator, SawtoothFilter};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
enum EventKind {
    UserArrival { user: u32 },
    NodeIssue { node: u32 },
    NodeService { node: u32 },
    AimdUpdate,
    QosPublish,
    MetricsSample,
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// One issued transaction, complete with its measured delay inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TxRecord {
    pub id: u64,
    pub user_id: u32,
    pub node_id: u32,
    pub created_at: f64,
    pub enqueued_at: f64,
    pub issued_at: f64,
    pub fee_paid: f64,
}

impl TxRecord {
    /// Time from entering the node's pool to the node issuing it.
    pub fn delay(&self) -> f64 {
        self.issued_at - self.enqueued_at
    }
}

/// Per-node state sampled at the metrics interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeSample {
    pub time: f64,
    pub node_id: u32,
    pub ltp_len: usize,
    /// Transactions sitting in this node's scheduler inbox (diagnostic;
    /// not part of the exported series).
    pub inbox_len: usize,
    pub issue_rate: f64,
    pub filtered_rate: f64,
    /// Advertised expected delay, as visible to users at this instant.
    pub adv_delay: f64,
    /// Advertised fee, as visible to users at this instant.
    pub fee: f64,
}

/// Aggregate demand and throughput counted per sampling window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateSample {
    pub time: f64,
    /// Transactions created by users inside the window, deferrals included.
    pub created: u64,
    /// Transactions issued into the ledger inside the window.
    pub issued: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DeferralStats {
    /// Transactions forgone because every node's advertised cost exceeded
    /// the sending user's threshold. Each is counted once; the user's next
    /// attempt is a fresh transaction at its next arrival.
    pub deferred: u64,
}

/// End-of-run population counts; they always satisfy
/// `created = issued + in_ltp + in_scheduler + withheld`. `issued` counts
/// ledger inclusions; the per-transaction records are the node-issuance
/// stream, one step earlier, so `records.len() = issued + in_scheduler`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunTotals {
    pub created: u64,
    pub issued: u64,
    pub in_ltp: u64,
    pub in_scheduler: u64,
    pub withheld: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub config_hash: u64,
    /// Full effective configuration the run executed with, so a result is
    /// self-describing for export and later reruns.
    pub config: NetworkConfig,
    pub reputations: Vec<f64>,
}

/// Everything one run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub records: Vec<TxRecord>,
    pub node_series: Vec<NodeSample>,
    pub rate_series: Vec<RateSample>,
    pub deferrals: DeferralStats,
    pub totals: RunTotals,
    pub meta: RunMeta,
}

struct NodeActor {
    ltp: VecDeque<Transaction>,
    aimd: AimdState,
    filter: SawtoothFilter,
    /// Last published indicator-board entry. Feeds the exported per-node
    /// series; selection reads live state instead (see `live_indicator`).
    indicator: QosIndicator,
    /// Claimed-work backlog at the saturated access layer, in transactions:
    /// the running integral of (rate - share), floored at zero.
    claim: f64,
    rng: ChaCha8Rng,
}

struct UserActor {
    send_rate: f64,
    tradeoff_weight: f64,
    cost_threshold: f64,
    /// Selection distribution for the open-loop policies, fixed per run.
    static_probs: Vec<f64>,
    rng: ChaCha8Rng,
}

struct Sim<'a> {
    cfg: &'a NetworkConfig,
    nodes: Vec<NodeActor>,
    users: Vec<UserActor>,
    /// Per-node scheduler inboxes: issued transactions waiting to be
    /// scheduled into the ledger at the node's reserved share.
    inboxes: Vec<VecDeque<Transaction>>,
    /// Reserved scheduling rate per node: rep_i / Σrep · ν.
    shares: Vec<f64>,
    /// Next service-grid slot index per node; slot k fires at k / share.
    service_slot: Vec<u64>,
    /// A service event is in flight for this node.
    service_pending: Vec<bool>,
    heap: BinaryHeap<Reverse<Event>>,
    seq: u64,
    now: f64,
    aimd_ticks: u64,
    publish_ticks: u64,
    metrics_ticks: u64,
    next_tx_id: u64,
    created: u64,
    /// Transactions forgone because no node met the user's threshold.
    withheld: u64,
    /// Ledger inclusions so far; `records` is ahead of this by the
    /// transactions still sitting in scheduler inboxes.
    scheduled: u64,
    window_created: u64,
    window_issued: u64,
    deferrals: DeferralStats,
    records: Vec<TxRecord>,
    node_series: Vec<NodeSample>,
    rate_series: Vec<RateSample>,
    delay_scratch: Vec<f64>,
    indicator_scratch: Vec<QosIndicator>,
    reputations: Vec<f64>,
}

/// Run one simulation. `seed` overrides `config.rng_seed` so Monte Carlo
/// batches can spread seeds without cloning configs.
pub fn run(config: &NetworkConfig, seed: u64) -> Result<SimResult, ConfigError> {
    config.validate()?;
    let mut sim = Sim::new(config, seed)?;
    sim.execute();
    Ok(sim.finish(seed))
}

/// Run the configured number of Monte Carlo repetitions of a load scenario,
/// seeding run `i` with `rng_seed + i`.
pub fn run_scenario(
    config: &NetworkConfig,
    scenario: Scenario,
) -> Result<Vec<SimResult>, ConfigError> {
    let mut cfg = config.clone();
    cfg.load_fraction = scenario.load_fraction();
    cfg.validate()?;
    let mut results = Vec::with_capacity(cfg.mc_runs);
    for i in 0..cfg.mc_runs {
        let seed = cfg.rng_seed.wrapping_add(i as u64);
        results.push(run(&cfg, seed)?);
    }
    Ok(results)
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a NetworkConfig, seed: u64) -> Result<Self, ConfigError> {
        let reps = generate_reputation(cfg.node_count, cfg.zipf_exponent)?;
        let total_rep = reps.total();
        let shares: Vec<f64> = (0..cfg.node_count)
            .map(|i| reps.get(i) / total_rep * cfg.scheduling_rate)
            .collect();

        let nodes: Vec<NodeActor> = (0..cfg.node_count)
            .map(|i| NodeActor {
                ltp: VecDeque::new(),
                aimd: AimdState::new(&cfg.aimd, reps.get(i), cfg.scheduling_rate),
                filter: SawtoothFilter::new(cfg.filter_window, cfg.aimd.initial_rate),
                indicator: QosIndicator::initial(),
                claim: 0.0,
                rng: rng::stream(seed, rng::ROLE_NODE, i as u64),
            })
            .collect();

        let base_rate = cfg.base_send_rate();
        let static_probs: Vec<f64> = match cfg.policy {
            Policy::Urns => urns_probabilities(cfg.node_count)
                .expect("node_count validated nonzero"),
            Policy::Rbns => rbns_probabilities(reps.as_slice())
                .expect("reputations are strictly positive"),
            _ => Vec::new(),
        };
        let spread = cfg.user.cost_threshold_spread;
        let mut users: Vec<UserActor> = (0..cfg.user_count)
            .map(|m| UserActor {
                send_rate: base_rate,
                tradeoff_weight: cfg.user.tradeoff_weight,
                // Thresholds evenly spaced across the spread band, so under
                // sustained overload the advertised cost prices out exactly
                // the tail of the band instead of gating all users at once.
                cost_threshold: if cfg.user_count > 1 {
                    cfg.user.cost_threshold - spread
                        + 2.0 * spread * m as f64 / (cfg.user_count - 1) as f64
                } else {
                    cfg.user.cost_threshold
                },
                static_probs: static_probs.clone(),
                rng: rng::stream(seed, rng::ROLE_USER, m as u64),
            })
            .collect();
        for o in &cfg.user_overrides {
            let u = &mut users[o.user_id as usize];
            if let Some(w) = o.tradeoff_weight {
                u.tradeoff_weight = w;
            }
            if let Some(c) = o.cost_threshold {
                u.cost_threshold = c;
            }
            if let Some(r) = o.send_rate {
                u.send_rate = r;
            }
        }

        let mut sim = Sim {
            cfg,
            nodes,
            users,
            inboxes: (0..cfg.node_count).map(|_| VecDeque::new()).collect(),
            shares,
            service_slot: alloc::vec![0; cfg.node_count],
            service_pending: alloc::vec![false; cfg.node_count],
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
            aimd_ticks: 0,
            publish_ticks: 0,
            metrics_ticks: 0,
            next_tx_id: 0,
            created: 0,
            withheld: 0,
            scheduled: 0,
            window_created: 0,
            window_issued: 0,
            deferrals: DeferralStats::default(),
            records: Vec::new(),
            node_series: Vec::new(),
            rate_series: Vec::new(),
            delay_scratch: Vec::new(),
            indicator_scratch: Vec::new(),
            reputations: reps.as_slice().to_vec(),
        };

        for m in 0..sim.users.len() {
            let user = &mut sim.users[m];
            let gap = rng::exponential(&mut user.rng, user.send_rate);
            sim.schedule(gap, EventKind::UserArrival { user: m as u32 });
        }
        if cfg.aimd.enabled {
            sim.schedule(cfg.aimd.update_interval, EventKind::AimdUpdate);
        }
        sim.schedule(cfg.qos_publish_interval, EventKind::QosPublish);
        sim.schedule(0.0, EventKind::MetricsSample);
        Ok(sim)
    }

    fn schedule(&mut self, time: f64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Reverse(Event { time, seq, kind }));
    }

    fn execute(&mut self) {
        while let Some(Reverse(ev)) = self.heap.pop() {
            if ev.time > self.cfg.duration {
                break;
            }
            debug_assert!(ev.time >= self.now, "event time went backwards");
            self.now = ev.time;
            match ev.kind {
                EventKind::UserArrival { user } => self.on_arrival(user as usize),
                EventKind::NodeIssue { node } => self.on_node_issue(node as usize),
                EventKind::NodeService { node } => self.on_node_service(node as usize),
                EventKind::AimdUpdate => self.on_aimd_update(),
                EventKind::QosPublish => self.on_qos_publish(),
                EventKind::MetricsSample => self.on_metrics_sample(),
            }
        }
    }

    fn on_arrival(&mut self, m: usize) {
        let user = &mut self.users[m];
        let gap = rng::exponential(&mut user.rng, user.send_rate);
        self.schedule(self.now + gap, EventKind::UserArrival { user: m as u32 });

        let tx = Transaction {
            id: self.next_tx_id,
            user_id: m as u32,
            node_id: u32::MAX,
            created_at: self.now,
            enqueued_at: f64::NAN,
            fee_paid: 0.0,
        };
        self.next_tx_id += 1;
        self.created += 1;
        self.window_created += 1;
        match self.select_node(m) {
            Some(node) => self.enqueue_at_node(node, tx),
            None => {
                // The user forgoes this transaction; its next attempt is its
                // next Poisson arrival. Holding a backlog to replay when a
                // node's cost later dips would dump every priced-out user's
                // pool onto the cheapest node at once, swamping exactly the
                // low-reputation nodes the threshold is meant to protect.
                self.withheld += 1;
            }
        }
    }

    /// A node's QoS indicator computed from its current state. Users read
    /// this directly: selection assumes full knowledge of node statistics,
    /// so a node that crosses a user's threshold stops attracting traffic
    /// immediately. Acting on snapshots published every half second instead
    /// lets a briefly-cheap low-reputation node absorb whole user segments
    /// before the snapshot catches up, which destroys the fee gate's
    /// stabilization under overload.
    fn live_indicator(&self, i: usize) -> QosIndicator {
        let n = &self.nodes[i];
        publish_indicator(
            n.ltp.len(),
            &n.filter,
            n.aimd.rate(),
            &self.cfg.controller,
            self.now,
        )
    }

    /// One policy decision against live node state. `None` means no node is
    /// worth the user's threshold.
    fn select_node(&mut self, m: usize) -> Option<usize> {
        match self.cfg.policy {
            Policy::Urns | Policy::Rbns => {
                let user = &mut self.users[m];
                Some(
                    sample_node(&user.static_probs, &mut user.rng)
                        .expect("static distribution is valid"),
                )
            }
            Policy::Dbns => {
                self.delay_scratch.clear();
                for i in 0..self.nodes.len() {
                    self.delay_scratch.push(self.live_indicator(i).expected_delay);
                }
                let probs = dbns_probabilities(&self.reputations, &self.delay_scratch)
                    .expect("reputations and delays are valid");
                Some(
                    sample_node(&probs, &mut self.users[m].rng)
                        .expect("distribution is normalized"),
                )
            }
            Policy::DbnsPlus => {
                self.indicator_scratch.clear();
                for i in 0..self.nodes.len() {
                    let ind = self.live_indicator(i);
                    self.indicator_scratch.push(ind);
                }
                let input = PolicyInput {
                    reputations: &self.reputations,
                    indicators: &self.indicator_scratch,
                    tradeoff_weight: self.users[m].tradeoff_weight,
                    cost_threshold: self.users[m].cost_threshold,
                };
                match dbns_plus_select(&input, &mut self.users[m].rng)
                    .expect("inputs are valid")
                {
                    Selection::Node(j) => Some(j),
                    Selection::NoEligibleNode => {
                        self.deferrals.deferred += 1;
                        None
                    }
                }
            }
        }
    }

    fn enqueue_at_node(&mut self, node: usize, mut tx: Transaction) {
        tx.node_id = node as u32;
        tx.enqueued_at = self.now;
        tx.fee_paid = self.live_indicator(node).fee;
        let n = &mut self.nodes[node];
        let was_empty = n.ltp.is_empty();
        n.ltp.push_back(tx);
        if was_empty {
            self.schedule_node_issue(node);
        }
    }

    /// Draw the next issue gap at the current rate. The gap then plays out
    /// as drawn: rate changes apply from the next draw. Re-pacing the
    /// remainder on every decrease looks more faithful but lets each
    /// decrease push the pending event further away than the time that
    /// passes between decreases, which can silence a backlogged node
    /// forever.
    fn schedule_node_issue(&mut self, node: usize) {
        let n = &mut self.nodes[node];
        debug_assert!(!n.ltp.is_empty());
        let gap = rng::exponential(&mut n.rng, n.aimd.rate());
        self.schedule(self.now + gap, EventKind::NodeIssue { node: node as u32 });
    }

    fn on_node_issue(&mut self, node: usize) {
        let tx = self.nodes[node]
            .ltp
            .pop_front()
            .expect("issue event implies nonempty pool");
        self.records.push(TxRecord {
            id: tx.id,
            user_id: tx.user_id,
            node_id: tx.node_id,
            created_at: tx.created_at,
            enqueued_at: tx.enqueued_at,
            issued_at: self.now,
            fee_paid: tx.fee_paid,
        });
        self.inboxes[node].push_back(tx);
        if !self.service_pending[node] {
            self.activate_service(node);
        }
        if !self.nodes[node].ltp.is_empty() {
            self.schedule_node_issue(node);
        }
    }

    /// Arm the node's service grid at its first slot strictly after `now`.
    /// The grid (slot k fires at k / share) never moves, so a node cannot
    /// bank unused capacity while its inbox is empty.
    fn activate_service(&mut self, node: usize) {
        let share = self.shares[node];
        let mut slot = (self.now * share).floor() as u64 + 1;
        while (slot as f64) / share < self.now {
            slot += 1; // float round-off pushed the slot into the past
        }
        self.service_slot[node] = slot;
        self.service_pending[node] = true;
        let at = slot as f64 / share;
        self.schedule(at, EventKind::NodeService { node: node as u32 });
    }

    fn on_node_service(&mut self, node: usize) {
        debug_assert!(self.service_pending[node]);
        let tx = self.inboxes[node]
            .pop_front()
            .expect("service event implies nonempty inbox");
        debug_assert_eq!(node as u32, tx.node_id);
        self.scheduled += 1;
        self.window_issued += 1;
        if self.inboxes[node].is_empty() {
            self.service_pending[node] = false;
        } else {
            self.service_slot[node] += 1;
            let at = self.service_slot[node] as f64 / self.shares[node];
            self.schedule(at, EventKind::NodeService { node: node as u32 });
        }
    }

    fn on_aimd_update(&mut self) {
        self.aimd_ticks += 1;
        let h = self.cfg.aimd.update_interval;
        let window = self.cfg.aimd.congestion_window;
        for i in 0..self.nodes.len() {
            let share = self.shares[i];
            let n = &mut self.nodes[i];
            let before = n.aimd.rate();
            // `before` held over the whole elapsed interval: the rate only
            // changes at these ticks.
            n.claim = (n.claim + (before - share) * h).max(0.0);
            let congested = n.claim > window * share;
            let event = n.aimd.tick(congested, self.now);
            let after = n.aimd.rate();
            n.filter.observe(after, event);
            if event == RateEvent::Decreased {
                n.claim = 0.0;
            }
        }
        let next = (self.aimd_ticks + 1) as f64 * self.cfg.aimd.update_interval;
        self.schedule(next, EventKind::AimdUpdate);
    }

    fn on_qos_publish(&mut self) {
        self.publish_ticks += 1;
        for n in &mut self.nodes {
            n.indicator = publish_indicator(
                n.ltp.len(),
                &n.filter,
                n.aimd.rate(),
                &self.cfg.controller,
                self.now,
            );
        }
        let next = (self.publish_ticks + 1) as f64 * self.cfg.qos_publish_interval;
        self.schedule(next, EventKind::QosPublish);
    }

    fn on_metrics_sample(&mut self) {
        self.metrics_ticks += 1;
        for (i, n) in self.nodes.iter().enumerate() {
            debug_assert!(
                self.now - n.indicator.published_at
                    <= self.cfg.qos_publish_interval + 1e-9,
                "stale indicator at t={}",
                self.now
            );
            self.node_series.push(NodeSample {
                time: self.now,
                node_id: i as u32,
                ltp_len: n.ltp.len(),
                inbox_len: self.inboxes[i].len(),
                issue_rate: n.aimd.rate(),
                filtered_rate: n.filter.filtered().unwrap_or_else(|| n.aimd.rate()),
                adv_delay: n.indicator.expected_delay,
                fee: n.indicator.fee,
            });
        }
        self.rate_series.push(RateSample {
            time: self.now,
            created: self.window_created,
            issued: self.window_issued,
        });
        self.window_created = 0;
        self.window_issued = 0;
        debug_assert_eq!(
            self.created,
            self.records.len() as u64 + self.population(),
            "conservation violated at t={}",
            self.now
        );
        let next = self.metrics_ticks as f64 * self.cfg.metrics_interval;
        self.schedule(next, EventKind::MetricsSample);
    }

    /// Created transactions not yet recorded: pool occupancy plus the
    /// forgone ones.
    fn population(&self) -> u64 {
        let in_ltp: usize = self.nodes.iter().map(|n| n.ltp.len()).sum();
        in_ltp as u64 + self.withheld
    }

    fn finish(self, seed: u64) -> SimResult {
        let in_ltp: usize = self.nodes.iter().map(|n| n.ltp.len()).sum();
        let in_scheduler: usize = self.inboxes.iter().map(|q| q.len()).sum();
        let totals = RunTotals {
            created: self.created,
            issued: self.scheduled,
            in_ltp: in_ltp as u64,
            in_scheduler: in_scheduler as u64,
            withheld: self.withheld,
        };
        assert_eq!(
            totals.created,
            totals.issued + totals.in_ltp + totals.in_scheduler + totals.withheld,
            "conservation violated at end of run"
        );
        assert_eq!(
            self.records.len() as u64,
            totals.issued + totals.in_scheduler,
            "issuance records out of step with scheduling"
        );
        SimResult {
            records: self.records,
            node_series: self.node_series,
            rate_series: self.rate_series,
            deferrals: self.deferrals,
            totals,
            meta: RunMeta {
                seed,
                config_hash: self.cfg.stable_hash(),
                config: self.cfg.clone(),
                reputations: self.reputations,
            },
        }
    }
}
