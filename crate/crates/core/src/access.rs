//! Node-side ledger access control: an AIMD issue-rate setter per node and
//! the shared deficit-round-robin scheduler that holds aggregate throughput
//! at capacity while splitting it by reputation among backlogged nodes.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::model::{AimdParams, ReputationVector, Transaction};

/// Outcome of one AIMD update, fed to the sawtooth filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateEvent {
    Increased,
    Decreased,
    /// Congested but still inside the decrease cooldown.
    Held,
}

/// Additive-increase / multiplicative-decrease issue-rate state of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct AimdState {
    rate: f64,
    /// Additive increase per update: the configured per-second climb slope,
    /// scaled by the node's reputation and the update interval, so the climb
    /// speed does not depend on how often the controller runs.
    step: f64,
    beta: f64,
    floor: f64,
    cap: f64,
    cooldown: f64,
    last_decrease_at: f64,
}

impl AimdState {
    /// `cap` is the scheduler capacity; no node may pace itself faster.
    pub fn new(params: &AimdParams, reputation: f64, cap: f64) -> Self {
        AimdState {
            rate: params.initial_rate.clamp(params.rate_floor, cap),
            step: params.additive_step * reputation * params.update_interval,
            beta: params.multiplicative_factor,
            floor: params.rate_floor,
            cap,
            cooldown: params.decrease_cooldown,
            last_decrease_at: f64::NEG_INFINITY,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// One control update. Increases are applied on every uncongested
    /// update; decreases are skipped while the cooldown since the last
    /// decrease has not elapsed (a persistent congestion flag must not
    /// collapse the rate to the floor within a single drain episode).
    pub fn tick(&mut self, congested: bool, now: f64) -> RateEvent {
        if !congested {
            self.rate = (self.rate + self.step).min(self.cap);
            RateEvent::Increased
        } else if now - self.last_decrease_at >= self.cooldown - 1e-12 {
            self.rate = (self.rate * self.beta).max(self.floor);
            self.last_decrease_at = now;
            RateEvent::Decreased
        } else {
            RateEvent::Held
        }
    }
}

/// Congestion stand-in for the node's own view of scheduler pressure:
/// strictly more queued work than the threshold.
pub fn congestion_signal(backlog: usize, threshold: usize) -> bool {
    backlog > threshold
}

/// Shared scheduler: one FIFO inbox per node, served one transaction per
/// slot (slots at the capacity rate) by deficit round robin with quanta
/// proportional to reputation.
#[derive(Clone, Debug)]
pub struct DrrScheduler {
    service_interval: f64,
    quantum: Vec<f64>,
    queues: Vec<VecDeque<Transaction>>,
    deficit: Vec<f64>,
    cursor: usize,
    queued: usize,
}

impl DrrScheduler {
    pub fn new(reputations: &ReputationVector, capacity: f64) -> Self {
        let n = reputations.len();
        DrrScheduler {
            service_interval: 1.0 / capacity,
            quantum: reputations.as_slice().to_vec(),
            queues: (0..n).map(|_| VecDeque::new()).collect(),
            deficit: alloc::vec![0.0; n],
            cursor: 0,
            queued: 0,
        }
    }

    /// Seconds between service slots (inverse capacity).
    pub fn service_interval(&self) -> f64 {
        self.service_interval
    }

    pub fn enqueue(&mut self, node: usize, tx: Transaction) {
        self.queues[node].push_back(tx);
        self.queued += 1;
    }

    /// Scheduler-inbox length of one node, the congestion signal input.
    pub fn backlog(&self, node: usize) -> usize {
        self.queues[node].len()
    }

    /// Transactions sitting in all inboxes.
    pub fn queued(&self) -> usize {
        self.queued
    }

    pub fn deficits(&self) -> &[f64] {
        &self.deficit
    }

    /// Serve at most one transaction for this slot. Returns `None` only
    /// when every inbox is empty (the scheduler is work-conserving).
    ///
    /// Classic DRR with unit service cost: a visited queue is served while
    /// its deficit covers the cost, and only earns its quantum when the
    /// deficit runs out; an empty queue forfeits its deficit.
    pub fn service_step(&mut self) -> Option<(usize, Transaction)> {
        if self.queued == 0 {
            return None;
        }
        loop {
            let q = self.cursor;
            if self.queues[q].is_empty() {
                self.deficit[q] = 0.0;
                self.cursor = (self.cursor + 1) % self.queues.len();
                continue;
            }
            if self.deficit[q] >= 1.0 {
                self.deficit[q] -= 1.0;
                let tx = self.queues[q].pop_front().expect("queue checked nonempty");
                self.queued -= 1;
                if self.queues[q].is_empty() {
                    self.deficit[q] = 0.0;
                }
                return Some((q, tx));
            }
            self.deficit[q] += self.quantum[q];
            self.cursor = (self.cursor + 1) % self.queues.len();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_reputation;

    fn tx(id: u64) -> Transaction {
        Transaction {
            id,
            user_id: 0,
            node_id: 0,
            created_at: 0.0,
            enqueued_at: 0.0,
            fee_paid: 0.0,
        }
    }

    fn params() -> AimdParams {
        AimdParams::default()
    }

    #[test]
    fn uncongested_update_adds_reputation_scaled_step() {
        let mut a = AimdState::new(&params(), 1.0, 50.0);
        // rate 2.0 after some climbing; drive it there first.
        while a.rate() < 2.0 - 1e-9 {
            a.tick(false, 0.0);
        }
        let before = a.rate();
        assert_eq!(a.tick(false, 0.1), RateEvent::Increased);
        // 0.075 tx/s per second of climb, applied over one 0.1 s update.
        assert!((a.rate() - (before + 0.075 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn congested_update_multiplies_by_beta() {
        let mut a = AimdState::new(&params(), 1.0, 50.0);
        while a.rate() < 2.0 - 1e-9 {
            a.tick(false, 0.0);
        }
        let before = a.rate();
        assert_eq!(a.tick(true, 10.0), RateEvent::Decreased);
        assert!((a.rate() - before * 0.7).abs() < 1e-12);
    }

    #[test]
    fn decrease_respects_floor() {
        let mut p = params();
        p.initial_rate = 0.06;
        let mut a = AimdState::new(&p, 1.0, 50.0);
        a.tick(true, 0.0);
        assert!((a.rate() - 0.05).abs() < 1e-12);
        // Repeated congestion cannot push below the floor.
        a.tick(true, 10.0);
        assert!((a.rate() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rate_never_exceeds_cap() {
        let mut a = AimdState::new(&params(), 10.0, 50.0);
        for k in 0..10_000 {
            a.tick(false, k as f64 * 0.1);
            assert!(a.rate() <= 50.0 + 1e-12);
        }
        assert!((a.rate() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn cooldown_blocks_back_to_back_decreases() {
        let mut p = params();
        p.decrease_cooldown = 1.0;
        p.initial_rate = 10.0;
        let mut a = AimdState::new(&p, 1.0, 50.0);
        assert_eq!(a.tick(true, 0.0), RateEvent::Decreased);
        assert_eq!(a.tick(true, 0.1), RateEvent::Held);
        assert!((a.rate() - 7.0).abs() < 1e-12);
        assert_eq!(a.tick(true, 1.0), RateEvent::Decreased);
        assert!((a.rate() - 4.9).abs() < 1e-12);
    }

    #[test]
    fn sawtooth_shape_between_decreases() {
        // Congest every 30th update: rate must climb strictly between
        // decreases and drop by exactly beta at each one.
        let mut a = AimdState::new(&params(), 2.0, 50.0);
        let mut prev = a.rate();
        for k in 1..=3_000 {
            let now = k as f64 * 0.1;
            let congested = k % 30 == 0;
            let before = a.rate();
            match a.tick(congested, now) {
                RateEvent::Increased => assert!(a.rate() >= prev),
                RateEvent::Decreased => assert!((a.rate() - before * 0.7).abs() < 1e-12),
                RateEvent::Held => unreachable!("cooldown is one interval"),
            }
            prev = a.rate();
        }
    }

    #[test]
    fn congestion_signal_is_strict() {
        assert!(!congestion_signal(0, 10));
        assert!(!congestion_signal(10, 10));
        assert!(congestion_signal(11, 10));
    }

    #[test]
    fn drr_two_to_one_split_over_three_thousand_slots() {
        // Reputation ratio 2:1, normalized to mean 1.
        let reps = ReputationVector::new(alloc::vec![4.0 / 3.0, 2.0 / 3.0]).unwrap();
        let mut s = DrrScheduler::new(&reps, 50.0);
        let mut id = 0;
        let mut served = [0u64; 2];
        for _ in 0..3_000 {
            // Keep both inboxes permanently backlogged.
            for node in 0..2 {
                while s.backlog(node) < 4 {
                    s.enqueue(node, tx(id));
                    id += 1;
                }
            }
            let (node, _) = s.service_step().unwrap();
            served[node as usize] += 1;
        }
        // Expected split 2000/1000 within 2%.
        assert!(
            (served[0] as f64 - 2000.0).abs() <= 40.0,
            "served {served:?}"
        );
        assert!(
            (served[1] as f64 - 1000.0).abs() <= 20.0,
            "served {served:?}"
        );
    }

    #[test]
    fn drr_shares_track_reputation_for_backlogged_nodes() {
        // Pseudo-random reputation spreads, all queues kept backlogged:
        // long-run service shares must match reputation shares within 5%.
        let reps = generate_reputation(8, 1.1).unwrap();
        let mut s = DrrScheduler::new(&reps, 50.0);
        let mut id = 0;
        let slots = 20_000;
        let mut served = alloc::vec![0u64; 8];
        for _ in 0..slots {
            for node in 0..8 {
                while s.backlog(node) < 4 {
                    s.enqueue(node, tx(id));
                    id += 1;
                }
            }
            let (node, _) = s.service_step().unwrap();
            served[node] += 1;
            for d in s.deficits() {
                assert!(*d >= 0.0);
            }
        }
        for node in 0..8 {
            let share = served[node] as f64 / slots as f64;
            let fair = reps.get(node) / reps.total();
            assert!(
                (share - fair).abs() / fair < 0.05,
                "node {node}: share {share}, fair {fair}"
            );
        }
    }

    #[test]
    fn drr_single_backlogged_node_takes_full_capacity() {
        let reps = generate_reputation(5, 0.9).unwrap();
        let mut s = DrrScheduler::new(&reps, 50.0);
        // Only the lowest-reputation node has work.
        for id in 0..100 {
            s.enqueue(4, tx(id));
        }
        for _ in 0..100 {
            let (node, _) = s.service_step().unwrap();
            assert_eq!(node, 4);
        }
        assert_eq!(s.queued(), 0);
        assert!(s.service_step().is_none());
    }

    #[test]
    fn drr_is_work_conserving_and_fifo_per_node() {
        let reps = ReputationVector::new(alloc::vec![1.0, 1.0]).unwrap();
        let mut s = DrrScheduler::new(&reps, 10.0);
        for id in 0..6 {
            s.enqueue((id % 2) as usize, tx(id));
        }
        let mut seen = [Vec::new(), Vec::new()];
        while let Some((node, t)) = s.service_step() {
            seen[node].push(t.id);
        }
        assert_eq!(seen[0], alloc::vec![0, 2, 4]);
        assert_eq!(seen[1], alloc::vec![1, 3, 5]);
    }
}
