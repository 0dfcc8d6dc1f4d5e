//! Node-side QoS estimation: the max-min sawtooth filter that turns the
//! oscillating AIMD rate into a usable throughput estimate, and the
//! proportional fee controller driven by the estimated pool delay.

use alloc::collections::VecDeque;

use crate::access::RateEvent;
use crate::model::{ControllerParams, QosIndicator};

/// Tracks AIMD sawtooth cycles. A cycle runs minimum-to-minimum: each
/// multiplicative decrease closes the open cycle (its maximum is the
/// pre-decrease rate) and opens the next one at the post-decrease rate.
/// The filter output is the mean of the last `capacity` cycle midpoints
/// (min + max) / 2.
#[derive(Clone, Debug, PartialEq)]
pub struct SawtoothFilter {
    window: VecDeque<f64>,
    capacity: usize,
    /// Minimum of the open cycle: the rate right after the last decrease
    /// (or the initial rate before any decrease happened).
    pending_min: f64,
    /// Rate after the most recent update, i.e. the pre-decrease rate when
    /// the next decrease arrives.
    previous_rate: f64,
}

impl SawtoothFilter {
    pub fn new(capacity: usize, initial_rate: f64) -> Self {
        SawtoothFilter {
            window: VecDeque::with_capacity(capacity),
            capacity,
            pending_min: initial_rate,
            previous_rate: initial_rate,
        }
    }

    /// Feed one AIMD update outcome; `rate` is the post-update rate.
    pub fn observe(&mut self, rate: f64, event: RateEvent) {
        if event == RateEvent::Decreased {
            let average = (self.pending_min + self.previous_rate) / 2.0;
            if self.window.len() == self.capacity {
                self.window.pop_front();
            }
            self.window.push_back(average);
            self.pending_min = rate;
        }
        self.previous_rate = rate;
    }

    /// Mean of the stored cycle averages; `None` until one cycle completed.
    pub fn filtered(&self) -> Option<f64> {
        if self.window.is_empty() {
            return None;
        }
        Some(self.window.iter().sum::<f64>() / self.window.len() as f64)
    }

    pub fn completed_cycles(&self) -> usize {
        self.window.len()
    }
}

/// Expected time for a pool of `backlog` transactions to drain at `rate`.
pub fn expected_delay(backlog: usize, rate: f64) -> f64 {
    backlog as f64 / rate
}

/// Proportional access fee: zero while the expected delay sits at or below
/// the setpoint, then climbing with the excess.
pub fn fee(expected_delay: f64, ctl: &ControllerParams) -> f64 {
    (ctl.gain * (expected_delay - ctl.setpoint)).max(0.0)
}

/// Build the indicator a node advertises at `now`. The throughput estimate
/// is the filtered rate, falling back to the instantaneous rate until the
/// first sawtooth cycle completes.
pub fn publish_indicator(
    backlog: usize,
    filter: &SawtoothFilter,
    current_rate: f64,
    ctl: &ControllerParams,
    now: f64,
) -> QosIndicator {
    let rate = filter.filtered().unwrap_or(current_rate);
    let delay = expected_delay(backlog, rate);
    QosIndicator {
        expected_delay: delay,
        fee: fee(delay, ctl),
        published_at: now,
    }
}
