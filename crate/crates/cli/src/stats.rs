//! Delay statistics over finished runs: histograms, percentiles, and the
//! per-policy summary blocks that feed `summary.json` and the comparison
//! table.

use serde::Serialize;
use unim_core::model::Scenario;
use unim_core::SimResult;

/// Render `x` with `sig` significant digits, in plain decimal notation
/// with trailing zeros trimmed. The output re-parses to a fixed point:
/// `fmt_sig(parse(fmt_sig(x)))` equals `fmt_sig(x)`.
pub fn fmt_sig(x: f64, sig: i32) -> String {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let prec = (sig - 1 - mag).max(0) as usize;
    let mut s = format!("{x:.prec$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// `x` quantized to the exported precision, so serialized JSON shows the
/// same digits as the CSVs.
pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x, 6).parse().expect("fmt_sig emits valid decimals")
}

/// Nearest-rank percentile of an ascending-sorted slice; `p` in (0, 100].
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty sample");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Delay density as fixed-width bin counts over [0, max observed delay].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayHistogram {
    pub bin_width: f64,
    /// Count of delays in [k*bin_width, (k+1)*bin_width).
    pub bins: Vec<u64>,
    pub total: u64,
}

impl DelayHistogram {
    /// Start of the most-populated bin, lowest bin on ties; None when empty.
    pub fn mode(&self) -> Option<f64> {
        let mut best: Option<(usize, u64)> = None;
        for (k, &c) in self.bins.iter().enumerate() {
            if c > 0 && best.map_or(true, |(_, b)| c > b) {
                best = Some((k, c));
            }
        }
        best.map(|(k, _)| k as f64 * self.bin_width)
    }

    /// Probability density per bin; integrates to 1 over the binned range.
    pub fn density(&self) -> Vec<f64> {
        let mass = self.total as f64 * self.bin_width;
        self.bins.iter().map(|&c| c as f64 / mass).collect()
    }
}

pub fn compute_histogram(delays: &[f64], bin_width: f64) -> DelayHistogram {
    assert!(bin_width > 0.0, "bin width must be positive");
    let mut bins: Vec<u64> = Vec::new();
    for &d in delays {
        debug_assert!(d >= 0.0, "negative delay {d}");
        let k = (d / bin_width) as usize;
        if k >= bins.len() {
            bins.resize(k + 1, 0);
        }
        bins[k] += 1;
    }
    DelayHistogram {
        bin_width,
        bins,
        total: delays.len() as u64,
    }
}

/// Per-node aggregates for one policy/scenario block.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeStats {
    pub node_id: u32,
    pub reputation: f64,
    /// Mean pool delay of this node's post-warmup transactions; 0 if none.
    pub mean_delay: f64,
    /// Fraction of all post-warmup transactions this node received.
    pub traffic_share: f64,
    /// Sum of fees paid to this node post-warmup.
    pub fees_collected: f64,
}

/// Pooled post-warmup statistics for one policy under one load scenario.
/// All float fields are quantized to the exported precision, so
/// re-aggregating the same runs reproduces this block field for field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryStats {
    pub policy: String,
    pub scenario: String,
    pub load_fraction: f64,
    pub runs: usize,
    /// Post-warmup transactions pooled across runs.
    pub delay_samples: u64,
    pub mean_delay: f64,
    pub delay_variance: f64,
    pub delay_p50: f64,
    pub delay_p90: f64,
    pub delay_p95: f64,
    pub delay_p99: f64,
    /// Deferred transactions as a fraction of all created ones.
    pub deferred_fraction: f64,
    pub per_node: Vec<NodeStats>,
}

/// Name of the load scenario `lf` corresponds to, or the bare number.
pub fn scenario_label(lf: f64) -> String {
    Scenario::ALL
        .into_iter()
        .find(|s| (s.load_fraction() - lf).abs() < 1e-12)
        .map(|s| s.name().to_string())
        .unwrap_or_else(|| fmt_sig(lf, 6))
}

impl SummaryStats {
    /// Aggregate a Monte Carlo batch that ran one policy on one scenario.
    pub fn from_runs(results: &[SimResult]) -> SummaryStats {
        assert!(!results.is_empty(), "no runs to summarize");
        let cfg = &results[0].meta.config;
        let n = cfg.node_count;

        let mut delays: Vec<f64> = Vec::new();
        let mut node_count = vec![0u64; n];
        let mut node_delay = vec![0.0f64; n];
        let mut node_fees = vec![0.0f64; n];
        let mut created = 0u64;
        let mut deferred = 0u64;
        for r in results {
            assert_eq!(r.meta.config_hash, results[0].meta.config_hash);
            for t in &r.records {
                if t.enqueued_at >= cfg.warmup {
                    delays.push(t.delay());
                    let i = t.node_id as usize;
                    node_count[i] += 1;
                    node_delay[i] += t.delay();
                    node_fees[i] += t.fee_paid;
                }
            }
            created += r.totals.created;
            deferred += r.deferrals.deferred;
        }
        delays.sort_by(f64::total_cmp);

        let total = delays.len() as f64;
        let mean = if delays.is_empty() {
            0.0
        } else {
            delays.iter().sum::<f64>() / total
        };
        let variance = if delays.is_empty() {
            0.0
        } else {
            delays.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / total
        };
        let pct = |p: f64| {
            if delays.is_empty() {
                0.0
            } else {
                round_sig(percentile(&delays, p))
            }
        };

        SummaryStats {
            policy: cfg.policy.name().to_string(),
            scenario: scenario_label(cfg.load_fraction),
            load_fraction: round_sig(cfg.load_fraction),
            runs: results.len(),
            delay_samples: delays.len() as u64,
            mean_delay: round_sig(mean),
            delay_variance: round_sig(variance),
            delay_p50: pct(50.0),
            delay_p90: pct(90.0),
            delay_p95: pct(95.0),
            delay_p99: pct(99.0),
            deferred_fraction: if created == 0 {
                0.0
            } else {
                round_sig(deferred as f64 / created as f64)
            },
            per_node: (0..n)
                .map(|i| NodeStats {
                    node_id: i as u32,
                    reputation: round_sig(results[0].meta.reputations[i]),
                    mean_delay: if node_count[i] == 0 {
                        0.0
                    } else {
                        round_sig(node_delay[i] / node_count[i] as f64)
                    },
                    traffic_share: if delays.is_empty() {
                        0.0
                    } else {
                        round_sig(node_count[i] as f64 / total)
                    },
                    fees_collected: round_sig(node_fees[i]),
                })
                .collect(),
        }
    }
}

/// Fixed-width side-by-side table, one row per summary block.
pub fn compare_table(rows: &[SummaryStats]) -> String {
    let mut s = format!(
        "{:<10} {:>8} {:>5} {:>9} {:>10} {:>12} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
        "policy", "scenario", "runs", "samples", "mean", "variance", "p50", "p90", "p95", "p99",
        "deferred"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<10} {:>8} {:>5} {:>9} {:>10} {:>12} {:>8} {:>8} {:>8} {:>8} {:>9}\n",
            r.policy,
            r.scenario,
            r.runs,
            r.delay_samples,
            fmt_sig(r.mean_delay, 6),
            fmt_sig(r.delay_variance, 6),
            fmt_sig(r.delay_p50, 6),
            fmt_sig(r.delay_p90, 6),
            fmt_sig(r.delay_p95, 6),
            fmt_sig(r.delay_p99, 6),
            fmt_sig(r.deferred_fraction, 6),
        ));
    }
    s
}
