//! Stable on-disk formats for finished runs: per-run CSVs plus batch-level
//! JSON summaries. Reruns with the same configuration and seed produce
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::EchoConfig;
use crate::stats::{fmt_sig, round_sig, scenario_label, SummaryStats};
use unim_core::engine::TxRecord;
use unim_core::SimResult;

fn sig(x: f64) -> String {
    fmt_sig(x, 6)
}

/// Issued-transaction stream, one row per record, sorted by issue time.
pub fn transactions_csv(r: &SimResult) -> String {
    let mut rows: Vec<&TxRecord> = r.records.iter().collect();
    rows.sort_by(|a, b| a.issued_at.total_cmp(&b.issued_at).then(a.id.cmp(&b.id)));
    let mut s = String::from("user_id,node_id,created_at,enqueued_at,issued_at,delay,fee_paid\n");
    for t in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            t.user_id,
            t.node_id,
            sig(t.created_at),
            sig(t.enqueued_at),
            sig(t.issued_at),
            sig(t.delay()),
            sig(t.fee_paid),
        );
    }
    s
}

/// Per-node time series, one row per (sample time, node). The trailing
/// reputation column repeats each node's fixed weight so downstream plots
/// can style traces without joining against the metadata.
pub fn node_series_csv(r: &SimResult) -> String {
    let mut s =
        String::from("time,node_id,ltp_len,issue_rate,filtered_rate,adv_delay,fee,reputation\n");
    for n in &r.node_series {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            sig(n.time),
            n.node_id,
            n.ltp_len,
            sig(n.issue_rate),
            sig(n.filtered_rate),
            sig(n.adv_delay),
            sig(n.fee),
            sig(r.meta.reputations[n.node_id as usize]),
        );
    }
    s
}

#[derive(Serialize)]
struct RunMetaFile {
    artifact_version: &'static str,
    policy: String,
    scenario: String,
    load_fraction: f64,
    base_seed: u64,
    seeds: Vec<u64>,
    config_hash: String,
    reputations: Vec<f64>,
    config: EchoConfig,
}

fn run_meta_json(results: &[SimResult]) -> String {
    let meta = &results[0].meta;
    let file = RunMetaFile {
        artifact_version: env!("CARGO_PKG_VERSION"),
        policy: meta.config.policy.name().to_string(),
        scenario: scenario_label(meta.config.load_fraction),
        load_fraction: round_sig(meta.config.load_fraction),
        base_seed: meta.seed,
        seeds: results.iter().map(|r| r.meta.seed).collect(),
        config_hash: format!("{:016x}", meta.config_hash),
        reputations: meta.reputations.iter().map(|&w| round_sig(w)).collect(),
        config: EchoConfig::from(&meta.config),
    };
    serde_json::to_string_pretty(&file).expect("meta serializes")
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))
}

/// Write a Monte Carlo batch under `out`: `run_XX/transactions.csv` and
/// `run_XX/node_series.csv` per run, with the pooled `summary.json` and
/// `run_meta.json` beside them.
pub fn export(results: &[SimResult], out: &Path) -> Result<()> {
    assert!(!results.is_empty(), "nothing to export");
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    for (i, r) in results.iter().enumerate() {
        let dir = out.join(format!("run_{i:02}"));
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        write(&dir.join("transactions.csv"), &transactions_csv(r))?;
        write(&dir.join("node_series.csv"), &node_series_csv(r))?;
    }
    let summary = serde_json::to_string_pretty(&SummaryStats::from_runs(results))
        .expect("summary serializes");
    write(&out.join("summary.json"), &(summary + "\n"))?;
    write(&out.join("run_meta.json"), &(run_meta_json(results) + "\n"))?;
    Ok(())
}

/// Write the side-by-side policy comparison as `compare.json` under `out`.
pub fn write_compare(rows: &[SummaryStats], out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let body = serde_json::to_string_pretty(rows).expect("summary serializes");
    write(&out.join("compare.json"), &(body + "\n"))
}
