//! Measurement-window statistics, rate sweeps, and the results CSV.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::config::{Cycle, SimConfig};
use crate::engine::{run, SimError};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    /// Configured per-node injection rate.
    pub offered_load: f64,
    /// Deliveries inside the measurement window.
    pub delivered: u64,
    /// Queue-overflow drops inside the measurement window.
    pub dropped: u64,
    /// Mean creation-to-delivery latency in cycles, over packets created in
    /// the window. Absent when nothing was delivered.
    pub mean_latency: Option<f64>,
    /// 99th percentile latency (nearest rank), same population as the mean.
    pub p99_latency: Option<f64>,
    /// Delivered packets per cycle over the measurement window.
    pub throughput: f64,
    /// Mean number of simultaneously active transmissions, counting every
    /// cycle of each transmission's window.
    pub mean_concurrency: f64,
    /// mean_concurrency x link rate.
    pub aggregate_gbps: f64,
    /// Failed attempts per attempt (NO_ACK/ERR_ACK for TR-MAC, NACK for BRS).
    pub collision_rate: f64,
    // Whole-run accounting, warmup included, for conservation checks.
    pub injected_total: u64,
    pub delivered_total: u64,
    pub dropped_total: u64,
    pub queued_end: u64,
}

/// Accumulates events during a run and reduces them to a [`MetricsReport`].
#[derive(Debug)]
pub struct Collector {
    window_start: Cycle,
    window_end: Cycle,
    latencies: Vec<u64>,
    delivered_w: u64,
    dropped_w: u64,
    attempts_w: u64,
    collisions_w: u64,
    concurrency_cycles: u64,
    injected_total: u64,
    delivered_total: u64,
    dropped_total: u64,
}

impl Collector {
    pub fn new(cfg: &SimConfig) -> Self {
        Collector {
            window_start: cfg.warmup_cycles,
            window_end: cfg.warmup_cycles + cfg.measure_cycles,
            latencies: Vec::new(),
            delivered_w: 0,
            dropped_w: 0,
            attempts_w: 0,
            collisions_w: 0,
            concurrency_cycles: 0,
            injected_total: 0,
            delivered_total: 0,
            dropped_total: 0,
        }
    }

    fn in_window(&self, cycle: Cycle) -> bool {
        cycle >= self.window_start && cycle < self.window_end
    }

    pub fn on_inject(&mut self, _cycle: Cycle) {
        self.injected_total += 1;
    }

    pub fn on_drop(&mut self, cycle: Cycle) {
        self.dropped_total += 1;
        if self.in_window(cycle) {
            self.dropped_w += 1;
        }
    }

    pub fn on_deliver(&mut self, cycle: Cycle, created_at: Cycle) {
        self.delivered_total += 1;
        if self.in_window(cycle) {
            self.delivered_w += 1;
        }
        if self.in_window(created_at) {
            self.latencies.push(cycle - created_at);
        }
    }

    pub fn on_attempts(&mut self, cycle: Cycle, count: u64) {
        if self.in_window(cycle) {
            self.attempts_w += count;
        }
    }

    pub fn on_collisions(&mut self, cycle: Cycle, count: u64) {
        if self.in_window(cycle) {
            self.collisions_w += count;
        }
    }

    /// Number of transmissions in flight this cycle, sampled once per cycle.
    pub fn on_concurrency(&mut self, cycle: Cycle, active: u64) {
        if self.in_window(cycle) {
            self.concurrency_cycles += active;
        }
    }

    pub fn finish(mut self, cfg: &SimConfig, queued_end: u64) -> MetricsReport {
        self.latencies.sort_unstable();
        let (mean, p99) = if self.latencies.is_empty() {
            (None, None)
        } else {
            let n = self.latencies.len();
            let sum: u64 = self.latencies.iter().sum();
            let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
            (
                Some(sum as f64 / n as f64),
                Some(self.latencies[rank - 1] as f64),
            )
        };
        let measure = cfg.measure_cycles as f64;
        let mean_concurrency = self.concurrency_cycles as f64 / measure;
        MetricsReport {
            offered_load: cfg.traffic.injection_rate,
            delivered: self.delivered_w,
            dropped: self.dropped_w,
            mean_latency: mean,
            p99_latency: p99,
            throughput: self.delivered_w as f64 / measure,
            mean_concurrency,
            aggregate_gbps: aggregate_concurrency_gbps(mean_concurrency, cfg.link_rate_gbps),
            collision_rate: if self.attempts_w == 0 {
                0.0
            } else {
                self.collisions_w as f64 / self.attempts_w as f64
            },
            injected_total: self.injected_total,
            delivered_total: self.delivered_total,
            dropped_total: self.dropped_total,
            queued_end,
        }
    }
}

fn aggregate_concurrency_gbps(mean_concurrency: f64, link_rate_gbps: f64) -> f64 {
    mean_concurrency * link_rate_gbps
}

/// Aggregate bandwidth: every active transmission carries one full link rate.
pub fn aggregate_gbps(report: &MetricsReport, cfg: &SimConfig) -> f64 {
    aggregate_concurrency_gbps(report.mean_concurrency, cfg.link_rate_gbps)
}

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub rate: f64,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Runs the base config once per rate, ascending. Each point gets a seed
/// derived from (base seed, point index), so results do not depend on
/// execution order and stay paired across protocol variants.
pub fn sweep(base: &SimConfig, rates: &[f64]) -> Result<Vec<SweepPoint>, SimError> {
    if rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::Sweep(
            "sweep rates must be strictly ascending".into(),
        ));
    }
    rates
        .par_iter()
        .enumerate()
        .map(|(i, &rate)| {
            let mut cfg = base.clone();
            cfg.traffic.injection_rate = rate;
            cfg.seed = rng::derive_seed(base.seed, rng::SWEEP, i as u64);
            let report = run(&cfg)?;
            Ok(SweepPoint {
                rate,
                seed: cfg.seed,
                report,
            })
        })
        .collect()
}

/// Highest delivered throughput on the curve; 0 for an empty curve.
pub fn saturation_point(curve: &[SweepPoint]) -> f64 {
    curve
        .iter()
        .map(|p| p.report.throughput)
        .fold(0.0, f64::max)
}

pub const RESULTS_HEADER: &str = "protocol,nodes,channels,npt,rate,throughput,\
mean_latency_cycles,p99_latency_cycles,aggregate_gbps,collision_rate,dropped";

#[derive(Clone, Debug)]
pub struct ResultRow {
    pub protocol: crate::config::Protocol,
    pub nodes: usize,
    pub channels: usize,
    pub npt: usize,
    pub rate: f64,
    pub report: MetricsReport,
}

impl ResultRow {
    pub fn new(cfg: &SimConfig, report: MetricsReport) -> Self {
        ResultRow {
            protocol: cfg.protocol,
            nodes: cfg.num_nodes,
            channels: cfg.num_freq_channels,
            npt: cfg.npt,
            rate: cfg.traffic.injection_rate,
            report,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results_csv<W: Write>(out: &mut W, rows: &[ResultRow]) -> io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.protocol,
            r.nodes,
            r.channels,
            r.npt,
            r.rate,
            r.report.throughput,
            fmt_opt(r.report.mean_latency),
            fmt_opt(r.report.p99_latency),
            r.report.aggregate_gbps,
            r.report.collision_rate,
            r.report.dropped,
        )?;
    }
    Ok(())
}
