//! Experiment files: one base config fanned out over protocols, injection
//! rates, repetitions and optionally network sizes.

use std::error::Error;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Deserialize;
use wnoc_sim::{rng, run, write_results_csv, MetricsReport, Protocol, ResultRow, SimConfig};

use crate::chart::{latency_throughput_svg, ChartPoint, Series};

fn default_repetitions() -> usize {
    3
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("compare-out")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Template for every point. Channel counts are adapted per protocol,
    /// see [`topology_for`].
    pub base: SimConfig,
    /// Per-node injection rates, strictly ascending.
    pub sweep_rates: Vec<f64>,
    pub protocols: Vec<Protocol>,
    /// Runs per (protocol, rate) with distinct derived seeds.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// When set, the whole comparison repeats per network size, one chart
    /// each; empty means the base size only.
    #[serde(default)]
    pub node_counts: Vec<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    fn validate(&self) -> Result<(), String> {
        self.base.validate().map_err(|e| e.to_string())?;
        if self.protocols.is_empty() {
            return Err("protocols must not be empty".into());
        }
        if self.sweep_rates.is_empty() {
            return Err("sweep_rates must not be empty".into());
        }
        if !self.sweep_rates.windows(2).all(|w| w[0] < w[1]) {
            return Err("sweep_rates must be strictly ascending".into());
        }
        if self.sweep_rates[0] < 0.0 {
            return Err("sweep_rates must be nonnegative".into());
        }
        if self.repetitions == 0 {
            return Err("repetitions must be at least 1".into());
        }
        Ok(())
    }
}

/// The comparisons pair capacities the way the protocols are normally
/// deployed: TR-MAC multiplexes npt transmissions per frequency channel,
/// the baselines get one frequency channel per transmission slot instead.
fn topology_for(protocol: Protocol, base: &SimConfig) -> (usize, usize) {
    match protocol {
        Protocol::TrMac => (base.num_freq_channels, base.npt),
        Protocol::Brs | Protocol::Token => (base.num_freq_channels * base.npt, 1),
    }
}

struct Point {
    cfg: SimConfig,
    rate_idx: usize,
    rep: usize,
}

pub fn cmd_compare(spec_path: PathBuf, out_dir: Option<PathBuf>) -> Result<(), Box<dyn Error>> {
    if !spec_path.exists() {
        return Err(format!("config not found: {}", spec_path.display()).into());
    }
    let text = fs::read_to_string(&spec_path)
        .map_err(|e| format!("reading {}: {e}", spec_path.display()))?;
    let spec: ExperimentSpec =
        toml::from_str(&text).map_err(|e| format!("{}: {e}", spec_path.display()))?;
    spec.validate()?;
    let dir = out_dir.unwrap_or_else(|| spec.output_dir.clone());
    fs::create_dir_all(&dir)?;

    let node_counts = if spec.node_counts.is_empty() {
        vec![spec.base.num_nodes]
    } else {
        spec.node_counts.clone()
    };

    // Grid order fixes CSV row order; seeds depend only on (rate, repetition)
    // so every protocol and network size sees the same draw streams.
    let mut points = Vec::new();
    for &nodes in &node_counts {
        for &protocol in &spec.protocols {
            for (rate_idx, &rate) in spec.sweep_rates.iter().enumerate() {
                for rep in 0..spec.repetitions {
                    let mut cfg = spec.base.clone();
                    cfg.num_nodes = nodes;
                    cfg.protocol = protocol;
                    let (channels, npt) = topology_for(protocol, &spec.base);
                    cfg.num_freq_channels = channels;
                    cfg.npt = npt;
                    cfg.traffic.injection_rate = rate;
                    cfg.seed = rng::derive_seed(
                        spec.base.seed,
                        rng::COMPARE,
                        (rate_idx * spec.repetitions + rep) as u64,
                    );
                    points.push(Point { cfg, rate_idx, rep });
                }
            }
        }
    }

    let outcomes: Vec<(Point, Result<MetricsReport, String>)> = points
        .into_par_iter()
        .map(|p| {
            let result = run(&p.cfg).map_err(|e| e.to_string());
            (p, result)
        })
        .collect();

    let mut failed = 0usize;
    let mut rows = Vec::new();
    for (p, result) in &outcomes {
        match result {
            Ok(report) => rows.push(ResultRow::new(&p.cfg, report.clone())),
            Err(e) => {
                failed += 1;
                eprintln!(
                    "point failed: {} n={} rate={} rep={}: {e}",
                    p.cfg.protocol, p.cfg.num_nodes, p.cfg.traffic.injection_rate, p.rep
                );
            }
        }
    }

    let csv_path = dir.join("results.csv");
    let mut out = Vec::new();
    write_results_csv(&mut out, &rows)?;
    fs::write(&csv_path, out)?;
    println!("{} rows written to {}", rows.len(), csv_path.display());

    for &nodes in &node_counts {
        let mut series = Vec::new();
        for &protocol in &spec.protocols {
            let mut pts = Vec::new();
            for rate_idx in 0..spec.sweep_rates.len() {
                let reps: Vec<&MetricsReport> = outcomes
                    .iter()
                    .filter(|(p, r)| {
                        p.cfg.num_nodes == nodes
                            && p.cfg.protocol == protocol
                            && p.rate_idx == rate_idx
                            && r.is_ok()
                    })
                    .map(|(_, r)| r.as_ref().unwrap())
                    .collect();
                let lats: Vec<f64> = reps.iter().filter_map(|r| r.mean_latency).collect();
                if lats.is_empty() {
                    continue;
                }
                let x = reps.iter().map(|r| r.throughput).sum::<f64>() / reps.len() as f64;
                let y = lats.iter().sum::<f64>() / lats.len() as f64;
                pts.push(ChartPoint {
                    x,
                    y,
                    y_lo: lats.iter().copied().fold(f64::INFINITY, f64::min),
                    y_hi: lats.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                });
            }
            series.push(Series {
                label: protocol.to_string(),
                points: pts,
            });
        }
        let title = format!("{nodes} nodes: mean latency vs delivered throughput");
        let svg = latency_throughput_svg(&title, &series);
        let path = dir.join(format!("compare_{nodes}nodes.svg"));
        fs::write(&path, svg)?;
        println!("chart written to {}", path.display());
    }

    if failed > 0 {
        return Err(format!("{failed} of {} points failed", outcomes.len()).into());
    }
    Ok(())
}
