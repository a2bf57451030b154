//! Command-line front end: single runs, rate sweeps, event traces and
//! multi-protocol comparisons with SVG charts. Every output is a pure
//! function of (config, seed), so reruns are byte-identical.

mod chart;
mod experiment;

use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wnoc_sim::traffic::parse_arrival_csv;
use wnoc_sim::{
    simulate, sweep, write_results_csv, MetricsReport, Protocol, ResultRow, SimConfig,
};

#[derive(Parser)]
#[command(
    name = "wnoc-sim",
    version,
    about = "Cycle-driven simulator of MAC protocols for in-package wireless networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment, print a summary and write a one-row results CSV.
    Run(RunArgs),
    /// Run the same config across several injection rates.
    Sweep(SweepArgs),
    /// Run once and write the per-event trace.
    Trace(TraceArgs),
    /// Run every protocol/rate/repetition in an experiment file and render
    /// latency-vs-throughput charts.
    Compare(CompareArgs),
}

/// One-for-one config field overrides, applied after the file is loaded.
#[derive(Args)]
struct Overrides {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Injection rate in packets per node per cycle.
    #[arg(long)]
    rate: Option<f64>,
    /// Parallel transmissions admitted per frequency channel.
    #[arg(long)]
    npt: Option<usize>,
    /// Network size.
    #[arg(long)]
    nodes: Option<usize>,
    /// Frequency channel count.
    #[arg(long)]
    channels: Option<usize>,
    /// Protocol: TRMAC, BRS or TOKEN.
    #[arg(long)]
    protocol: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut SimConfig) -> Result<(), Box<dyn Error>> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.rate {
            cfg.traffic.injection_rate = r;
        }
        if let Some(n) = self.npt {
            cfg.npt = n;
        }
        if let Some(n) = self.nodes {
            cfg.num_nodes = n;
        }
        if let Some(c) = self.channels {
            cfg.num_freq_channels = c;
        }
        if let Some(p) = &self.protocol {
            cfg.protocol = parse_protocol(p)?;
        }
        cfg.validate()?;
        Ok(())
    }
}

fn parse_protocol(s: &str) -> Result<Protocol, Box<dyn Error>> {
    match s.to_ascii_uppercase().as_str() {
        "TRMAC" | "TR-MAC" => Ok(Protocol::TrMac),
        "BRS" => Ok(Protocol::Brs),
        "TOKEN" => Ok(Protocol::Token),
        other => Err(format!("unknown protocol {other:?} (expected TRMAC, BRS or TOKEN)").into()),
    }
}

#[derive(Args)]
struct RunArgs {
    /// Simulation config (TOML).
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Results CSV destination.
    #[arg(long, default_value = "results.csv")]
    output: PathBuf,
    /// Also write the event trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Replay arrivals from a cycle,src,dst CSV instead of synthetic traffic.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Additionally report latencies in nanoseconds at this clock.
    #[arg(long)]
    clock_ghz: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Simulation config (TOML); its injection rate is replaced per point.
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Ascending injection rates, comma separated.
    #[arg(long, required = true, value_delimiter = ',', num_args = 1..)]
    rates: Vec<f64>,
    /// Results CSV destination, one row per rate.
    #[arg(long, default_value = "sweep.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    /// Simulation config (TOML).
    config: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
    /// Trace CSV destination.
    #[arg(long, default_value = "trace.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment file (TOML): base config plus protocols, rates, repetitions.
    spec: PathBuf,
    /// Override the experiment file's output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_thread_pool() {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Trace(a) => cmd_trace(a),
        Cmd::Compare(a) => experiment::cmd_compare(a.spec, a.out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// WNOC_SIM_THREADS bounds the worker pool; point seeds are derived from the
/// point index, so parallelism never changes results.
fn init_thread_pool() -> Result<(), Box<dyn Error>> {
    let Ok(raw) = std::env::var("WNOC_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("WNOC_SIM_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("WNOC_SIM_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("thread pool: {e}").into())
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<SimConfig, Box<dyn Error>> {
    if !path.exists() {
        return Err(format!("config not found: {}", path.display()).into());
    }
    let text = fs::read_to_string(path)
        .map_err(|e| format!("reading {}: {e}", path.display()))?;
    let mut cfg = SimConfig::from_toml_str(&text)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Result<(), Box<dyn Error>> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let replay = match &a.replay {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("reading {}: {e}", path.display()))?;
            Some(parse_arrival_csv(&text, cfg.num_nodes, cfg.total_cycles())?)
        }
        None => None,
    };
    let mut trace_file = match &a.trace {
        Some(path) => Some(fs::File::create(path)?),
        None => None,
    };
    let report = simulate(
        &cfg,
        trace_file.as_mut().map(|f| f as &mut dyn std::io::Write),
        replay,
    )?;

    let mut out = Vec::new();
    write_results_csv(&mut out, &[ResultRow::new(&cfg, report.clone())])?;
    fs::write(&a.output, out)?;
    print_summary(&cfg, &report, a.clock_ghz);
    println!("results written to {}", a.output.display());
    if let Some(t) = &a.trace {
        println!("trace written to {}", t.display());
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Box<dyn Error>> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let points = sweep(&cfg, &a.rates)?;
    let rows: Vec<ResultRow> = points
        .into_iter()
        .map(|p| {
            let mut point_cfg = cfg.clone();
            point_cfg.traffic.injection_rate = p.rate;
            point_cfg.seed = p.seed;
            ResultRow::new(&point_cfg, p.report)
        })
        .collect();
    let mut out = Vec::new();
    write_results_csv(&mut out, &rows)?;
    fs::write(&a.output, out)?;
    println!("{} points written to {}", rows.len(), a.output.display());
    Ok(())
}

fn cmd_trace(a: TraceArgs) -> Result<(), Box<dyn Error>> {
    let cfg = load_config(&a.config, &a.overrides)?;
    let mut file = fs::File::create(&a.output)?;
    let report = simulate(&cfg, Some(&mut file), None)?;
    print_summary(&cfg, &report, None);
    println!("trace written to {}", a.output.display());
    Ok(())
}

fn print_summary(cfg: &SimConfig, r: &MetricsReport, clock_ghz: Option<f64>) {
    println!(
        "{} | {} nodes, {} channel(s), npt {}, seed {}",
        cfg.protocol, cfg.num_nodes, cfg.num_freq_channels, cfg.npt, cfg.seed
    );
    println!(
        "offered {:.6} pkt/node/cycle over {} measured cycles",
        r.offered_load, cfg.measure_cycles
    );
    let in_ns = |cycles: f64| match clock_ghz {
        Some(g) if g > 0.0 => format!(" ({:.2} ns at {g} GHz)", cycles / g),
        _ => String::new(),
    };
    match (r.mean_latency, r.p99_latency) {
        (Some(mean), Some(p99)) => {
            println!("mean latency {:.2} cycles{}", mean, in_ns(mean));
            println!("p99 latency {:.2} cycles{}", p99, in_ns(p99));
        }
        _ => println!("no packets delivered in the measurement window"),
    }
    println!(
        "throughput {:.4} pkt/cycle, aggregate {:.1} Gbps, collision rate {:.4}",
        r.throughput, r.aggregate_gbps, r.collision_rate
    );
    println!(
        "window delivered {}, dropped {}; whole run injected {} = delivered {} + dropped {} + queued {}",
        r.delivered, r.dropped, r.injected_total, r.delivered_total, r.dropped_total, r.queued_end
    );
}
