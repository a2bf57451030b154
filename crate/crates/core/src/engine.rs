//! The cycle-driven simulation loop.
//!
//! Every cycle: new arrivals enter their source queues, the protocol runtime
//! advances, and the concurrency sample is taken. TR-MAC only acts on epoch
//! boundaries; the baselines act every cycle.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baselines::{BrsRuntime, TokenRuntime};
use crate::config::{ConfigError, Cycle, HotspotAxis, NodeId, Packet, Protocol, SimConfig};
use crate::metrics::{Collector, MetricsReport};
use crate::phy::{arbitrate_epoch, AckKind, AckOutcome, ChannelOccupancy, StartAttempt};
use crate::rng;
use crate::trace::{TraceEvent, TraceSink};
use crate::traffic::{Arrival, DestinationSampler, SourceProcess, SpatialWeights, TrafficError};
use crate::trmac::NodeState;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    /// A protocol invariant broke mid-run; always a bug, never a workload.
    #[error("integrity violation at cycle {cycle}: {detail}")]
    Integrity { cycle: Cycle, detail: String },
    #[error("{0}")]
    Sweep(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Arrivals

enum ArrivalSource {
    Synthetic {
        sources: Vec<SourceProcess>,
        rngs: Vec<ChaCha8Rng>,
        sampler: DestinationSampler,
    },
    Replay {
        arrivals: Vec<Arrival>,
        pos: usize,
    },
}

impl ArrivalSource {
    fn synthetic(cfg: &SimConfig) -> Result<Self, TrafficError> {
        let n = cfg.num_nodes;
        let mut wrng = rng::stream(cfg.seed, rng::WEIGHTS, 0);
        let weights = SpatialWeights::generate(n, cfg.traffic.sigma, &mut wrng)?;
        // The hotspot axis picks where the skew lands: weighted destinations
        // under uniform emission, or weighted per-node emission rates with
        // uniform destinations.
        let (rates, sampler) = match cfg.traffic.hotspot_axis {
            HotspotAxis::Destinations => (
                vec![cfg.traffic.injection_rate; n],
                DestinationSampler::new(&weights),
            ),
            HotspotAxis::Sources => (
                weights
                    .values()
                    .iter()
                    .map(|&w| cfg.traffic.injection_rate * n as f64 * w)
                    .collect(),
                DestinationSampler::new(&SpatialWeights::uniform(n)),
            ),
        };
        let mut rngs: Vec<ChaCha8Rng> = (0..n)
            .map(|i| rng::stream(cfg.seed, rng::TRAFFIC, i as u64))
            .collect();
        let sources = rates
            .iter()
            .zip(&mut rngs)
            .map(|(&r, rng)| SourceProcess::new(r, cfg.traffic.hurst, rng))
            .collect();
        Ok(ArrivalSource::Synthetic {
            sources,
            rngs,
            sampler,
        })
    }

    fn step(&mut self, cycle: Cycle, out: &mut Vec<(NodeId, NodeId)>) {
        match self {
            ArrivalSource::Synthetic {
                sources,
                rngs,
                sampler,
            } => {
                for (i, (s, rng)) in sources.iter_mut().zip(rngs.iter_mut()).enumerate() {
                    if s.step(rng) {
                        out.push((i, sampler.draw(i, rng)));
                    }
                }
            }
            ArrivalSource::Replay { arrivals, pos } => {
                while *pos < arrivals.len() && arrivals[*pos].cycle == cycle {
                    out.push((arrivals[*pos].src, arrivals[*pos].dst));
                    *pos += 1;
                }
            }
        }
    }
}

fn validate_replay(arrivals: &[Arrival], cfg: &SimConfig) -> Result<(), TrafficError> {
    let mut last = 0;
    for (i, a) in arrivals.iter().enumerate() {
        let fail = |reason: String| TrafficError::Replay { line: i + 2, reason };
        if a.cycle < last {
            return Err(fail(format!("cycles not sorted: {} after {last}", a.cycle)));
        }
        if a.cycle >= cfg.total_cycles() {
            return Err(fail(format!(
                "cycle {} outside the run window [0, {})",
                a.cycle,
                cfg.total_cycles()
            )));
        }
        if a.src >= cfg.num_nodes || a.dst >= cfg.num_nodes {
            return Err(fail(format!(
                "node out of range (num_nodes {})",
                cfg.num_nodes
            )));
        }
        if a.src == a.dst {
            return Err(fail(format!("src == dst ({})", a.src)));
        }
        last = a.cycle;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// TR-MAC runtime

struct PendingEpoch {
    attempts: Vec<StartAttempt>,
    outcomes: Vec<AckOutcome>,
}

struct TrMacRuntime {
    nodes: Vec<NodeState>,
    occupancy: ChannelOccupancy,
    pending: Option<PendingEpoch>,
    phy_rng: ChaCha8Rng,
}

impl TrMacRuntime {
    fn new(cfg: &SimConfig) -> Self {
        TrMacRuntime {
            nodes: (0..cfg.num_nodes).map(|i| NodeState::new(i, cfg.seed)).collect(),
            occupancy: ChannelOccupancy::new(cfg.num_freq_channels, cfg.npt),
            pending: None,
            phy_rng: rng::stream(cfg.seed, rng::PHY, 0),
        }
    }

    /// Epoch boundary: settle the finished epoch, then admit new starts.
    /// Settling first lets a node that just delivered contend again at this
    /// same boundary.
    fn boundary(
        &mut self,
        cycle: Cycle,
        cfg: &SimConfig,
        col: &mut Collector,
        trace: &mut TraceSink,
    ) -> Result<(), SimError> {
        if let Some(p) = self.pending.take() {
            for (a, o) in p.attempts.iter().zip(&p.outcomes) {
                let ev = match o.kind {
                    AckKind::AckOk => TraceEvent::AckOk,
                    AckKind::NoAck => TraceEvent::NoAck,
                    AckKind::ErroneousAck => TraceEvent::ErrAck,
                };
                trace.row(cycle, ev, a.tx, Some(a.rx), Some(a.channel), Some(a.packet.id))?;
                match self.nodes[a.tx].apply_outcome(o.kind, cfg.backoff_max_exponent) {
                    Ok(Some(mut pkt)) => {
                        pkt.delivered_at = Some(cycle);
                        col.on_deliver(cycle, pkt.created_at);
                        trace.row(
                            cycle,
                            TraceEvent::Deliver,
                            pkt.dst,
                            Some(pkt.src),
                            Some(a.channel),
                            Some(pkt.id),
                        )?;
                    }
                    Ok(None) => col.on_collisions(cycle, 1),
                    Err(f) => {
                        return Err(SimError::Integrity {
                            cycle,
                            detail: f.to_string(),
                        })
                    }
                }
            }
            self.occupancy.reset();
        }

        let mut attempts = Vec::new();
        for i in 0..self.nodes.len() {
            if let Some(a) = self.nodes[i].step_boundary(&self.occupancy, cfg.num_freq_channels) {
                self.occupancy.occupy(a.channel);
                trace.row(cycle, TraceEvent::Start, a.tx, Some(a.rx), Some(a.channel), Some(a.packet.id))?;
                attempts.push(a);
            }
        }
        if attempts.is_empty() {
            return Ok(());
        }
        col.on_attempts(cycle, attempts.len() as u64);
        let entropy = self.phy_rng.random::<u64>();
        let outcome = arbitrate_epoch(&attempts, cfg, entropy).map_err(|e| SimError::Integrity {
            cycle,
            detail: e.to_string(),
        })?;
        self.pending = Some(PendingEpoch {
            attempts,
            outcomes: outcome.outcomes,
        });
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Protocol dispatch

enum Runtime {
    TrMac(TrMacRuntime),
    Brs(BrsRuntime),
    Token(TokenRuntime),
}

impl Runtime {
    fn new(cfg: &SimConfig) -> Self {
        match cfg.protocol {
            Protocol::TrMac => Runtime::TrMac(TrMacRuntime::new(cfg)),
            Protocol::Brs => Runtime::Brs(BrsRuntime::new(cfg)),
            Protocol::Token => Runtime::Token(TokenRuntime::new(cfg)),
        }
    }

    fn inject(&mut self, packet: Packet, capacity: usize) -> bool {
        match self {
            Runtime::TrMac(rt) => rt.nodes[packet.src].enqueue(packet, capacity),
            Runtime::Brs(rt) => rt.inject(packet, capacity),
            Runtime::Token(rt) => rt.inject(packet, capacity),
        }
    }

    fn step(
        &mut self,
        cycle: Cycle,
        cfg: &SimConfig,
        col: &mut Collector,
        trace: &mut TraceSink,
    ) -> Result<(), SimError> {
        match self {
            Runtime::TrMac(rt) => {
                if cycle % cfg.epoch_len() == 0 {
                    rt.boundary(cycle, cfg, col, trace)?;
                }
                Ok(())
            }
            Runtime::Brs(rt) => Ok(rt.step_cycle(cycle, col, trace)?),
            Runtime::Token(rt) => Ok(rt.step_cycle(cycle, col, trace)?),
        }
    }

    fn active_tx(&self, cycle: Cycle) -> u64 {
        match self {
            Runtime::TrMac(rt) => rt.pending.as_ref().map_or(0, |p| p.attempts.len() as u64),
            Runtime::Brs(rt) => rt.active_tx(cycle),
            Runtime::Token(rt) => rt.active_tx(cycle),
        }
    }

    fn queued_total(&self) -> u64 {
        match self {
            Runtime::TrMac(rt) => rt.nodes.iter().map(|n| n.queue.len() as u64).sum(),
            Runtime::Brs(rt) => rt.queued_total(),
            Runtime::Token(rt) => rt.queued_total(),
        }
    }
}

// ---------------------------------------------------------------------------
// Entry points

/// The general entry point: optional event-trace output, optional arrival
/// replay. The convenience wrappers below cover the common corners.
pub fn simulate(
    cfg: &SimConfig,
    trace_out: Option<&mut dyn Write>,
    replay: Option<Vec<Arrival>>,
) -> Result<MetricsReport, SimError> {
    cfg.validate()?;
    let mut trace = match trace_out {
        Some(w) => TraceSink::new(w)?,
        None => TraceSink::disabled(),
    };
    let mut arrivals = match replay {
        Some(list) => {
            validate_replay(&list, cfg)?;
            ArrivalSource::Replay { arrivals: list, pos: 0 }
        }
        None => ArrivalSource::synthetic(cfg)?,
    };
    let mut col = Collector::new(cfg);
    let mut runtime = Runtime::new(cfg);
    let mut next_id = 0u64;
    let mut buf: Vec<(NodeId, NodeId)> = Vec::new();
    for cycle in 0..cfg.total_cycles() {
        buf.clear();
        arrivals.step(cycle, &mut buf);
        for &(src, dst) in &buf {
            let packet = Packet {
                id: next_id,
                src,
                dst,
                created_at: cycle,
                delivered_at: None,
            };
            next_id += 1;
            let id = packet.id;
            col.on_inject(cycle);
            trace.row(cycle, TraceEvent::Inject, src, Some(dst), None, Some(id))?;
            if !runtime.inject(packet, cfg.queue_capacity) {
                col.on_drop(cycle);
                trace.row(cycle, TraceEvent::Drop, src, Some(dst), None, Some(id))?;
            }
        }
        runtime.step(cycle, cfg, &mut col, &mut trace)?;
        col.on_concurrency(cycle, runtime.active_tx(cycle));
    }
    Ok(col.finish(cfg, runtime.queued_total()))
}

pub fn run(cfg: &SimConfig) -> Result<MetricsReport, SimError> {
    simulate(cfg, None, None)
}

/// Same as [`run`] but writes the event trace CSV to `out`.
pub fn run_with_trace(cfg: &SimConfig, out: &mut dyn Write) -> Result<MetricsReport, SimError> {
    simulate(cfg, Some(out), None)
}

/// Replays an explicit arrival list instead of the synthetic workload.
pub fn run_replay(cfg: &SimConfig, arrivals: Vec<Arrival>) -> Result<MetricsReport, SimError> {
    simulate(cfg, None, Some(arrivals))
}
