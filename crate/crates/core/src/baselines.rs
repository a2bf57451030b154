//! Baseline MAC protocols: broadcast-reliability-sensing (BRS) and token
//! passing. Both run per-cycle (no epoch alignment) on statically assigned
//! channels (node mod num_freq_channels).

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use crate::config::{assigned_channel, ChannelId, Cycle, NodeId, Packet, SimConfig};
use crate::metrics::Collector;
use crate::rng;
use crate::trace::{TraceEvent, TraceSink};
use crate::trmac::backoff_epochs;

// ---------------------------------------------------------------------------
// BRS

struct BrsNode {
    queue: VecDeque<Packet>,
    collision_count: u32,
    backoff_until: Cycle,
    channel: ChannelId,
    rng: ChaCha8Rng,
}

struct Flight {
    tx: NodeId,
    end: Cycle,
}

struct PendingNack {
    due: Cycle,
    tx: NodeId,
    rx: NodeId,
    channel: ChannelId,
    packet_id: u64,
}

/// Slotted carrier-sense protocol. Contention happens on a global grid of
/// preamble + data cycles: at each slot boundary every backlogged node whose
/// backoff has expired starts on its assigned channel. A lone starter owns
/// the slot and delivers at its end. Two or more starters collide: detection
/// completes after the preamble, one NACK cycle follows, and each loser backs
/// off a uniform number of whole slots (binary exponential) counted from the
/// NACK end, rejoining at the next boundary after that.
pub struct BrsRuntime {
    nodes: Vec<BrsNode>,
    busy_until: Vec<Cycle>,
    inflight: Vec<Option<Flight>>,
    pending_nacks: VecDeque<PendingNack>,
    preamble: u64,
    slot: u64,
    max_exp: u32,
}

pub const BRS_NACK_CYCLES: u64 = 1;

impl BrsRuntime {
    pub fn new(cfg: &SimConfig) -> Self {
        let c = cfg.num_freq_channels;
        let nodes = (0..cfg.num_nodes)
            .map(|i| BrsNode {
                queue: VecDeque::new(),
                collision_count: 0,
                backoff_until: 0,
                channel: assigned_channel(i, c),
                rng: rng::stream(cfg.seed, rng::MAC, i as u64),
            })
            .collect();
        BrsRuntime {
            nodes,
            busy_until: vec![0; c],
            inflight: (0..c).map(|_| None).collect(),
            pending_nacks: VecDeque::new(),
            preamble: cfg.preamble_cycles,
            slot: cfg.preamble_cycles + cfg.data_cycles,
            max_exp: cfg.backoff_max_exponent,
        }
    }

    pub fn inject(&mut self, packet: Packet, capacity: usize) -> bool {
        let q = &mut self.nodes[packet.src].queue;
        if q.len() >= capacity {
            return false;
        }
        q.push_back(packet);
        true
    }

    pub fn queued_total(&self) -> u64 {
        self.nodes.iter().map(|n| n.queue.len() as u64).sum()
    }

    pub fn step_cycle(
        &mut self,
        cycle: Cycle,
        col: &mut Collector,
        trace: &mut TraceSink,
    ) -> std::io::Result<()> {
        // completed transmissions deliver before new contention is resolved,
        // so the finishing node can contend again in the same cycle
        for c in 0..self.inflight.len() {
            let done = matches!(&self.inflight[c], Some(f) if f.end == cycle);
            if done {
                let f = self.inflight[c].take().unwrap();
                let node = &mut self.nodes[f.tx];
                let mut p = node.queue.pop_front().expect("flight without a packet");
                node.collision_count = 0;
                p.delivered_at = Some(cycle);
                col.on_deliver(cycle, p.created_at);
                trace.row(cycle, TraceEvent::Deliver, p.dst, Some(p.src), Some(c), Some(p.id))?;
            }
        }

        while matches!(self.pending_nacks.front(), Some(p) if p.due == cycle) {
            let p = self.pending_nacks.pop_front().unwrap();
            trace.row(cycle, TraceEvent::Nack, p.tx, Some(p.rx), Some(p.channel), Some(p.packet_id))?;
        }

        if cycle % self.slot != 0 {
            return Ok(());
        }
        let mut contenders: Vec<Vec<NodeId>> = vec![Vec::new(); self.busy_until.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.queue.is_empty()
                && cycle >= node.backoff_until
                && cycle >= self.busy_until[node.channel]
            {
                contenders[node.channel].push(i);
            }
        }
        for (c, group) in contenders.into_iter().enumerate() {
            match group.len() {
                0 => {}
                1 => {
                    let tx = group[0];
                    let p = self.nodes[tx].queue.front().unwrap();
                    trace.row(cycle, TraceEvent::Start, tx, Some(p.dst), Some(c), Some(p.id))?;
                    col.on_attempts(cycle, 1);
                    self.inflight[c] = Some(Flight { tx, end: cycle + self.slot });
                    self.busy_until[c] = cycle + self.slot;
                }
                k => {
                    col.on_attempts(cycle, k as u64);
                    col.on_collisions(cycle, k as u64);
                    let nack_end = cycle + self.preamble + BRS_NACK_CYCLES;
                    for &tx in &group {
                        let (dst, id) = {
                            let p = self.nodes[tx].queue.front().unwrap();
                            (p.dst, p.id)
                        };
                        trace.row(cycle, TraceEvent::Start, tx, Some(dst), Some(c), Some(id))?;
                        self.pending_nacks.push_back(PendingNack {
                            due: cycle + self.preamble,
                            tx,
                            rx: dst,
                            channel: c,
                            packet_id: id,
                        });
                        let node = &mut self.nodes[tx];
                        node.collision_count = (node.collision_count + 1).min(self.max_exp);
                        let draw = backoff_epochs(node.collision_count, self.max_exp, &mut node.rng);
                        node.backoff_until = nack_end + draw * self.slot;
                    }
                    self.busy_until[c] = nack_end;
                }
            }
        }
        Ok(())
    }

    /// Transmissions occupying a channel this cycle. Collided starts abort at
    /// the preamble and never occupy their slot, so they are not counted.
    pub fn active_tx(&self, cycle: Cycle) -> u64 {
        self.inflight
            .iter()
            .flatten()
            .map(|f| u64::from(cycle < f.end))
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Token passing

pub fn token_ring_of(node: NodeId, num_channels: usize) -> (ChannelId, usize) {
    (node % num_channels, node / num_channels)
}

pub fn build_rings(num_nodes: usize, num_channels: usize) -> Vec<Vec<NodeId>> {
    let mut rings = vec![Vec::new(); num_channels];
    for node in 0..num_nodes {
        let (ring, _) = token_ring_of(node, num_channels);
        rings[ring].push(node);
    }
    rings
}

enum TokenPhase {
    Parked,
    Arrive(Cycle),
    Transmit { end: Cycle },
}

/// One token ring: members share a channel and the token visits them in
/// position order. A holder with traffic transmits (preamble + data), then
/// the pass itself costs pass_cost_cycles; an idle holder passes immediately
/// at the same cost. Single ownership of the channel means no collisions.
pub struct TokenRing {
    channel: ChannelId,
    members: Vec<NodeId>,
    holder: usize,
    phase: TokenPhase,
    tx_cycles: u64,
    pass_cost: u64,
}

impl TokenRing {
    pub fn new(channel: ChannelId, members: Vec<NodeId>, tx_cycles: u64, pass_cost: u64) -> Self {
        let phase = if members.is_empty() {
            TokenPhase::Parked
        } else {
            TokenPhase::Arrive(0)
        };
        TokenRing {
            channel,
            members,
            holder: 0,
            phase,
            tx_cycles,
            pass_cost,
        }
    }

    pub fn holder_node(&self) -> Option<NodeId> {
        self.members.get(self.holder).copied()
    }

    fn pass(&mut self, cycle: Cycle, trace: &mut TraceSink) -> std::io::Result<()> {
        let from = self.members[self.holder];
        self.holder = (self.holder + 1) % self.members.len();
        let to = self.members[self.holder];
        trace.row(cycle, TraceEvent::TokenPass, from, Some(to), Some(self.channel), None)?;
        self.phase = TokenPhase::Arrive(cycle + self.pass_cost);
        Ok(())
    }

    pub fn advance(
        &mut self,
        cycle: Cycle,
        queues: &mut [VecDeque<Packet>],
        col: &mut Collector,
        trace: &mut TraceSink,
    ) -> std::io::Result<()> {
        match self.phase {
            TokenPhase::Parked => Ok(()),
            TokenPhase::Arrive(at) if at == cycle => {
                let node = self.members[self.holder];
                if let Some(p) = queues[node].front() {
                    trace.row(cycle, TraceEvent::Start, node, Some(p.dst), Some(self.channel), Some(p.id))?;
                    col.on_attempts(cycle, 1);
                    self.phase = TokenPhase::Transmit { end: cycle + self.tx_cycles };
                    Ok(())
                } else {
                    self.pass(cycle, trace)
                }
            }
            TokenPhase::Transmit { end } if end == cycle => {
                let node = self.members[self.holder];
                let mut p = queues[node].pop_front().expect("transmit without a packet");
                p.delivered_at = Some(cycle);
                col.on_deliver(cycle, p.created_at);
                trace.row(cycle, TraceEvent::Deliver, p.dst, Some(p.src), Some(self.channel), Some(p.id))?;
                self.pass(cycle, trace)
            }
            _ => Ok(()),
        }
    }

    pub fn active(&self, cycle: Cycle) -> u64 {
        match self.phase {
            TokenPhase::Transmit { end } => u64::from(cycle < end),
            _ => 0,
        }
    }
}

pub struct TokenRuntime {
    queues: Vec<VecDeque<Packet>>,
    rings: Vec<TokenRing>,
}

impl TokenRuntime {
    pub fn new(cfg: &SimConfig) -> Self {
        let tx_cycles = cfg.preamble_cycles + cfg.data_cycles;
        let rings = build_rings(cfg.num_nodes, cfg.num_freq_channels)
            .into_iter()
            .enumerate()
            .map(|(c, members)| TokenRing::new(c, members, tx_cycles, 1))
            .collect();
        TokenRuntime {
            queues: (0..cfg.num_nodes).map(|_| VecDeque::new()).collect(),
            rings,
        }
    }

    pub fn inject(&mut self, packet: Packet, capacity: usize) -> bool {
        let q = &mut self.queues[packet.src];
        if q.len() >= capacity {
            return false;
        }
        q.push_back(packet);
        true
    }

    pub fn queued_total(&self) -> u64 {
        self.queues.iter().map(|q| q.len() as u64).sum()
    }

    pub fn step_cycle(
        &mut self,
        cycle: Cycle,
        col: &mut Collector,
        trace: &mut TraceSink,
    ) -> std::io::Result<()> {
        for ring in &mut self.rings {
            ring.advance(cycle, &mut self.queues, col, trace)?;
        }
        Ok(())
    }

    pub fn active_tx(&self, cycle: Cycle) -> u64 {
        self.rings.iter().map(|r| r.active(cycle)).sum()
    }
}
