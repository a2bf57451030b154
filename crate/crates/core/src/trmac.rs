//! TR-MAC per-node state machine.
//!
//! A node holds a bounded FIFO of packets. At every epoch boundary it either
//! counts down backoff, starts the head-of-queue packet on an admissible
//! channel, or defers when every channel is saturated. The outcome of an
//! epoch arrives at the next boundary: a clean ACK dequeues the packet,
//! anything else keeps it at the head and backs off exponentially.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ChannelId, NodeId, Packet};
use crate::phy::{AckKind, ChannelOccupancy, StartAttempt};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Idle,
    /// Backlogged but every channel was at its cap at the last boundary;
    /// retries every boundary without a backoff penalty.
    WaitChannel,
    InEpoch,
    Backoff {
        remaining_epochs: u64,
    },
}

#[derive(Debug)]
pub struct NodeState {
    pub node: NodeId,
    pub queue: VecDeque<Packet>,
    pub phase: Phase,
    pub collision_count: u32,
    rng: ChaCha8Rng,
}

#[derive(Debug, Error)]
#[error("ack outcome applied to node {node} outside an epoch (phase {phase:?})")]
pub struct OutcomeFault {
    pub node: NodeId,
    pub phase: Phase,
}

impl NodeState {
    pub fn new(node: NodeId, master_seed: u64) -> Self {
        NodeState {
            node,
            queue: VecDeque::new(),
            phase: Phase::Idle,
            collision_count: 0,
            rng: rng::stream(master_seed, rng::MAC, node as u64),
        }
    }

    /// Returns false (and drops nothing itself) when the queue is full.
    pub fn enqueue(&mut self, packet: Packet, capacity: usize) -> bool {
        if self.queue.len() >= capacity {
            return false;
        }
        self.queue.push_back(packet);
        true
    }

    /// One epoch-boundary step. Called exactly once per boundary, ascending
    /// node id, with the occupancy reflecting already-admitted attempts.
    pub fn step_boundary(
        &mut self,
        occupancy: &ChannelOccupancy,
        num_freq_channels: usize,
    ) -> Option<StartAttempt> {
        if let Phase::Backoff { remaining_epochs } = &mut self.phase {
            if *remaining_epochs > 0 {
                *remaining_epochs -= 1;
                return None;
            }
        }
        let Some(head) = self.queue.front() else {
            self.phase = Phase::Idle;
            return None;
        };
        let open: Vec<ChannelId> = (0..num_freq_channels)
            .filter(|&c| occupancy.admit(c))
            .collect();
        if open.is_empty() {
            self.phase = Phase::WaitChannel;
            return None;
        }
        let channel = if open.len() == 1 {
            open[0]
        } else {
            open[self.rng.random_range(0..open.len())]
        };
        self.phase = Phase::InEpoch;
        Some(StartAttempt {
            tx: self.node,
            rx: head.dst,
            channel,
            packet: head.clone(),
        })
    }

    /// Applies the epoch verdict. A delivered packet is handed back so the
    /// caller can stamp the delivery cycle; the queue is popped only here.
    pub fn apply_outcome(
        &mut self,
        kind: AckKind,
        backoff_max_exponent: u32,
    ) -> Result<Option<Packet>, OutcomeFault> {
        if self.phase != Phase::InEpoch {
            return Err(OutcomeFault {
                node: self.node,
                phase: self.phase,
            });
        }
        match kind {
            AckKind::AckOk => {
                self.collision_count = 0;
                self.phase = Phase::Idle;
                Ok(Some(self.queue.pop_front().expect("attempt had a head packet")))
            }
            AckKind::NoAck | AckKind::ErroneousAck => {
                self.collision_count = (self.collision_count + 1).min(backoff_max_exponent);
                self.phase = Phase::Backoff {
                    remaining_epochs: backoff_epochs(
                        self.collision_count,
                        backoff_max_exponent,
                        &mut self.rng,
                    ),
                };
                Ok(None)
            }
        }
    }
}

/// Binary exponential backoff: uniform over [0, 2^min(cc, max) - 1] epochs.
pub fn backoff_epochs(collision_count: u32, max_exponent: u32, rng: &mut impl Rng) -> u64 {
    debug_assert!(collision_count >= 1);
    let exp = collision_count.min(max_exponent);
    rng.random_range(0..(1u64 << exp))
}
