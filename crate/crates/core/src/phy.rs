//! Epoch arbitration: preamble decoding, ACK energy routing, ACK classification.
//!
//! Model summary. All transmissions in an epoch start at the same boundary.
//! Each receiver radio decodes the superposition of preambles addressed to it:
//! exactly one preamble decodes correctly; two or more garble into a random
//! wrong address; a node that is itself transmitting hears nothing. Each
//! decode answers with one ACK quantum aimed at whatever address it decoded.
//! A transmitter then reads its own channel: one quantum is a clean ACK, zero
//! is silence, two or more superpose into an over-threshold burst it cannot
//! attribute, so it counts as garbled.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::config::{ChannelId, NodeId, Packet, SimConfig};
use crate::rng;

/// ACK quanta at or above this superposition count read as one garbled burst.
pub const ERRONEOUS_ACK_QUANTA: u32 = 2;

#[derive(Clone, Debug)]
pub struct StartAttempt {
    pub tx: NodeId,
    pub rx: NodeId,
    pub channel: ChannelId,
    pub packet: Packet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeKind {
    Correct {
        tx: NodeId,
    },
    /// Garbled decode. `decoded_addr` is None when every in-range address is
    /// excluded (tiny networks); the ACK then lands on nobody.
    Erroneous {
        decoded_addr: Option<NodeId>,
    },
    Silent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeResult {
    pub rx: NodeId,
    pub kind: DecodeKind,
}

impl DecodeResult {
    /// Where this receiver's ACK quantum goes, if anywhere.
    pub fn ack_target(&self) -> Option<NodeId> {
        match self.kind {
            DecodeKind::Correct { tx } => Some(tx),
            DecodeKind::Erroneous { decoded_addr } => decoded_addr,
            DecodeKind::Silent => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AckKind {
    AckOk,
    NoAck,
    ErroneousAck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AckOutcome {
    pub tx: NodeId,
    pub kind: AckKind,
}

/// Per-channel count of transmissions admitted into the current epoch.
/// Doubles as the busy-tone registry: a slot is free while count < npt.
#[derive(Clone, Debug)]
pub struct ChannelOccupancy {
    counts: Vec<u32>,
    npt: u32,
}

impl ChannelOccupancy {
    pub fn new(num_freq_channels: usize, npt: usize) -> Self {
        ChannelOccupancy {
            counts: vec![0; num_freq_channels],
            npt: npt as u32,
        }
    }

    pub fn admit(&self, channel: ChannelId) -> bool {
        self.counts[channel] < self.npt
    }

    pub fn occupy(&mut self, channel: ChannelId) {
        debug_assert!(self.admit(channel));
        self.counts[channel] += 1;
    }

    pub fn count(&self, channel: ChannelId) -> u32 {
        self.counts[channel]
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn reset(&mut self) {
        self.counts.fill(0);
    }
}

/// Epoch-wide facts every per-channel decode needs.
#[derive(Clone, Debug)]
pub struct EpochContext {
    pub num_nodes: usize,
    /// Nodes transmitting on any channel this epoch (half duplex: they hear nothing).
    pub transmitters: BTreeSet<NodeId>,
    /// Receivers forced silent because they are targeted on >= 2 distinct
    /// channels and the config models a single-stream receiver.
    pub cross_silenced: BTreeSet<NodeId>,
    /// Transmitters that will get no genuine ACK this epoch (their rx is
    /// contended, transmitting, or cross-silenced). Garbled decodes never
    /// resolve to these addresses, so a collision is always seen as one.
    pub colliding: BTreeSet<NodeId>,
}

impl EpochContext {
    pub fn from_attempts(
        attempts: &[StartAttempt],
        num_nodes: usize,
        multi_channel_rx: bool,
    ) -> Self {
        let transmitters: BTreeSet<NodeId> = attempts.iter().map(|a| a.tx).collect();

        let mut per_target: BTreeMap<(ChannelId, NodeId), u32> = BTreeMap::new();
        let mut rx_channels: BTreeMap<NodeId, BTreeSet<ChannelId>> = BTreeMap::new();
        for a in attempts {
            *per_target.entry((a.channel, a.rx)).or_insert(0) += 1;
            rx_channels.entry(a.rx).or_default().insert(a.channel);
        }

        let cross_silenced: BTreeSet<NodeId> = if multi_channel_rx {
            BTreeSet::new()
        } else {
            rx_channels
                .iter()
                .filter(|(_, chs)| chs.len() >= 2)
                .map(|(rx, _)| *rx)
                .collect()
        };

        let colliding: BTreeSet<NodeId> = attempts
            .iter()
            .filter(|a| {
                per_target[&(a.channel, a.rx)] >= 2
                    || transmitters.contains(&a.rx)
                    || cross_silenced.contains(&a.rx)
            })
            .map(|a| a.tx)
            .collect();

        EpochContext {
            num_nodes,
            transmitters,
            cross_silenced,
            colliding,
        }
    }
}

/// Resolves what each targeted receiver on one channel decodes.
/// One result per distinct rx, in ascending rx order.
pub fn decode_preambles(
    channel_attempts: &[StartAttempt],
    ctx: &EpochContext,
    entropy: u64,
) -> Vec<DecodeResult> {
    let mut per_rx: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for a in channel_attempts {
        per_rx.entry(a.rx).or_default().push(a.tx);
    }

    per_rx
        .into_iter()
        .map(|(rx, txs)| {
            let kind = if ctx.transmitters.contains(&rx) || ctx.cross_silenced.contains(&rx) {
                DecodeKind::Silent
            } else if txs.len() >= 2 {
                DecodeKind::Erroneous {
                    decoded_addr: draw_erroneous_addr(ctx, rx, entropy),
                }
            } else {
                DecodeKind::Correct { tx: txs[0] }
            };
            DecodeResult { rx, kind }
        })
        .collect()
}

/// Uniform over addresses that are neither the receiver itself nor any
/// colliding transmitter. Keyed by (entropy, rx) so the draw depends only on
/// the epoch and the receiver, never on channel processing order.
fn draw_erroneous_addr(ctx: &EpochContext, rx: NodeId, entropy: u64) -> Option<NodeId> {
    let candidates: Vec<NodeId> = (0..ctx.num_nodes)
        .filter(|n| *n != rx && !ctx.colliding.contains(n))
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let mut rng = rng::stream(entropy, rng::DECODE, rx as u64);
    Some(candidates[rng.random_range(0..candidates.len())])
}

/// Sums ACK quanta per addressed node for one channel's decodes.
pub fn route_acks(decodes: &[DecodeResult]) -> BTreeMap<NodeId, u32> {
    let mut quanta = BTreeMap::new();
    for d in decodes {
        if let Some(target) = d.ack_target() {
            *quanta.entry(target).or_insert(0) += 1;
        }
    }
    quanta
}

/// What a node concludes from the ACK energy on its channel. Nodes that are
/// not awaiting an ACK discard stray quanta.
pub fn classify_ack(quanta: u32, awaiting: bool) -> Option<AckKind> {
    if !awaiting {
        return None;
    }
    Some(if quanta == 0 {
        AckKind::NoAck
    } else if quanta < ERRONEOUS_ACK_QUANTA {
        AckKind::AckOk
    } else {
        AckKind::ErroneousAck
    })
}

#[derive(Debug, Error)]
#[error("channel {channel} carries {count} attempts, exceeding npt {npt}")]
pub struct NptExceeded {
    pub channel: ChannelId,
    pub count: usize,
    pub npt: usize,
}

#[derive(Clone, Debug)]
pub struct EpochOutcome {
    /// One outcome per attempt, in the order the attempts were given.
    pub outcomes: Vec<AckOutcome>,
    /// Packets whose attempt classified ACK_OK; delivered at epoch end.
    pub delivered: Vec<Packet>,
}

/// Resolves one epoch across all frequency channels. Channels are orthogonal:
/// preambles and ACKs only interact within a channel, while half-duplex state
/// (who is transmitting at all) is global.
pub fn arbitrate_epoch(
    attempts: &[StartAttempt],
    cfg: &SimConfig,
    entropy: u64,
) -> Result<EpochOutcome, NptExceeded> {
    let mut by_channel: BTreeMap<ChannelId, Vec<usize>> = BTreeMap::new();
    for (i, a) in attempts.iter().enumerate() {
        by_channel.entry(a.channel).or_default().push(i);
    }
    for (&channel, idxs) in &by_channel {
        if idxs.len() > cfg.npt {
            return Err(NptExceeded {
                channel,
                count: idxs.len(),
                npt: cfg.npt,
            });
        }
    }

    let ctx = EpochContext::from_attempts(attempts, cfg.num_nodes, cfg.multi_channel_rx);
    let mut outcomes: Vec<Option<AckOutcome>> = vec![None; attempts.len()];
    let mut delivered = Vec::new();

    for idxs in by_channel.values() {
        let channel_attempts: Vec<StartAttempt> =
            idxs.iter().map(|&i| attempts[i].clone()).collect();
        let decodes = decode_preambles(&channel_attempts, &ctx, entropy);
        let quanta = route_acks(&decodes);
        for &i in idxs {
            let a = &attempts[i];
            let kind = classify_ack(quanta.get(&a.tx).copied().unwrap_or(0), true)
                .expect("transmitter awaits its ACK");
            if kind == AckKind::AckOk {
                delivered.push(a.packet.clone());
            }
            outcomes[i] = Some(AckOutcome { tx: a.tx, kind });
        }
    }

    Ok(EpochOutcome {
        outcomes: outcomes.into_iter().map(|o| o.expect("every attempt resolved")).collect(),
        delivered,
    })
}
