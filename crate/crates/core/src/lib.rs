//! Cycle-driven simulator of medium access control for wireless networks
//! inside a computing package.
//!
//! The primary protocol is TR-MAC: time-reversal precoding gives every node a
//! quasi-orthogonal spatial channel, so up to `npt` transmissions can share one
//! frequency channel per epoch. An epoch is preamble + ACK + data cycles, all
//! aligned to a global clock. Collisions surface as missing or garbled
//! acknowledgments and are resolved with binary exponential backoff.
//!
//! Two baselines share the same clock, traffic model and metrics: a
//! carrier-sense/NACK contention protocol (BRS) and per-channel token rings.
//!
//! Everything is deterministic: a run is a pure function of (config, seed).
//! Random draws come from per-module, per-node streams derived from the master
//! seed, so one subsystem's draw count never perturbs another's sequence.

pub mod baselines;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod phy;
pub mod rng;
pub mod trace;
pub mod traffic;
pub mod trmac;

pub use config::{
    assigned_channel, ChannelId, ConfigError, Cycle, HotspotAxis, NodeId, Packet, Protocol,
    SimConfig, TrafficConfig,
};
pub use engine::{run, run_replay, run_with_trace, simulate, SimError};
pub use metrics::{
    aggregate_gbps, saturation_point, sweep, write_results_csv, MetricsReport, ResultRow,
    SweepPoint,
};
