//! Run configuration and shared domain types.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

pub type NodeId = usize;
pub type ChannelId = usize;
pub type Cycle = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    TrMac,
    Brs,
    Token,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::TrMac => "TRMAC",
            Protocol::Brs => "BRS",
            Protocol::Token => "TOKEN",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TRMAC" => Ok(Protocol::TrMac),
            "BRS" => Ok(Protocol::Brs),
            "TOKEN" => Ok(Protocol::Token),
            other => Err(format!("unknown protocol {other:?} (expected TRMAC, BRS or TOKEN)")),
        }
    }
}

/// Which side of the traffic matrix the hotspot weights shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HotspotAxis {
    /// Weights bias destination popularity; every node injects at the same rate.
    Destinations,
    /// Weights scale per-node injection; destinations are drawn uniformly.
    Sources,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficConfig {
    /// Mean packets per node per cycle.
    pub injection_rate: f64,
    /// Target Hurst exponent of the on/off arrival process, in [0.5, 1.0].
    pub hurst: f64,
    /// Spatial hotspot intensity: population std of n*w over the weight vector w.
    pub sigma: f64,
    #[serde(default = "default_axis")]
    pub hotspot_axis: HotspotAxis,
}

fn default_axis() -> HotspotAxis {
    HotspotAxis::Destinations
}

#[derive(Clone, Debug, Deserialize)]
#[serde(from = "RawSimConfig")]
pub struct SimConfig {
    pub num_nodes: usize,
    pub num_freq_channels: usize,
    /// Max parallel transmissions admitted per frequency channel per epoch.
    pub npt: usize,
    pub preamble_cycles: u64,
    pub ack_cycles: u64,
    pub data_cycles: u64,
    pub link_rate_gbps: f64,
    pub backoff_max_exponent: u32,
    pub protocol: Protocol,
    pub traffic: TrafficConfig,
    pub seed: u64,
    pub warmup_cycles: u64,
    pub measure_cycles: u64,
    pub queue_capacity: usize,
    /// When false, a node targeted on two or more distinct frequency channels
    /// in one epoch stays silent on all of them (single-stream receiver).
    pub multi_channel_rx: bool,
}

/// TOML-facing mirror of [`SimConfig`]; field names are the config keys.
/// `warmup_cycles` defaults to 20% of `measure_cycles`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimConfig {
    num_nodes: usize,
    num_freq_channels: usize,
    npt: usize,
    #[serde(default = "d_preamble")]
    preamble_cycles: u64,
    #[serde(default = "d_ack")]
    ack_cycles: u64,
    #[serde(default = "d_data")]
    data_cycles: u64,
    #[serde(default = "d_link_rate")]
    link_rate_gbps: f64,
    #[serde(default = "d_backoff_exp")]
    backoff_max_exponent: u32,
    protocol: Protocol,
    traffic: TrafficConfig,
    seed: u64,
    #[serde(default)]
    warmup_cycles: Option<u64>,
    measure_cycles: u64,
    #[serde(default = "d_queue_cap")]
    queue_capacity: usize,
    #[serde(default = "d_true")]
    multi_channel_rx: bool,
}

fn d_preamble() -> u64 {
    1
}
fn d_ack() -> u64 {
    1
}
fn d_data() -> u64 {
    4
}
fn d_link_rate() -> f64 {
    30.0
}
fn d_backoff_exp() -> u32 {
    6
}
fn d_queue_cap() -> usize {
    16
}
fn d_true() -> bool {
    true
}

impl From<RawSimConfig> for SimConfig {
    fn from(raw: RawSimConfig) -> Self {
        SimConfig {
            num_nodes: raw.num_nodes,
            num_freq_channels: raw.num_freq_channels,
            npt: raw.npt,
            preamble_cycles: raw.preamble_cycles,
            ack_cycles: raw.ack_cycles,
            data_cycles: raw.data_cycles,
            link_rate_gbps: raw.link_rate_gbps,
            backoff_max_exponent: raw.backoff_max_exponent,
            protocol: raw.protocol,
            traffic: raw.traffic,
            seed: raw.seed,
            warmup_cycles: raw.warmup_cycles.unwrap_or(raw.measure_cycles / 5),
            measure_cycles: raw.measure_cycles,
            queue_capacity: raw.queue_capacity,
            multi_channel_rx: raw.multi_channel_rx,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config field {field}: {requirement}")]
    Violation {
        field: &'static str,
        requirement: String,
    },
    #[error("config parse error: {0}")]
    Parse(String),
}

fn violation(field: &'static str, requirement: String) -> ConfigError {
    ConfigError::Violation { field, requirement }
}

impl SimConfig {
    /// Defaults suitable for tests and as a CLI baseline; callers override fields.
    pub fn new(protocol: Protocol, num_nodes: usize, num_freq_channels: usize, npt: usize) -> Self {
        SimConfig {
            num_nodes,
            num_freq_channels,
            npt,
            preamble_cycles: 1,
            ack_cycles: 1,
            data_cycles: 4,
            link_rate_gbps: 30.0,
            backoff_max_exponent: 6,
            protocol,
            traffic: TrafficConfig {
                injection_rate: 0.001,
                hurst: 1.0,
                sigma: 0.5,
                hotspot_axis: HotspotAxis::Destinations,
            },
            seed: 1,
            warmup_cycles: 40_000,
            measure_cycles: 200_000,
            queue_capacity: 16,
            multi_channel_rx: true,
        }
    }

    /// Cycles per epoch: preamble + ACK + data.
    pub fn epoch_len(&self) -> u64 {
        self.preamble_cycles + self.ack_cycles + self.data_cycles
    }

    pub fn total_cycles(&self) -> u64 {
        self.warmup_cycles + self.measure_cycles
    }

    /// Checks every field constraint; the error names the first failing field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_nodes < 2 {
            return Err(violation(
                "num_nodes",
                format!("num_nodes >= 2 (got {})", self.num_nodes),
            ));
        }
        if self.num_freq_channels < 1 {
            return Err(violation(
                "num_freq_channels",
                "num_freq_channels >= 1 (got 0)".into(),
            ));
        }
        if self.npt < 1 {
            return Err(violation("npt", "npt >= 1 (got 0)".into()));
        }
        if self.preamble_cycles < 1 {
            return Err(violation(
                "preamble_cycles",
                "preamble_cycles >= 1 (got 0)".into(),
            ));
        }
        if self.data_cycles < 1 {
            return Err(violation("data_cycles", "data_cycles >= 1 (got 0)".into()));
        }
        if !self.link_rate_gbps.is_finite() || self.link_rate_gbps <= 0.0 {
            return Err(violation(
                "link_rate_gbps",
                format!("link_rate_gbps > 0 (got {})", self.link_rate_gbps),
            ));
        }
        if self.queue_capacity < 1 {
            return Err(violation(
                "queue_capacity",
                "queue_capacity >= 1 (got 0)".into(),
            ));
        }
        if self.measure_cycles < 1 {
            return Err(violation(
                "measure_cycles",
                "measure_cycles >= 1 (got 0)".into(),
            ));
        }
        let t = &self.traffic;
        if !t.injection_rate.is_finite() || t.injection_rate < 0.0 {
            return Err(violation(
                "traffic.injection_rate",
                format!("injection_rate >= 0 (got {})", t.injection_rate),
            ));
        }
        if !t.hurst.is_finite() || t.hurst < 0.5 {
            return Err(violation(
                "traffic.hurst",
                format!("hurst >= 0.5 (got {})", t.hurst),
            ));
        }
        if t.hurst > 1.0 {
            return Err(violation(
                "traffic.hurst",
                format!("hurst <= 1.0 (got {})", t.hurst),
            ));
        }
        let sigma_max = ((self.num_nodes - 1) as f64).sqrt();
        if !t.sigma.is_finite() || t.sigma < 0.0 {
            return Err(violation(
                "traffic.sigma",
                format!("sigma >= 0 (got {})", t.sigma),
            ));
        }
        if t.sigma > sigma_max {
            return Err(violation(
                "traffic.sigma",
                format!(
                    "sigma <= sqrt(num_nodes - 1) = {sigma_max:.4} (got {})",
                    t.sigma
                ),
            ));
        }
        Ok(())
    }

    /// Parses a TOML config and validates it.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Static node-to-channel assignment: round robin by node id.
pub fn assigned_channel(node: NodeId, num_freq_channels: usize) -> ChannelId {
    node % num_freq_channels
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub created_at: Cycle,
    pub delivered_at: Option<Cycle>,
}
