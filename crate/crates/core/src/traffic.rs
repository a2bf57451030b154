//! Synthetic workload generation and traffic statistics.
//!
//! Arrivals come from per-node on/off sources with Pareto-distributed period
//! lengths; the shape follows the target Hurst exponent (alpha = 3 - 2H).
//! Spatial skew comes from a hotspot weight vector whose dispersion is
//! controlled by sigma = std(n * w). An external arrival trace can replace
//! the synthetic model entirely.

use rand::Rng;
use rand_distr::{Pareto, StandardNormal};
use thiserror::Error;

use crate::config::{Cycle, NodeId};

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("sigma {sigma} exceeds achievable max {max:.4} for {n} nodes")]
    SigmaUnachievable { sigma: f64, max: f64, n: usize },
    #[error("hurst series too short: {len} < {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("hurst series is degenerate (zero variance)")]
    DegenerateSeries,
    #[error("arrival trace line {line}: {reason}")]
    Replay { line: usize, reason: String },
}

/// Pareto shape for the on/off period lengths. Clamped so period means stay
/// finite (alpha > 1) and tails stay heavy (alpha < 2).
pub fn hurst_to_alpha(hurst: f64) -> f64 {
    (3.0 - 2.0 * hurst).clamp(1.05, 1.95)
}

// ---------------------------------------------------------------------------
// Spatial hotspot weights

#[derive(Clone, Debug)]
pub struct SpatialWeights {
    w: Vec<f64>,
}

impl SpatialWeights {
    pub fn uniform(n: usize) -> Self {
        SpatialWeights {
            w: vec![1.0 / n as f64; n],
        }
    }

    /// Weight vector with sum 1 and std(n*w) = sigma. The shape is a softmax
    /// of standard normal draws; the sharpness is solved by bisection, which
    /// lands far inside the 2% contract. sigma = 0 is exactly uniform; the
    /// achievable max sqrt(n-1) is a point mass.
    pub fn generate(n: usize, sigma: f64, rng: &mut impl Rng) -> Result<Self, TrafficError> {
        let max = ((n - 1) as f64).sqrt();
        if sigma > max {
            return Err(TrafficError::SigmaUnachievable { sigma, max, n });
        }
        if sigma == 0.0 {
            return Ok(Self::uniform(n));
        }
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if sigma >= max - 1e-9 {
            let argmax = z
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap();
            let mut w = vec![0.0; n];
            w[argmax] = 1.0;
            return Ok(SpatialWeights { w });
        }

        let spread_of = |g: f64| SpatialWeights { w: softmax(&z, g) }.spread_std();
        let mut hi = 1.0;
        while spread_of(hi) < sigma && hi < 1e6 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if spread_of(mid) < sigma {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(SpatialWeights {
            w: softmax(&z, 0.5 * (lo + hi)),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Population std of n*w; the sigma this vector realizes.
    pub fn spread_std(&self) -> f64 {
        let n = self.w.len() as f64;
        let var = self
            .w
            .iter()
            .map(|&wi| {
                let d = n * wi - 1.0;
                d * d
            })
            .sum::<f64>()
            / n;
        var.sqrt()
    }
}

fn softmax(z: &[f64], g: f64) -> Vec<f64> {
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&zi| (g * (zi - zmax)).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

// ---------------------------------------------------------------------------
// Destination draws

/// Draws destinations proportional to hotspot weights with the source
/// excluded and the remainder renormalized (done implicitly: the draw runs
/// over total mass minus the source's weight).
#[derive(Clone, Debug)]
pub struct DestinationSampler {
    w: Vec<f64>,
    cum: Vec<f64>,
    total: f64,
}

impl DestinationSampler {
    pub fn new(weights: &SpatialWeights) -> Self {
        let w = weights.values().to_vec();
        let mut cum = Vec::with_capacity(w.len());
        let mut acc = 0.0;
        for &wi in &w {
            acc += wi;
            cum.push(acc);
        }
        DestinationSampler { w, cum, total: acc }
    }

    pub fn draw(&self, src: NodeId, rng: &mut impl Rng) -> NodeId {
        let n = self.w.len();
        debug_assert!(n >= 2);
        let w_src = self.w[src];
        let before_src = self.cum[src] - w_src;
        let mut u = rng.random_range(0.0..(self.total - w_src).max(f64::MIN_POSITIVE));
        if u >= before_src {
            u += w_src;
        }
        let mut idx = self.cum.partition_point(|&c| c <= u).min(n - 1);
        if idx == src {
            // float rounding edge; step off the excluded source
            idx = if src + 1 < n { src + 1 } else { src - 1 };
        }
        idx
    }
}

// ---------------------------------------------------------------------------
// On/off source process

/// Heavy-tailed on/off arrival source. Periods are Pareto(alpha) with a
/// 1-cycle minimum; while ON the node emits one packet per cycle with
/// probability `on_rate`. Calibration keeps the long-run mean at `rate`:
/// symmetric on/off periods give duty 0.5, so on_rate = 2*rate for rates up
/// to 0.5; beyond that the ON minimum period stretches instead.
#[derive(Clone, Debug)]
pub struct SourceProcess {
    on: bool,
    remaining: u64,
    on_rate: f64,
    alpha: f64,
    min_on: f64,
    min_off: f64,
}

fn calibrate(rate: f64) -> (f64, f64, f64) {
    if rate <= 0.0 {
        (0.0, 1.0, 1.0)
    } else if rate <= 0.5 {
        (2.0 * rate, 1.0, 1.0)
    } else if rate < 1.0 {
        (1.0, rate / (1.0 - rate), 1.0)
    } else {
        // saturated: effectively always on
        (1.0, 1e12, 1.0)
    }
}

fn pareto_period(rng: &mut impl Rng, alpha: f64, min: f64) -> u64 {
    let x: f64 = rng.sample(Pareto::new(min, alpha).expect("valid pareto params"));
    x.round().max(1.0) as u64
}

impl SourceProcess {
    pub fn new(rate: f64, hurst: f64, rng: &mut impl Rng) -> Self {
        let alpha = hurst_to_alpha(hurst);
        let (on_rate, min_on, min_off) = calibrate(rate);
        let (on, remaining) = if on_rate > 0.0 {
            let on = rng.random_bool(0.5);
            let remaining = pareto_period(rng, alpha, if on { min_on } else { min_off });
            (on, remaining)
        } else {
            (false, 0)
        };
        SourceProcess {
            on,
            remaining,
            on_rate,
            alpha,
            min_on,
            min_off,
        }
    }

    /// Advances one cycle; true when a packet is emitted this cycle.
    pub fn step(&mut self, rng: &mut impl Rng) -> bool {
        if self.on_rate <= 0.0 {
            return false;
        }
        if self.remaining == 0 {
            self.on = !self.on;
            self.remaining = pareto_period(
                rng,
                self.alpha,
                if self.on { self.min_on } else { self.min_off },
            );
        }
        self.remaining -= 1;
        if self.on {
            self.on_rate >= 1.0 || rng.random_bool(self.on_rate)
        } else {
            false
        }
    }
}

// ---------------------------------------------------------------------------
// Hurst estimation (variance-time method)

pub const HURST_MIN_SERIES: usize = 1 << 16;

/// Variance-time estimate over aggregation levels m in {2^0 .. 2^10}:
/// the m-aggregated block-mean variance of a self-similar series decays as
/// m^(-beta) with H = 1 - beta/2. Estimates are clipped to [0.5, 1.0].
pub fn estimate_hurst(series: &[u64]) -> Result<f64, TrafficError> {
    if series.len() < HURST_MIN_SERIES {
        return Err(TrafficError::SeriesTooShort {
            len: series.len(),
            min: HURST_MIN_SERIES,
        });
    }
    let mut pts = Vec::with_capacity(11);
    for k in 0..=10u32 {
        let m = 1usize << k;
        let nblocks = series.len() / m;
        let mut means = Vec::with_capacity(nblocks);
        for b in 0..nblocks {
            let sum: u64 = series[b * m..(b + 1) * m].iter().sum();
            means.push(sum as f64 / m as f64);
        }
        let mu = means.iter().sum::<f64>() / nblocks as f64;
        let var = means.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / nblocks as f64;
        if var <= 0.0 {
            return Err(TrafficError::DegenerateSeries);
        }
        pts.push(((m as f64).ln(), var.ln()));
    }
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    let slope = sxy / sxx; // = -beta
    Ok((1.0 + slope / 2.0).clamp(0.5, 1.0))
}

// ---------------------------------------------------------------------------
// Arrival replay

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arrival {
    pub cycle: Cycle,
    pub src: NodeId,
    pub dst: NodeId,
}

pub const ARRIVAL_HEADER: &str = "cycle,src,dst";

/// Parses an arrival trace. Rows must be sorted by cycle, lie inside
/// [0, horizon), and name two distinct in-range nodes.
pub fn parse_arrival_csv(
    text: &str,
    num_nodes: usize,
    horizon: Cycle,
) -> Result<Vec<Arrival>, TrafficError> {
    let fail = |line: usize, reason: String| TrafficError::Replay { line, reason };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == ARRIVAL_HEADER => {}
        other => {
            return Err(fail(
                1,
                format!(
                    "expected header {ARRIVAL_HEADER:?}, got {:?}",
                    other.map(|(_, h)| h).unwrap_or("")
                ),
            ))
        }
    }
    let mut arrivals = Vec::new();
    let mut last_cycle = 0;
    for (i, raw) in lines {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let mut next_field = |name: &str| {
            fields
                .next()
                .ok_or_else(|| fail(line, format!("missing field {name}")))
        };
        let cycle: Cycle = next_field("cycle")?
            .trim()
            .parse()
            .map_err(|e| fail(line, format!("bad cycle: {e}")))?;
        let src: NodeId = next_field("src")?
            .trim()
            .parse()
            .map_err(|e| fail(line, format!("bad src: {e}")))?;
        let dst: NodeId = next_field("dst")?
            .trim()
            .parse()
            .map_err(|e| fail(line, format!("bad dst: {e}")))?;
        if cycle < last_cycle {
            return Err(fail(line, format!("cycles not sorted: {cycle} after {last_cycle}")));
        }
        if cycle >= horizon {
            return Err(fail(
                line,
                format!("cycle {cycle} outside the run window [0, {horizon})"),
            ));
        }
        if src >= num_nodes || dst >= num_nodes {
            return Err(fail(line, format!("node out of range (num_nodes {num_nodes})")));
        }
        if src == dst {
            return Err(fail(line, format!("src == dst ({src})")));
        }
        last_cycle = cycle;
        arrivals.push(Arrival { cycle, src, dst });
    }
    Ok(arrivals)
}
