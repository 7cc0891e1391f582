//! Block-level congestion signals.
//!
//! A block is `(theta, gamma)`-congested when transactions paying a fee
//! density of at least `theta` fill at least a `gamma` fraction of its
//! capacity. Both threshold functions and the manipulation-cost bounds are
//! evaluated exactly on the step function obtained by sorting a block's
//! transactions by descending fee density.

use serde::{Deserialize, Serialize};

use crate::chain::{Block, ChainEntry};
use crate::error::{Error, Result};

/// Parameters of the `(theta, gamma)` congestion predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignalParams")]
pub struct SignalParams {
    theta: f64,
    gamma: f64,
}

#[derive(Deserialize)]
struct RawSignalParams {
    theta: f64,
    gamma: f64,
}

impl TryFrom<RawSignalParams> for SignalParams {
    type Error = Error;

    fn try_from(raw: RawSignalParams) -> Result<Self> {
        SignalParams::new(raw.theta, raw.gamma)
    }
}

impl SignalParams {
    pub fn new(theta: f64, gamma: f64) -> Result<Self> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::param(format!("theta must be non-negative, got {theta}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::param(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        Ok(SignalParams { theta, gamma })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Total weight of transactions whose fee density is at least `theta`.
pub fn weight_above(block: &Block, theta: f64) -> f64 {
    block
        .txs()
        .iter()
        .filter(|tx| tx.fee_density() >= theta)
        .map(|tx| tx.size())
        .sum()
}

/// Fraction of capacity occupied by transactions of density at least `theta`.
/// Exactly 1 when every transaction qualifies (blocks are always full).
pub fn weight_threshold(block: &Block, theta: f64) -> f64 {
    if block.txs().iter().all(|tx| tx.fee_density() >= theta) {
        return 1.0;
    }
    (weight_above(block, theta) / block.capacity()).min(1.0)
}

pub fn is_congested(block: &Block, params: SignalParams) -> bool {
    params.gamma <= weight_threshold(block, params.theta)
}

/// Largest fee density `theta` at which `block` is `(theta, gamma)`-congested.
///
/// The maximum is always attained at some transaction's density. For
/// `gamma == 0` every `theta` qualifies and `f64::INFINITY` is returned.
pub fn fee_threshold(block: &Block, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::param(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if gamma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut densities: Vec<f64> = block.txs().iter().map(|tx| tx.fee_density()).collect();
    densities.sort_by(|a, b| b.total_cmp(a));
    densities.dedup();
    // weight_threshold only grows as theta falls, so the congested densities
    // form a suffix of the descending list.
    let first = densities.partition_point(|&d| weight_threshold(block, d) < gamma);
    Ok(densities.get(first).copied().unwrap_or(0.0))
}

/// `(density, weight)` runs in descending density order, ties merged.
fn density_segments(block: &Block) -> Vec<(f64, f64)> {
    let mut txs: Vec<(f64, f64)> = block
        .txs()
        .iter()
        .map(|tx| (tx.fee_density(), tx.size()))
        .collect();
    txs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut segments: Vec<(f64, f64)> = Vec::with_capacity(txs.len());
    for (density, weight) in txs {
        match segments.last_mut() {
            Some(last) if last.0 == density => last.1 += weight,
            _ => segments.push((density, weight)),
        }
    }
    segments
}

/// Integral of `integrand(theta_B)` over the weight positions `[lo, hi]`,
/// where position `x` holds the density of the transaction covering the
/// `x`-th unit of weight in descending-density order.
fn integrate_positions(segments: &[(f64, f64)], lo: f64, hi: f64, integrand: impl Fn(f64) -> f64) -> f64 {
    let mut start = 0.0;
    let mut total = 0.0;
    for &(density, weight) in segments {
        let end = start + weight;
        let overlap = hi.min(end) - lo.max(start);
        if overlap > 0.0 {
            total += integrand(density) * overlap;
        }
        start = end;
    }
    total
}

/// Lower bound on the fees a miner forgoes to make a non-congested block
/// `(theta, gamma)`-congested: it must displace the lowest-density
/// `gamma * capacity - weight_above(theta)` units of weight.
pub fn cost_to_congest(block: &Block, params: SignalParams) -> Result<f64> {
    if is_congested(block, params) {
        return Err(Error::Contract(format!(
            "block is already ({}, {})-congested",
            params.theta, params.gamma
        )));
    }
    let segments = density_segments(block);
    let total: f64 = segments.iter().map(|s| s.1).sum();
    let deficit = params.gamma * block.capacity() - weight_above(block, params.theta);
    Ok(integrate_positions(&segments, total - deficit, total, |d| d))
}

/// Lower bound on the fees a miner forgoes to make a `(theta, gamma)`-congested
/// block look uncongested by swapping qualifying transactions for ones paying
/// just under `theta`.
pub fn cost_to_uncongest(block: &Block, params: SignalParams) -> Result<f64> {
    if !is_congested(block, params) {
        return Err(Error::Contract(format!(
            "block is not ({}, {})-congested",
            params.theta, params.gamma
        )));
    }
    let segments = density_segments(block);
    let lo = params.gamma * block.capacity();
    let hi = weight_above(block, params.theta);
    Ok(integrate_positions(&segments, lo, hi, |d| (d - params.theta).max(0.0)).max(0.0))
}

/// Block congestion definitions other than `(theta, gamma)`.
///
/// All but [`AltSignalKind::BaseFee`] are cheap for a miner to flip and are
/// kept for comparison only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AltSignalKind {
    /// Congested iff every transaction pays density at least `theta`.
    LowestFeeDensity { theta: f64 },
    /// Congested iff some transaction pays density at least `theta`.
    HighestFeeDensity { theta: f64 },
    /// Congested iff fee-paying transactions fill a `gamma` fraction.
    NonzeroOccupancy { gamma: f64 },
    /// Congested iff transactions paying a total fee of at least `min_fee`
    /// fill a `gamma` fraction.
    FeeNotDensity { min_fee: f64, gamma: f64 },
    /// Congested iff the block's base fee exceeds `max_base_fee`.
    BaseFee { max_base_fee: f64 },
}

impl AltSignalKind {
    pub fn validate(&self) -> Result<()> {
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(format!("{name} must be non-negative, got {v}")))
            }
        };
        let fraction = |v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(format!("gamma must lie in [0, 1], got {v}")))
            }
        };
        match *self {
            AltSignalKind::LowestFeeDensity { theta } | AltSignalKind::HighestFeeDensity { theta } => {
                non_negative("theta", theta)
            }
            AltSignalKind::NonzeroOccupancy { gamma } => fraction(gamma),
            AltSignalKind::FeeNotDensity { min_fee, gamma } => {
                non_negative("fee", min_fee)?;
                fraction(gamma)
            }
            AltSignalKind::BaseFee { max_base_fee } => non_negative("max_base_fee", max_base_fee),
        }
    }
}

pub fn alt_is_congested(block: &Block, kind: AltSignalKind) -> Result<bool> {
    kind.validate()?;
    let txs = block.txs();
    let capacity = block.capacity();
    Ok(match kind {
        AltSignalKind::LowestFeeDensity { theta } => txs
            .iter()
            .map(|tx| tx.fee_density())
            .fold(f64::INFINITY, f64::min)
            >= theta,
        AltSignalKind::HighestFeeDensity { theta } => txs
            .iter()
            .map(|tx| tx.fee_density())
            .fold(f64::NEG_INFINITY, f64::max)
            >= theta,
        AltSignalKind::NonzeroOccupancy { gamma } => {
            let w: f64 = txs.iter().filter(|tx| tx.fee_density() > 0.0).map(|tx| tx.size()).sum();
            w >= gamma * capacity
        }
        AltSignalKind::FeeNotDensity { min_fee, gamma } => {
            let w: f64 = txs.iter().filter(|tx| tx.fee() >= min_fee).map(|tx| tx.size()).sum();
            w >= gamma * capacity
        }
        AltSignalKind::BaseFee { max_base_fee } => match block.base_fee() {
            Some(fee) => fee > max_base_fee,
            None => return Err(Error::Data("block carries no base fee".into())),
        },
    })
}

/// The per-block signal a challenge is judged with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRecord", into = "SignalRecord")]
pub enum BlockSignal {
    Weighted(SignalParams),
    Alternative(AltSignalKind),
}

/// JSON shape of [`BlockSignal`], e.g. `{"kind":"base-fee","max_base_fee":30}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum SignalRecord {
    Weighted { theta: f64, gamma: f64 },
    LowestFeeDensity { theta: f64 },
    HighestFeeDensity { theta: f64 },
    NonzeroOccupancy { gamma: f64 },
    FeeNotDensity { f: f64, gamma: f64 },
    BaseFee { max_base_fee: f64 },
}

impl TryFrom<SignalRecord> for BlockSignal {
    type Error = Error;

    fn try_from(rec: SignalRecord) -> Result<Self> {
        let alt = match rec {
            SignalRecord::Weighted { theta, gamma } => {
                return Ok(BlockSignal::Weighted(SignalParams::new(theta, gamma)?));
            }
            SignalRecord::LowestFeeDensity { theta } => AltSignalKind::LowestFeeDensity { theta },
            SignalRecord::HighestFeeDensity { theta } => AltSignalKind::HighestFeeDensity { theta },
            SignalRecord::NonzeroOccupancy { gamma } => AltSignalKind::NonzeroOccupancy { gamma },
            SignalRecord::FeeNotDensity { f, gamma } => AltSignalKind::FeeNotDensity { min_fee: f, gamma },
            SignalRecord::BaseFee { max_base_fee } => AltSignalKind::BaseFee { max_base_fee },
        };
        alt.validate()?;
        Ok(BlockSignal::Alternative(alt))
    }
}

impl From<BlockSignal> for SignalRecord {
    fn from(signal: BlockSignal) -> Self {
        match signal {
            BlockSignal::Weighted(p) => SignalRecord::Weighted {
                theta: p.theta,
                gamma: p.gamma,
            },
            BlockSignal::Alternative(kind) => match kind {
                AltSignalKind::LowestFeeDensity { theta } => SignalRecord::LowestFeeDensity { theta },
                AltSignalKind::HighestFeeDensity { theta } => SignalRecord::HighestFeeDensity { theta },
                AltSignalKind::NonzeroOccupancy { gamma } => SignalRecord::NonzeroOccupancy { gamma },
                AltSignalKind::FeeNotDensity { min_fee, gamma } => SignalRecord::FeeNotDensity { f: min_fee, gamma },
                AltSignalKind::BaseFee { max_base_fee } => SignalRecord::BaseFee { max_base_fee },
            },
        }
    }
}

impl BlockSignal {
    /// Congestion bit of one chain entry. Precomputed signal entries are
    /// returned as is; base-fee-only entries need the base-fee signal.
    pub fn evaluate(&self, entry: &ChainEntry) -> Result<bool> {
        match (entry, self) {
            (ChainEntry::Signal(bit), _) => Ok(*bit),
            (ChainEntry::Block(block), BlockSignal::Weighted(params)) => Ok(is_congested(block, *params)),
            (ChainEntry::Block(block), BlockSignal::Alternative(kind)) => alt_is_congested(block, *kind),
            (ChainEntry::BaseFee(fee), BlockSignal::Alternative(AltSignalKind::BaseFee { max_base_fee })) => {
                Ok(*fee > *max_base_fee)
            }
            (ChainEntry::BaseFee(_), _) => Err(Error::Data(
                "base-fee records can only be judged with the base-fee signal".into(),
            )),
        }
    }
}
