//! Blocks, periods and recorded chains.
//!
//! Heights are absolute `u64` values. Positions inside a period are 1-based
//! at the API boundary (`at(1)` is the first block of the period).

mod generate;
mod ingest;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use generate::{fill_bits, generate_congestion_vector, sample_control_vector};
pub use ingest::{detect_format, ingest_chain, write_chain, ChainFormat};

/// A transaction as seen by the congestion signal: a weight and a fee per
/// unit of weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transaction {
    size: f64,
    fee_density: f64,
    synthetic: bool,
}

impl Transaction {
    pub fn new(size: f64, fee_density: f64) -> Result<Self> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::param(format!("transaction size must be positive, got {size}")));
        }
        if !(fee_density >= 0.0 && fee_density.is_finite()) {
            return Err(Error::param(format!(
                "fee density must be non-negative, got {fee_density}"
            )));
        }
        Ok(Transaction {
            size,
            fee_density,
            synthetic: false,
        })
    }

    fn padding(size: f64) -> Self {
        Transaction {
            size,
            fee_density: 0.0,
            synthetic: true,
        }
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn fee_density(&self) -> f64 {
        self.fee_density
    }

    pub fn fee(&self) -> f64 {
        self.size * self.fee_density
    }

    /// Zero-fee filler added so that every block is full.
    pub fn is_synthetic(&self) -> bool {
        self.synthetic
    }
}

/// Relative slack under which a block counts as already full.
const FULL_TOLERANCE: f64 = 1e-12;

/// A full block. If the supplied transactions do not fill `capacity`, a
/// synthetic zero-fee transaction covering the remainder is appended.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    capacity: f64,
    txs: Vec<Transaction>,
    base_fee: Option<f64>,
}

impl Block {
    pub fn new(capacity: f64, txs: Vec<Transaction>) -> Result<Self> {
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(Error::param(format!("block capacity must be positive, got {capacity}")));
        }
        let used: f64 = txs.iter().map(Transaction::size).sum();
        let slack = capacity * FULL_TOLERANCE;
        if used > capacity + slack {
            return Err(Error::param(format!(
                "transactions weigh {used}, more than the block capacity {capacity}"
            )));
        }
        let mut txs: Vec<Transaction> = txs.into_iter().filter(|tx| !tx.synthetic).collect();
        let used: f64 = txs.iter().map(Transaction::size).sum();
        if capacity - used > slack {
            txs.push(Transaction::padding(capacity - used));
        }
        Ok(Block {
            capacity,
            txs,
            base_fee: None,
        })
    }

    /// Convenience constructor from `(size, fee_density)` pairs.
    pub fn from_pairs(capacity: f64, pairs: &[(f64, f64)]) -> Result<Self> {
        let txs = pairs
            .iter()
            .map(|&(size, density)| Transaction::new(size, density))
            .collect::<Result<Vec<_>>>()?;
        Block::new(capacity, txs)
    }

    pub fn with_base_fee(mut self, base_fee: f64) -> Result<Self> {
        if !(base_fee >= 0.0 && base_fee.is_finite()) {
            return Err(Error::param(format!("base fee must be non-negative, got {base_fee}")));
        }
        self.base_fee = Some(base_fee);
        Ok(self)
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// All transactions, including the synthetic padding if any.
    pub fn txs(&self) -> &[Transaction] {
        &self.txs
    }

    /// Transactions that were actually supplied (padding excluded).
    pub fn real_txs(&self) -> impl Iterator<Item = &Transaction> {
        self.txs.iter().filter(|tx| !tx.synthetic)
    }

    pub fn base_fee(&self) -> Option<f64> {
        self.base_fee
    }

    /// Total fees collected by the miner. Padding pays nothing.
    pub fn revenue(&self) -> f64 {
        self.real_txs().map(Transaction::fee).sum()
    }
}

fn parse_bits<T>(s: &str, build: impl FnOnce(Vec<bool>) -> Result<T>) -> Result<T> {
    let bits = s
        .chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::param(format!("expected 0 or 1, found {other:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    build(bits)
}

fn fmt_bits(bits: &[bool], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for &b in bits {
        f.write_str(if b { "1" } else { "0" })?;
    }
    Ok(())
}

/// Per-block congestion signals of a period; `true` means congested.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CongestionVector(Vec<bool>);

impl CongestionVector {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::param("a congestion vector needs at least one block"));
        }
        Ok(CongestionVector(bits))
    }

    /// From `0`/`1` values.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::param(format!("expected 0 or 1, found {bad}")));
        }
        Self::new(bits.iter().map(|&b| b == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Signal of the `i`-th block of the period, 1-based.
    pub fn at(&self, i: usize) -> Option<bool> {
        i.checked_sub(1).and_then(|j| self.0.get(j).copied())
    }

    pub fn uncongested_count(&self) -> usize {
        self.0.iter().filter(|&&b| !b).count()
    }
}

impl FromStr for CongestionVector {
    type Err = Error;

    /// Parses strings such as `"0010"` or `"0,0,1,0"`.
    fn from_str(s: &str) -> Result<Self> {
        parse_bits(s, CongestionVector::new)
    }
}

impl fmt::Display for CongestionVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_bits(&self.0, f)
    }
}

/// Marks which blocks of a period were mined by the adversary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ControlVector(Vec<bool>);

impl ControlVector {
    pub fn new(bits: Vec<bool>) -> Self {
        ControlVector(bits)
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::param(format!("expected 0 or 1, found {bad}")));
        }
        Ok(ControlVector(bits.iter().map(|&b| b == 1).collect()))
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn controlled_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl FromStr for ControlVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_bits(s, |bits| Ok(ControlVector(bits)))
    }
}

impl fmt::Display for ControlVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_bits(&self.0, f)
    }
}

/// What is known about a single height of a recorded chain.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainEntry {
    /// Full transaction contents.
    Block(Block),
    /// Only the EIP-1559 style base fee.
    BaseFee(f64),
    /// A precomputed congestion bit.
    Signal(bool),
}

impl ChainEntry {
    pub fn base_fee(&self) -> Option<f64> {
        match self {
            ChainEntry::Block(b) => b.base_fee(),
            ChainEntry::BaseFee(f) => Some(*f),
            ChainEntry::Signal(_) => None,
        }
    }
}

/// A contiguous run of chain heights starting at `first_height`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainView {
    first_height: u64,
    entries: Vec<ChainEntry>,
}

impl ChainView {
    pub fn new(first_height: u64, entries: Vec<ChainEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Structural("a chain needs at least one block".into()));
        }
        if first_height.checked_add(entries.len() as u64 - 1).is_none() {
            return Err(Error::Structural("chain heights overflow".into()));
        }
        Ok(ChainView {
            first_height,
            entries,
        })
    }

    /// A chain whose blocks carry only congestion bits.
    pub fn from_signals(first_height: u64, bits: &[bool]) -> Result<Self> {
        Self::new(first_height, bits.iter().map(|&b| ChainEntry::Signal(b)).collect())
    }

    pub fn first_height(&self) -> u64 {
        self.first_height
    }

    pub fn last_height(&self) -> u64 {
        self.first_height + self.entries.len() as u64 - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ChainEntry] {
        &self.entries
    }

    pub fn contains(&self, height: u64) -> bool {
        height >= self.first_height && height <= self.last_height()
    }

    pub fn get(&self, height: u64) -> Option<&ChainEntry> {
        if !self.contains(height) {
            return None;
        }
        self.entries.get((height - self.first_height) as usize)
    }

    pub fn base_fee(&self, height: u64) -> Option<f64> {
        self.get(height).and_then(ChainEntry::base_fee)
    }
}
