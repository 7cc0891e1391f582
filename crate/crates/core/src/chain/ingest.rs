//! JSON-Lines chain records.
//!
//! Two record shapes, one object per line, heights ascending by exactly one:
//!
//! ```text
//! {"height": 100, "capacity": 100.0, "txs": [{"size": 60.0, "fee_density": 8.0}]}
//! {"height": 1, "base_fee": 25.0}
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Block, ChainEntry, ChainView, Transaction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainFormat {
    TxList,
    BaseFee,
}

impl FromStr for ChainFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tx-list" => Ok(ChainFormat::TxList),
            "base-fee" => Ok(ChainFormat::BaseFee),
            other => Err(Error::param(format!(
                "unknown chain format {other:?} (expected tx-list or base-fee)"
            ))),
        }
    }
}

impl fmt::Display for ChainFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainFormat::TxList => "tx-list",
            ChainFormat::BaseFee => "base-fee",
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TxRecord {
    size: f64,
    fee_density: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockRecord {
    height: u64,
    capacity: f64,
    txs: Vec<TxRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseFeeRecord {
    height: u64,
    base_fee: f64,
}

/// Guesses the format from the first non-blank line.
pub fn detect_format(first_line: &str) -> Option<ChainFormat> {
    let value: serde_json::Value = serde_json::from_str(first_line.trim()).ok()?;
    let obj = value.as_object()?;
    if obj.contains_key("txs") {
        Some(ChainFormat::TxList)
    } else if obj.contains_key("base_fee") {
        Some(ChainFormat::BaseFee)
    } else {
        None
    }
}

fn parse_line(line: &str, line_no: usize, format: ChainFormat) -> Result<(u64, ChainEntry)> {
    let parse_err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    match format {
        ChainFormat::TxList => {
            let rec: BlockRecord =
                serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let txs = rec
                .txs
                .iter()
                .map(|t| Transaction::new(t.size, t.fee_density))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| parse_err(e.to_string()))?;
            let block = Block::new(rec.capacity, txs).map_err(|e| parse_err(e.to_string()))?;
            Ok((rec.height, ChainEntry::Block(block)))
        }
        ChainFormat::BaseFee => {
            let rec: BaseFeeRecord =
                serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            if !(rec.base_fee >= 0.0 && rec.base_fee.is_finite()) {
                return Err(parse_err(format!("base fee must be non-negative, got {}", rec.base_fee)));
            }
            Ok((rec.height, ChainEntry::BaseFee(rec.base_fee)))
        }
    }
}

/// Reads a chain from JSON-Lines. Blank lines are skipped; every other line
/// must be a record of `format`, and heights must increase by exactly one.
pub fn ingest_chain<R: BufRead>(source: R, format: ChainFormat) -> Result<ChainView> {
    let mut first_height = None;
    let mut prev_height: Option<u64> = None;
    let mut entries = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let (height, entry) = parse_line(&line, line_no, format)?;
        if let Some(prev) = prev_height {
            if height <= prev {
                return Err(Error::Structural(format!(
                    "line {line_no}: height {height} repeats or goes backwards after {prev}"
                )));
            }
            if height != prev + 1 {
                return Err(Error::Structural(format!(
                    "line {line_no}: height {height} leaves a gap after {prev}"
                )));
            }
        }
        first_height.get_or_insert(height);
        prev_height = Some(height);
        entries.push(entry);
    }
    match first_height {
        Some(h0) => ChainView::new(h0, entries),
        None => Err(Error::Structural("chain input contains no records".into())),
    }
}

/// Writes `chain` in canonical JSON-Lines form. Synthetic padding is left out;
/// ingestion restores it.
pub fn write_chain<W: Write>(chain: &ChainView, format: ChainFormat, mut out: W) -> Result<()> {
    for (offset, entry) in chain.entries().iter().enumerate() {
        let height = chain.first_height() + offset as u64;
        let line = match (format, entry) {
            (ChainFormat::TxList, ChainEntry::Block(block)) => serde_json::to_string(&BlockRecord {
                height,
                capacity: block.capacity(),
                txs: block
                    .real_txs()
                    .map(|t| TxRecord {
                        size: t.size(),
                        fee_density: t.fee_density(),
                    })
                    .collect(),
            }),
            (ChainFormat::BaseFee, entry) => match entry.base_fee() {
                Some(base_fee) => serde_json::to_string(&BaseFeeRecord { height, base_fee }),
                None => {
                    return Err(Error::Data(format!("height {height} has no base fee")));
                }
            },
            (ChainFormat::TxList, _) => {
                return Err(Error::Data(format!("height {height} has no transaction list")));
            }
        }
        .map_err(|e| Error::Data(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| Error::Data(e.to_string()))?;
    }
    Ok(())
}
