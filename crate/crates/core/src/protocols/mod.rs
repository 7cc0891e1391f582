//! Uncongested-period protocols.
//!
//! A protocol maps a period's congestion vector to a verdict. The four rules:
//!
//! | spec           | uncongested iff                                        |
//! |----------------|--------------------------------------------------------|
//! | `cum:M=m`      | at least `m` uncongested blocks                        |
//! | `pct:x=x`      | at least `x`% of the blocks are uncongested            |
//! | `lconsec:L=l`  | a run of `l` consecutive uncongested blocks            |
//! | `sw:N=n,K=k`   | some window of `n` consecutive blocks has `k` uncongested |
//!
//! The consecutive-run and sliding-window rules produce a witness: the 1-based
//! start of the first qualifying run or window.

mod refresh;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chain::CongestionVector;
use crate::error::{Error, Result};

pub use refresh::{refresh_evaluate, RefreshState};

/// A percentage stored in thousandths, so `66.667` is represented exactly and
/// threshold comparisons are done in integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Percent {
    millis: u32,
}

impl Percent {
    pub const MAX_MILLIS: u32 = 100_000;

    pub fn from_millis(millis: u32) -> Result<Self> {
        if millis > Self::MAX_MILLIS {
            return Err(Error::param(format!(
                "percentage must lie in [0, 100], got {}",
                millis as f64 / 1000.0
            )));
        }
        Ok(Percent { millis })
    }

    pub fn whole(percent: u32) -> Result<Self> {
        Self::from_millis(percent.saturating_mul(1000))
    }

    pub fn millis(&self) -> u32 {
        self.millis
    }

    /// `uncongested >= x/100 * total`, exactly.
    pub fn is_met(&self, uncongested: usize, total: usize) -> bool {
        uncongested as u128 * Self::MAX_MILLIS as u128 >= self.millis as u128 * total as u128
    }
}

impl FromStr for Percent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("invalid percentage {s:?} (at most three decimals)"));
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() || frac.len() > 3 || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u32 = int.parse().map_err(|_| bad())?;
        let frac_millis: u32 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<3}").parse().map_err(|_| bad())?
        };
        Percent::from_millis(int.checked_mul(1000).ok_or_else(bad)? + frac_millis)
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (int, frac) = (self.millis / 1000, self.millis % 1000);
        if frac == 0 {
            write!(f, "{int}")
        } else {
            let frac = format!("{frac:03}");
            write!(f, "{int}.{}", frac.trim_end_matches('0'))
        }
    }
}

/// Which uncongested-period protocol to apply, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolSpec {
    CumulativeM { m: usize },
    Percentage { x: Percent },
    LConsecutive { l: usize },
    SlidingWindow { n: usize, k: usize },
}

impl ProtocolSpec {
    pub fn cumulative(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("cumulative protocol needs M >= 1"));
        }
        Ok(ProtocolSpec::CumulativeM { m })
    }

    pub fn percentage(x: Percent) -> Self {
        ProtocolSpec::Percentage { x }
    }

    pub fn consecutive(l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::param("consecutive protocol needs L >= 1"));
        }
        Ok(ProtocolSpec::LConsecutive { l })
    }

    pub fn sliding_window(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k == 0 || k > n {
            return Err(Error::param(format!(
                "sliding window needs 1 <= K <= N, got N={n}, K={k}"
            )));
        }
        Ok(ProtocolSpec::SlidingWindow { n, k })
    }

    /// Re-checks parameter ranges (for values built directly from variants).
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProtocolSpec::CumulativeM { m } => Self::cumulative(m).map(drop),
            ProtocolSpec::Percentage { x } => Percent::from_millis(x.millis).map(drop),
            ProtocolSpec::LConsecutive { l } => Self::consecutive(l).map(drop),
            ProtocolSpec::SlidingWindow { n, k } => Self::sliding_window(n, k).map(drop),
        }
    }

    /// Whether uncongestion of a period implies uncongestion of every period
    /// containing it. Only the percentage rule fails this.
    pub fn is_monotone(&self) -> bool {
        !matches!(self, ProtocolSpec::Percentage { .. })
    }

    /// Whether the protocol certifies uncongestion with an index witness.
    pub fn has_witness(&self) -> bool {
        matches!(
            self,
            ProtocolSpec::LConsecutive { .. } | ProtocolSpec::SlidingWindow { .. }
        )
    }

    /// Length of the window or run a witness points to.
    pub fn window_len(&self) -> Option<usize> {
        match *self {
            ProtocolSpec::LConsecutive { l } => Some(l),
            ProtocolSpec::SlidingWindow { n, .. } => Some(n),
            _ => None,
        }
    }

    /// Verdict plus witness on raw bits (`true` = congested). An empty slice
    /// is congested under every rule.
    pub fn scan(&self, bits: &[bool]) -> Evaluation {
        let len = bits.len();
        match *self {
            ProtocolSpec::CumulativeM { m } => {
                let zeros = bits.iter().filter(|&&b| !b).count();
                if zeros >= m {
                    Evaluation::uncongested(None)
                } else {
                    Evaluation::congested()
                }
            }
            ProtocolSpec::Percentage { x } => {
                let zeros = bits.iter().filter(|&&b| !b).count();
                if len > 0 && x.is_met(zeros, len) {
                    Evaluation::uncongested(None)
                } else {
                    Evaluation::congested()
                }
            }
            ProtocolSpec::LConsecutive { l } => {
                let mut run = 0;
                for (i, &b) in bits.iter().enumerate() {
                    run = if b { 0 } else { run + 1 };
                    if run == l {
                        return Evaluation::uncongested(Some(Witness::new(i + 2 - l)));
                    }
                }
                Evaluation::congested()
            }
            ProtocolSpec::SlidingWindow { n, k } => {
                if len < n {
                    return Evaluation::congested();
                }
                let mut zeros = bits[..n].iter().filter(|&&b| !b).count();
                if zeros >= k {
                    return Evaluation::uncongested(Some(Witness::new(1)));
                }
                for end in n..len {
                    zeros += usize::from(!bits[end]);
                    zeros -= usize::from(!bits[end - n]);
                    if zeros >= k {
                        return Evaluation::uncongested(Some(Witness::new(end + 2 - n)));
                    }
                }
                Evaluation::congested()
            }
        }
    }

    /// Verdict only, on raw bits. Same as `scan(bits).is_uncongested()`.
    pub fn is_uncongested(&self, bits: &[bool]) -> bool {
        self.scan(bits).is_uncongested()
    }
}

impl fmt::Display for ProtocolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProtocolSpec::CumulativeM { m } => write!(f, "cum:M={m}"),
            ProtocolSpec::Percentage { x } => write!(f, "pct:x={x}"),
            ProtocolSpec::LConsecutive { l } => write!(f, "lconsec:L={l}"),
            ProtocolSpec::SlidingWindow { n, k } => write!(f, "sw:N={n},K={k}"),
        }
    }
}

impl FromStr for ProtocolSpec {
    type Err = Error;

    /// Parses the canonical text form, e.g. `sw:N=144,K=89` or `pct:x=75`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::param(format!("invalid protocol spec {s:?}: {why}"));
        let (kind, rest) = s.trim().split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let mut fields = Vec::new();
        for part in rest.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            fields.push((key.trim(), value.trim()));
        }
        let get = |key: &str| -> Result<&str> {
            let mut matches = fields.iter().filter(|(k, _)| *k == key);
            let value = matches.next().ok_or_else(|| bad(&format!("missing {key}")))?.1;
            if matches.next().is_some() {
                return Err(bad(&format!("{key} given twice")));
            }
            Ok(value)
        };
        let count = |key: &str| -> Result<usize> {
            get(key)?.parse().map_err(|_| bad(&format!("{key} must be a non-negative integer")))
        };
        let expect_keys = |n: usize| {
            if fields.len() == n { Ok(()) } else { Err(bad("unexpected fields")) }
        };
        match kind.trim() {
            "cum" => {
                expect_keys(1)?;
                ProtocolSpec::cumulative(count("M")?)
            }
            "pct" => {
                expect_keys(1)?;
                Ok(ProtocolSpec::percentage(get("x")?.parse()?))
            }
            "lconsec" => {
                expect_keys(1)?;
                ProtocolSpec::consecutive(count("L")?)
            }
            "sw" => {
                expect_keys(2)?;
                ProtocolSpec::sliding_window(count("N")?, count("K")?)
            }
            other => Err(bad(&format!("unknown protocol {other:?}"))),
        }
    }
}

impl Serialize for ProtocolSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProtocolSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// 1-based start of a run or window that certifies uncongestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Witness {
    pub start_index: usize,
}

impl Witness {
    pub fn new(start_index: usize) -> Self {
        Witness { start_index }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodStatus {
    Congested,
    Uncongested,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub status: PeriodStatus,
    pub witness: Option<Witness>,
}

impl Evaluation {
    fn congested() -> Self {
        Evaluation {
            status: PeriodStatus::Congested,
            witness: None,
        }
    }

    fn uncongested(witness: Option<Witness>) -> Self {
        Evaluation {
            status: PeriodStatus::Uncongested,
            witness,
        }
    }

    pub fn is_uncongested(&self) -> bool {
        self.status == PeriodStatus::Uncongested
    }
}

/// Evaluates `spec` on a whole period.
pub fn evaluate(spec: &ProtocolSpec, pe: &CongestionVector) -> Evaluation {
    spec.scan(pe.bits())
}

/// Checks a witness by inspecting only the run or window it points to.
/// Out-of-range indices and protocols without index witnesses yield `false`.
pub fn verify_witness(spec: &ProtocolSpec, pe: &CongestionVector, w: Witness) -> bool {
    let (len, needed) = match *spec {
        ProtocolSpec::LConsecutive { l } => (l, l),
        ProtocolSpec::SlidingWindow { n, k } => (n, k),
        _ => return false,
    };
    let Some(start) = w.start_index.checked_sub(1) else {
        return false;
    };
    match pe.bits().get(start..start.saturating_add(len)) {
        Some(window) if window.len() == len => window.iter().filter(|&&b| !b).count() >= needed,
        _ => false,
    }
}

pub fn is_monotone(spec: &ProtocolSpec) -> bool {
    spec.is_monotone()
}
