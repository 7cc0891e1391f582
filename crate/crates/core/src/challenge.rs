//! Deadline extension for a single challenge.
//!
//! A challenge opened at height `t_c` with response deadline `t_rd` is
//! extended one block at a time while the period `t_c..=t_rd` is judged
//! congested, up to the hard cap `t_c + m_hat`. Deadlines are inclusive: a
//! response mined at the final deadline height is on time.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::chain::ChainView;
use crate::error::{Error, Result};
use crate::protocols::{PeriodStatus, ProtocolSpec, RefreshState, Witness};
use crate::signal::BlockSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawChallenge")]
pub struct Challenge {
    pub t_c: u64,
    #[serde(rename = "t_rd")]
    pub t_rd_init: u64,
    pub m_hat: u64,
    pub spec: ProtocolSpec,
}

#[derive(Deserialize)]
struct RawChallenge {
    t_c: u64,
    t_rd: u64,
    m_hat: u64,
    spec: ProtocolSpec,
}

impl TryFrom<RawChallenge> for Challenge {
    type Error = Error;

    fn try_from(raw: RawChallenge) -> Result<Self> {
        Challenge::new(raw.t_c, raw.t_rd, raw.m_hat, raw.spec)
    }
}

impl Challenge {
    pub fn new(t_c: u64, t_rd_init: u64, m_hat: u64, spec: ProtocolSpec) -> Result<Self> {
        spec.validate()?;
        let cap = t_c
            .checked_add(m_hat)
            .ok_or_else(|| Error::param("t_c + m_hat overflows"))?;
        if !(t_c <= t_rd_init && t_rd_init <= cap) {
            return Err(Error::param(format!(
                "need t_c <= t_rd <= t_c + m_hat, got t_c={t_c}, t_rd={t_rd_init}, m_hat={m_hat}"
            )));
        }
        Ok(Challenge {
            t_c,
            t_rd_init,
            m_hat,
            spec,
        })
    }

    /// Latest height the deadline can be extended to.
    pub fn cap(&self) -> u64 {
        self.t_c + self.m_hat
    }
}

/// A challenge together with the block signal it is judged by, as read from
/// a challenge file:
/// `{"t_c":0,"t_rd":3,"m_hat":6,"spec":"sw:N=2,K=1","signal":{"kind":"base-fee","max_base_fee":30}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChallengeRequest {
    #[serde(flatten)]
    pub challenge: Challenge,
    pub signal: BlockSignal,
}

/// One iteration of the extension loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptStep {
    pub deadline: u64,
    pub status: PeriodStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlineResolution {
    pub final_deadline: u64,
    /// The cap was reached with the period still congested.
    pub capped: bool,
    /// The chain ended before the loop could finish; `final_deadline` is the
    /// last height that could be judged.
    pub provisional: bool,
    /// The protocol is not monotone, so the deadline need not be minimal.
    pub non_monotone_warning: bool,
    /// 1-based index into the period `t_c..=final_deadline`.
    pub witness: Option<Witness>,
    /// Height at which the witness window starts.
    pub witness_height: Option<u64>,
    pub transcript: Vec<TranscriptStep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjudication {
    pub verdict: Verdict,
    pub response_height: u64,
    pub resolution: DeadlineResolution,
}

/// Congestion bits of a chain, computed lazily and at most once per height.
#[derive(Debug)]
pub struct SignalTrack<'a> {
    chain: &'a ChainView,
    signal: BlockSignal,
    bits: Vec<OnceLock<Result<bool>>>,
}

impl<'a> SignalTrack<'a> {
    pub fn new(chain: &'a ChainView, signal: BlockSignal) -> Self {
        SignalTrack {
            chain,
            signal,
            bits: (0..chain.len()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn chain(&self) -> &ChainView {
        self.chain
    }

    /// Congestion bit at `height`, or `None` outside the chain.
    pub fn bit(&self, height: u64) -> Result<Option<bool>> {
        let Some(entry) = self.chain.get(height) else {
            return Ok(None);
        };
        let idx = (height - self.chain.first_height()) as usize;
        self.bits[idx]
            .get_or_init(|| {
                self.signal
                    .evaluate(entry)
                    .map_err(|e| Error::Data(format!("height {height}: {e}")))
            })
            .clone()
            .map(Some)
    }

    /// Bits for `from..=to`; a data error if any height is missing.
    pub fn range(&self, from: u64, to: u64) -> Result<Vec<bool>> {
        (from..=to)
            .map(|h| self.bit(h)?.ok_or_else(|| Error::Data(format!("chain has no block at height {h}"))))
            .collect()
    }

    /// Runs the extension loop for `ch`.
    pub fn resolve(&self, ch: &Challenge) -> Result<DeadlineResolution> {
        let cap = ch.cap();
        if !self.chain.contains(ch.t_c) || !self.chain.contains(ch.t_rd_init) {
            return Err(Error::Data(format!(
                "chain covers heights {}..={} but the initial period is {}..={}",
                self.chain.first_height(),
                self.chain.last_height(),
                ch.t_c,
                ch.t_rd_init
            )));
        }
        let mut state = RefreshState::from_period(ch.spec, &self.range(ch.t_c, ch.t_rd_init)?);
        let mut t_rd = ch.t_rd_init;
        let mut transcript = Vec::new();
        let mut provisional = false;
        loop {
            let eval = state.evaluation();
            transcript.push(TranscriptStep {
                deadline: t_rd,
                status: eval.status,
            });
            if eval.is_uncongested() || t_rd >= cap {
                break;
            }
            match self.bit(t_rd + 1)? {
                Some(bit) => {
                    t_rd += 1;
                    state.extend(&[bit]);
                }
                None => {
                    provisional = true;
                    break;
                }
            }
        }
        let eval = state.evaluation();
        Ok(DeadlineResolution {
            final_deadline: t_rd,
            capped: t_rd == cap && !eval.is_uncongested(),
            provisional,
            non_monotone_warning: !ch.spec.is_monotone(),
            witness: eval.witness,
            witness_height: eval.witness.map(|w| ch.t_c + w.start_index as u64 - 1),
            transcript,
        })
    }

    /// Decides whether a response mined at `response_height` met the deadline.
    pub fn adjudicate(&self, ch: &Challenge, response_height: u64) -> Result<Adjudication> {
        if response_height < ch.t_c {
            return Err(Error::param(format!(
                "response at height {response_height} precedes the challenge at {}",
                ch.t_c
            )));
        }
        let resolution = self.resolve(ch)?;
        let verdict = if response_height <= resolution.final_deadline {
            Verdict::Accepted
        } else {
            Verdict::Rejected
        };
        Ok(Adjudication {
            verdict,
            response_height,
            resolution,
        })
    }
}

pub fn resolve_deadline(chain: &ChainView, ch: &Challenge, signal: BlockSignal) -> Result<DeadlineResolution> {
    SignalTrack::new(chain, signal).resolve(ch)
}

pub fn adjudicate_response(
    chain: &ChainView,
    ch: &Challenge,
    response_height: u64,
    signal: BlockSignal,
) -> Result<Adjudication> {
    SignalTrack::new(chain, signal).adjudicate(ch, response_height)
}
