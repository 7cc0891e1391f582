use std::collections::VecDeque;

use super::{Evaluation, PeriodStatus, ProtocolSpec, Witness};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Carry {
    /// Uncongested blocks so far (cumulative and percentage rules).
    Zeros(usize),
    /// Length of the trailing uncongested run, capped at `L`.
    Run(usize),
    /// The last `N - 1` bits and how many of them are uncongested.
    Tail { bits: VecDeque<bool>, zeros: usize },
}

/// What must be remembered about a period to judge any extension of it
/// without rescanning: O(1) counters, plus the last `N - 1` bits for the
/// sliding window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefreshState {
    spec: ProtocolSpec,
    len: usize,
    carry: Carry,
    /// First witness; once set the (monotone) verdict never changes.
    found: Option<Witness>,
}

impl RefreshState {
    /// State of the empty period.
    pub fn new(spec: ProtocolSpec) -> Self {
        let carry = match spec {
            ProtocolSpec::CumulativeM { .. } | ProtocolSpec::Percentage { .. } => Carry::Zeros(0),
            ProtocolSpec::LConsecutive { .. } => Carry::Run(0),
            ProtocolSpec::SlidingWindow { n, .. } => Carry::Tail {
                bits: VecDeque::with_capacity(n.saturating_sub(1)),
                zeros: 0,
            },
        };
        RefreshState {
            spec,
            len: 0,
            carry,
            found: None,
        }
    }

    /// State after scanning `bits` from the empty period.
    pub fn from_period(spec: ProtocolSpec, bits: &[bool]) -> Self {
        let mut state = Self::new(spec);
        state.extend(bits);
        state
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    /// Number of blocks absorbed so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of raw bits retained.
    pub fn retained_bits(&self) -> usize {
        match &self.carry {
            Carry::Tail { bits, .. } => bits.len(),
            _ => 0,
        }
    }

    fn push(&mut self, congested: bool) {
        self.len += 1;
        let free = usize::from(!congested);
        match (&mut self.carry, self.spec) {
            (Carry::Zeros(zeros), _) => *zeros += free,
            (Carry::Run(run), ProtocolSpec::LConsecutive { l }) => {
                if self.found.is_some() {
                    return;
                }
                *run = if congested { 0 } else { (*run + 1).min(l) };
                if *run == l {
                    self.found = Some(Witness::new(self.len + 1 - l));
                }
            }
            (Carry::Tail { bits, zeros }, ProtocolSpec::SlidingWindow { n, k }) => {
                if self.found.is_some() {
                    return;
                }
                if self.len >= n && *zeros + free >= k {
                    self.found = Some(Witness::new(self.len + 1 - n));
                    return;
                }
                bits.push_back(congested);
                *zeros += free;
                if bits.len() + 1 > n {
                    let dropped = bits.pop_front().expect("tail is non-empty");
                    *zeros -= usize::from(!dropped);
                }
            }
            _ => unreachable!("carry always matches the spec it was built for"),
        }
    }

    /// Absorbs `bits` and returns the verdict for the extended period.
    pub fn extend(&mut self, bits: &[bool]) -> Evaluation {
        for &b in bits {
            self.push(b);
        }
        self.evaluation()
    }

    /// Verdict for the period absorbed so far.
    pub fn evaluation(&self) -> Evaluation {
        let uncongested = match (&self.carry, self.spec) {
            (Carry::Zeros(zeros), ProtocolSpec::CumulativeM { m }) => *zeros >= m,
            (Carry::Zeros(zeros), ProtocolSpec::Percentage { x }) => self.len > 0 && x.is_met(*zeros, self.len),
            _ => self.found.is_some(),
        };
        Evaluation {
            status: if uncongested {
                PeriodStatus::Uncongested
            } else {
                PeriodStatus::Congested
            },
            witness: self.found,
        }
    }
}

/// Result of extending a period through its refresh state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refreshed {
    pub evaluation: Evaluation,
    pub state: RefreshState,
}

/// Judges `original ++ new_bits` from the refresh state of `original`.
pub fn refresh_evaluate(spec: &ProtocolSpec, mut state: RefreshState, new_bits: &[bool]) -> Result<Refreshed> {
    if state.spec != *spec {
        return Err(Error::param(format!(
            "refresh state was built for {}, not {spec}",
            state.spec
        )));
    }
    let evaluation = state.extend(new_bits);
    Ok(Refreshed { evaluation, state })
}
