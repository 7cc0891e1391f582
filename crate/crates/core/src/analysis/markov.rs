//! Absorbing chains for the consecutive-run protocol.
//!
//! State `j < L` is the length of the current run of uncongested blocks (for
//! an uncongestion attack) or of blocks the adversary cannot keep congested
//! (for a congestion attack); state `L` is absorbing. Each block either
//! resets the run to 0 or extends it by one.

use std::collections::VecDeque;

use super::AttackDirection;
use crate::error::{check_probability, Error, Result};
use crate::extended::ExtendedProb;

/// Parameters of one chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovSpec {
    pub l: usize,
    pub alpha: f64,
    pub p: f64,
    pub direction: AttackDirection,
}

impl MarkovSpec {
    pub fn new(l: usize, alpha: f64, p: f64, direction: AttackDirection) -> Result<Self> {
        let spec = MarkovSpec { l, alpha, p, direction };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(Error::param("run length L must be at least 1"));
        }
        check_probability("alpha", self.alpha)?;
        check_probability("p", self.p)
    }

    /// `(reset, advance)` probabilities for a non-absorbing state.
    pub fn step_probs(&self) -> (f64, f64) {
        let (a, p) = (self.alpha, self.p);
        match self.direction {
            AttackDirection::Uncongestion => ((1.0 - a) * p, a + (1.0 - a) * (1.0 - p)),
            AttackDirection::Congestion => (a + (1.0 - a) * p, (1.0 - a) * (1.0 - p)),
        }
    }
}

/// Dense `(L+1) x (L+1)` transition matrix.
pub fn build_matrix(spec: &MarkovSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let l = spec.l;
    let (reset, advance) = spec.step_probs();
    let mut t = vec![vec![0.0; l + 1]; l + 1];
    for (j, row) in t.iter_mut().enumerate().take(l) {
        row[0] += reset;
        row[j + 1] += advance;
    }
    t[l][l] = 1.0;
    Ok(t)
}

/// Distribution after `n` steps from state 0, split into absorbed mass and
/// mass still transient. Both are accumulated directly so neither is
/// obtained by subtracting from one.
///
/// The mass in state `j` is `r[j] * advance^j`, where `r[j]` is the mass that
/// was in state 0 `j` steps ago, so a step is a ring rotation plus one dot
/// product. `r` and the powers are kept with wide exponents because a long
/// run can sit thousands of orders of magnitude below state 0.
fn propagate(spec: &MarkovSpec, n: usize) -> (ExtendedProb, ExtendedProb) {
    let l = spec.l;
    let (reset, advance) = spec.step_probs();
    let mut powers = Vec::with_capacity(l + 1);
    let mut acc = ExtendedProb::ONE;
    let step = ExtendedProb::from_f64(advance);
    for _ in 0..=l {
        powers.push(acc);
        acc *= step;
    }
    let mut r: VecDeque<ExtendedProb> = std::iter::once(ExtendedProb::ONE)
        .chain(std::iter::repeat_n(ExtendedProb::ZERO, l - 1))
        .collect();
    let reset = ExtendedProb::from_f64(reset);
    let mut absorbed = ExtendedProb::ZERO;
    for _ in 0..n {
        absorbed += r[l - 1] * powers[l];
        let total = weighted_sum(&r, &powers);
        if total.is_zero() {
            return (absorbed, total);
        }
        r.pop_back();
        r.push_front(reset * total);
    }
    (absorbed, weighted_sum(&r, &powers))
}

/// `sum_j r[j] * powers[j]`, accumulated relative to the largest term seen.
fn weighted_sum(r: &VecDeque<ExtendedProb>, powers: &[ExtendedProb]) -> ExtendedProb {
    let mut top = i64::MIN;
    let mut sum = 0.0;
    for (x, w) in r.iter().zip(powers) {
        if x.is_zero() || w.is_zero() {
            continue;
        }
        let e = x.exponent() + w.exponent();
        let m = x.mantissa() * w.mantissa();
        if e > top {
            sum = if top == i64::MIN { m } else { sum * pow2(top - e) + m };
            top = e;
        } else {
            sum += m * pow2(e - top);
        }
    }
    if top == i64::MIN {
        ExtendedProb::ZERO
    } else {
        ExtendedProb::from_parts(sum, top)
    }
}

/// `2^e` for `e <= 0`, flushing below the normal range to zero.
fn pow2(e: i64) -> f64 {
    if e < -1022 {
        0.0
    } else {
        f64::from_bits(((e + 1023) as u64) << 52)
    }
}

fn check_len(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("period length n must be at least 1"));
    }
    Ok(())
}

/// Probability that an adversary with mining share `alpha` makes an `n`-block
/// period of a `p`-congested chain contain `L` consecutive uncongested blocks.
pub fn uncongestion_attack_prob_consec(l: usize, n: usize, alpha: f64, p: f64) -> Result<ExtendedProb> {
    check_len(n)?;
    let spec = MarkovSpec::new(l, alpha, p, AttackDirection::Uncongestion)?;
    Ok(propagate(&spec, n).0)
}

/// Probability that the adversary keeps every run of uncongested blocks in an
/// `n`-block period shorter than `L`.
pub fn congestion_attack_prob_consec(l: usize, n: usize, alpha: f64, p: f64) -> Result<ExtendedProb> {
    check_len(n)?;
    let spec = MarkovSpec::new(l, alpha, p, AttackDirection::Congestion)?;
    Ok(propagate(&spec, n).1)
}

/// Dispatches on `direction`.
pub fn consec_attack_prob(
    direction: AttackDirection,
    l: usize,
    n: usize,
    alpha: f64,
    p: f64,
) -> Result<ExtendedProb> {
    match direction {
        AttackDirection::Uncongestion => uncongestion_attack_prob_consec(l, n, alpha, p),
        AttackDirection::Congestion => congestion_attack_prob_consec(l, n, alpha, p),
    }
}
