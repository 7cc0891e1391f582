//! Attack success under the `p`-congested model.
//!
//! The adversary mines each block independently with probability `alpha` and
//! may replace the signal of every block it mines. All four protocols are
//! monotone in the number of uncongested blocks at fixed positions, so the
//! best manipulation is to force every mined block to the attack's target
//! value; [`apply_adversary`] does exactly that.

use rand::distributions::{Bernoulli, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::AttackDirection;
use crate::chain::{CongestionVector, ControlVector};
use crate::error::{check_probability, Error, Result};
use crate::protocols::{PeriodStatus, ProtocolSpec};
use crate::rng::{self, derive_seed, Purpose};

/// Largest period [`brute_force_attack_prob`] will enumerate.
pub const BRUTE_FORCE_MAX_N: usize = 14;

/// Forces every controlled block to the attack's target value.
pub fn apply_adversary(pe: &CongestionVector, ctrl: &ControlVector, direction: AttackDirection) -> Result<CongestionVector> {
    if pe.len() != ctrl.len() {
        return Err(Error::param(format!(
            "congestion vector has {} blocks but control vector has {}",
            pe.len(),
            ctrl.len()
        )));
    }
    let target = direction.target_bit();
    let bits = pe
        .bits()
        .iter()
        .zip(ctrl.bits())
        .map(|(&b, &mine)| if mine { target } else { b })
        .collect();
    CongestionVector::new(bits)
}

/// Whether the manipulated period `bits` is a win for the adversary.
pub fn attack_succeeds(spec: &ProtocolSpec, direction: AttackDirection, bits: &[bool]) -> bool {
    let status = spec.scan(bits).status;
    match direction {
        AttackDirection::Uncongestion => status == PeriodStatus::Uncongested,
        AttackDirection::Congestion => status == PeriodStatus::Congested,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub spec: ProtocolSpec,
    pub direction: AttackDirection,
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
}

impl AttackScenario {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.n == 0 {
            return Err(Error::param("period length n must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        check_probability("alpha", self.alpha)?;
        check_probability("p", self.p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackEstimate {
    pub successes: u64,
    pub trials: u64,
    pub success_rate: f64,
    pub std_error: f64,
}

impl AttackEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let r = successes as f64 / trials as f64;
        AttackEstimate {
            successes,
            trials,
            success_rate: r,
            std_error: (r * (1.0 - r) / trials as f64).sqrt(),
        }
    }

    /// One-sided 95% upper bound `3 / trials`, given only when nothing
    /// succeeded and the standard error is uninformative.
    pub fn rule_of_three(&self) -> Option<f64> {
        (self.successes == 0).then(|| 3.0 / self.trials as f64)
    }
}

/// Whether one trial, drawn from streams `(seed, *, index)`, is a success.
/// `pe` and `ctrl` are scratch buffers of length `n`.
fn run_trial(sc: &AttackScenario, index: u64, pe: &mut [bool]) -> bool {
    let congested = Bernoulli::new(sc.p).expect("validated");
    let mined = Bernoulli::new(sc.alpha).expect("validated");
    let mut pe_rng = rng::stream(sc.seed, Purpose::Congestion, index);
    let mut ctrl_rng = rng::stream(sc.seed, Purpose::Control, index);
    let target = sc.direction.target_bit();
    for bit in pe.iter_mut() {
        let honest = congested.sample(&mut pe_rng);
        *bit = if mined.sample(&mut ctrl_rng) { target } else { honest };
    }
    attack_succeeds(&sc.spec, sc.direction, pe)
}

/// Monte Carlo estimate of the attack success rate. Trial `i` draws its
/// congestion and control vectors from streams keyed by `(seed, i)`, so the
/// result does not depend on how rayon schedules the trials.
pub fn simulate_attack(sc: &AttackScenario) -> Result<AttackEstimate> {
    sc.validate()?;
    let successes = (0..sc.trials)
        .into_par_iter()
        .map_init(|| vec![false; sc.n], |buf, i| u64::from(run_trial(sc, i, buf)))
        .sum();
    Ok(AttackEstimate::from_counts(successes, sc.trials))
}

/// Exact success probability by enumerating every block outcome (mined,
/// honest congested, honest uncongested) for periods up to
/// [`BRUTE_FORCE_MAX_N`] blocks.
pub fn brute_force_attack_prob(
    spec: &ProtocolSpec,
    direction: AttackDirection,
    n: usize,
    alpha: f64,
    p: f64,
) -> Result<f64> {
    spec.validate()?;
    check_probability("alpha", alpha)?;
    check_probability("p", p)?;
    if n == 0 || n > BRUTE_FORCE_MAX_N {
        return Err(Error::param(format!(
            "brute force needs 1 <= n <= {BRUTE_FORCE_MAX_N}, got {n}"
        )));
    }
    let outcomes = [
        (alpha, direction.target_bit()),
        ((1.0 - alpha) * p, true),
        ((1.0 - alpha) * (1.0 - p), false),
    ];
    let mut bits = vec![false; n];
    let mut acc = Neumaier::default();
    enumerate(spec, direction, &outcomes, &mut bits, 0, 1.0, &mut acc);
    Ok(acc.total())
}

fn enumerate(
    spec: &ProtocolSpec,
    direction: AttackDirection,
    outcomes: &[(f64, bool); 3],
    bits: &mut [bool],
    pos: usize,
    weight: f64,
    acc: &mut Neumaier,
) {
    if pos == bits.len() {
        if attack_succeeds(spec, direction, bits) {
            acc.add(weight);
        }
        return;
    }
    for &(w, bit) in outcomes {
        if w > 0.0 {
            bits[pos] = bit;
            enumerate(spec, direction, outcomes, bits, pos + 1, weight * w, acc);
        }
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let s = self.sum + x;
        self.comp += if self.sum.abs() >= x.abs() { (self.sum - s) + x } else { (x - s) + self.sum };
        self.sum = s;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Period length.
    Period,
    /// Window length of a sliding-window spec.
    Window,
    /// Required uncongested blocks of a sliding-window spec.
    K,
    /// Run length of a consecutive-run spec.
    L,
    Alpha,
}

impl SweepAxis {
    /// Returns `template` with this axis set to `value`.
    pub fn apply(self, template: &AttackScenario, value: f64) -> Result<AttackScenario> {
        let mut sc = *template;
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value <= usize::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::param(format!("sweep value {value} is not a whole number")))
            }
        };
        match (self, &mut sc.spec) {
            (SweepAxis::Period, _) => sc.n = count()?,
            (SweepAxis::Alpha, _) => sc.alpha = value,
            (SweepAxis::Window, ProtocolSpec::SlidingWindow { n, .. }) => *n = count()?,
            (SweepAxis::K, ProtocolSpec::SlidingWindow { k, .. }) => *k = count()?,
            (SweepAxis::L, ProtocolSpec::LConsecutive { l }) => *l = count()?,
            (axis, spec) => {
                return Err(Error::param(format!("cannot sweep {axis:?} for protocol {spec}")));
            }
        }
        sc.validate()?;
        Ok(sc)
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub estimate: AttackEstimate,
}

/// Simulates `template` at each value of `axis`. Point `i` uses the seed
/// `derive_seed(template.seed, i)`.
pub fn sweep(template: &AttackScenario, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    let scenarios = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut sc = axis.apply(template, v)?;
            sc.seed = derive_seed(template.seed, i as u64);
            Ok(sc)
        })
        .collect::<Result<Vec<_>>>()?;
    scenarios
        .iter()
        .zip(values)
        .map(|(sc, &axis_value)| {
            Ok(SweepRow {
                axis_value,
                estimate: simulate_attack(sc)?,
            })
        })
        .collect()
}
