//! Attack probabilities in closed form.
//!
//! The consecutive-run protocol admits exact values through an absorbing
//! Markov chain. For the sliding window there is no tractable closed form, so
//! two upper bounds are provided: a union bound over windows for the
//! uncongestion attack and an independence bound over disjoint windows for
//! the congestion attack. Every result is an [`ExtendedProb`] so values far
//! below `f64` underflow are still reported.

mod binomial;
mod markov;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::extended::ExtendedProb;

pub use binomial::{binomial_tail, ln_pmf, Tail};
pub use markov::{
    build_matrix, congestion_attack_prob_consec, consec_attack_prob, uncongestion_attack_prob_consec, MarkovSpec,
};

/// What the adversary is trying to make a period look like.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackDirection {
    /// Make the period look congested (delay the deadline).
    Congestion,
    /// Make the period look uncongested (keep the deadline short).
    Uncongestion,
}

impl AttackDirection {
    /// Whether a manipulated block is forced to congested.
    pub fn target_bit(self) -> bool {
        self == AttackDirection::Congestion
    }
}

impl FromStr for AttackDirection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "congestion" => Ok(AttackDirection::Congestion),
            "uncongestion" => Ok(AttackDirection::Uncongestion),
            other => Err(Error::param(format!(
                "unknown direction {other:?} (expected congestion or uncongestion)"
            ))),
        }
    }
}

impl fmt::Display for AttackDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackDirection::Congestion => "congestion",
            AttackDirection::Uncongestion => "uncongestion",
        })
    }
}

fn check_window(big_n: usize, k: usize, n: usize, alpha: f64, p: f64) -> Result<()> {
    if big_n == 0 || k == 0 || k > big_n {
        return Err(Error::param(format!("sliding window needs 1 <= K <= N, got N={big_n}, K={k}")));
    }
    if big_n > n {
        return Err(Error::param(format!(
            "period shorter than window: n={n} < N={big_n}"
        )));
    }
    check_probability("alpha", alpha)?;
    check_probability("p", p)
}

/// Union bound on the uncongestion attack against `sw:N,K` over an `n`-block
/// period: `(n - N + 1) * P(Bin(N, q) >= K)` with `q = alpha + (1-p)(1-alpha)`,
/// the chance a block ends up uncongested. May exceed 1.
pub fn uncongestion_bound_sw(big_n: usize, k: usize, n: usize, alpha: f64, p: f64) -> Result<ExtendedProb> {
    check_window(big_n, k, n, alpha, p)?;
    let q = alpha + (1.0 - p) * (1.0 - alpha);
    let per_window = binomial_tail(big_n as u64, q.min(1.0), k as u64, Tail::AtLeast)?;
    Ok(ExtendedProb::from_f64((n - big_n + 1) as f64) * per_window)
}

/// Independence bound on the congestion attack against `sw:N,K` over an
/// `n`-block period: each of the `floor(n/N)` disjoint windows must hold fewer
/// than `K` uncongested blocks, where a block stays uncongested with
/// probability `q = (1-p)(1-alpha)`.
pub fn congestion_bound_sw(big_n: usize, k: usize, n: usize, alpha: f64, p: f64) -> Result<ExtendedProb> {
    check_window(big_n, k, n, alpha, p)?;
    let q = (1.0 - p) * (1.0 - alpha);
    let per_window = binomial_tail(big_n as u64, q, k as u64, Tail::Below)?;
    Ok(per_window.powu((n / big_n) as u64))
}

/// Dispatches on `direction`.
pub fn sw_bound(direction: AttackDirection, big_n: usize, k: usize, n: usize, alpha: f64, p: f64) -> Result<ExtendedProb> {
    match direction {
        AttackDirection::Uncongestion => uncongestion_bound_sw(big_n, k, n, alpha, p),
        AttackDirection::Congestion => congestion_bound_sw(big_n, k, n, alpha, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn direction_text() {
        for d in [AttackDirection::Congestion, AttackDirection::Uncongestion] {
            assert_eq!(d.to_string().parse::<AttackDirection>().unwrap(), d);
        }
        assert!("both".parse::<AttackDirection>().is_err());
        assert_eq!(serde_json::to_string(&AttackDirection::Congestion).unwrap(), "\"congestion\"");
    }

    #[test]
    fn small_bounds() {
        let q: f64 = 0.4305;
        let v = uncongestion_bound_sw(2, 2, 3, 0.33, 0.85).unwrap().to_f64();
        assert!(rel(v, 2.0 * q * q) < 1e-12 && (v - 0.370661).abs() < 1e-6);
        let v = congestion_bound_sw(1, 1, 1, 0.33, 0.15).unwrap().to_f64();
        assert!((v - 0.4305).abs() < 1e-12);
        for (big_n, n) in [(10, 5), (2, 1)] {
            let err = uncongestion_bound_sw(big_n, 1, n, 0.3, 0.3).unwrap_err();
            assert!(err.to_string().contains("period shorter than window"));
            assert!(congestion_bound_sw(big_n, 1, n, 0.3, 0.3).is_err());
        }
        assert!(uncongestion_bound_sw(3, 4, 10, 0.3, 0.3).is_err());
    }

    // reference values from a 50-digit summation of the same sums
    const TABLE: [(usize, usize, f64, f64); 4] = [
        (6450, 3225, 1.600_894_567_58e-24, 1.440_057_782_77e-29),
        (3225, 1612, 1.238_324_375_4e-10, 8.056_268_508_74e-16),
        (1612, 815, 7.138_787_201_47e-5, 1.081_309_216_22e-7),
        (806, 421, 8.870_077_634_67e-3, 3.155_136_517_74e-3),
    ];

    #[test]
    fn window_bounds_match_high_precision_reference() {
        for (big_n, k, unc, con) in TABLE {
            let u = uncongestion_bound_sw(big_n, k, 90_300, 0.33, 0.85).unwrap().to_f64();
            let c = congestion_bound_sw(big_n, k, big_n, 0.33, 0.15).unwrap().to_f64();
            assert!(rel(u, unc) < 1e-9, "N={big_n}: {u} vs {unc}");
            assert!(rel(c, con) < 1e-9, "N={big_n}: {c} vs {con}");
        }
    }

    #[test]
    fn congestion_bound_compounds_over_disjoint_windows() {
        let one = congestion_bound_sw(806, 421, 806, 0.33, 0.15).unwrap();
        let many = congestion_bound_sw(806, 421, 90_300, 0.33, 0.15).unwrap();
        assert!((many.log10() - 112.0 * one.log10()).abs() < 1e-9);
        assert!(many.log10() < -250.0);
    }

    proptest! {
        #[test]
        fn bounds_dominate_exact_consecutive(l in 1usize..8, extra in 0usize..8, alpha in 0.0f64..=1.0, p in 0.0f64..=1.0) {
            // with N = K = L the window rule is the run rule
            let n = l + extra.min(l - 1);
            let exact_u = uncongestion_attack_prob_consec(l, n, alpha, p).unwrap().to_f64();
            let bound_u = uncongestion_bound_sw(l, l, n, alpha, p).unwrap().to_f64();
            prop_assert!(bound_u >= exact_u - 1e-12);
            let exact_c = congestion_attack_prob_consec(l, n, alpha, p).unwrap().to_f64();
            let bound_c = congestion_bound_sw(l, l, n, alpha, p).unwrap().to_f64();
            prop_assert!(bound_c >= exact_c - 1e-12);
        }
    }
}
