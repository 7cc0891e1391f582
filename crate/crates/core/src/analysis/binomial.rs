//! Binomial probabilities in log space.
//!
//! Each term uses the saddle-point form of the binomial density (Loader's
//! `stirlerr`/`bd0` decomposition), which keeps full relative accuracy for
//! large `n` where the naive `lgamma` difference cancels badly.

use crate::error::{check_probability, Error, Result};
use crate::extended::ExtendedProb;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Which side of `k` to sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `P(X >= k)`
    AtLeast,
    /// `P(X < k)`
    Below,
}

/// `ln(n!) - ((n + 1/2) ln n - n + ln sqrt(2 pi))`, the Stirling remainder.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        // n! is exact in f64 here and the cancellation costs ~1e-15 absolute
        let ln_fact: f64 = (2..=n).map(|i| (i as f64).ln()).sum();
        let x = n as f64;
        return if n == 0 { 0.0 } else { ln_fact - (x + 0.5) * x.ln() + x - LN_SQRT_2PI };
    }
    let x = n as f64;
    let xx = x * x;
    if n > 500 {
        (S0 - S1 / xx) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance term `x ln(x / np) + np - x`, with a series near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let vv = v * v;
        for j in 1..1000 {
            ej *= vv;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `ln P(X = x)` for `X ~ Bin(n, p)`; `-inf` for impossible outcomes.
pub fn ln_pmf(n: u64, p: f64, x: u64) -> f64 {
    let q = 1.0 - p;
    if x > n {
        return f64::NEG_INFINITY;
    }
    if p == 0.0 {
        return if x == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if x == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let nf = n as f64;
    if x == 0 {
        return nf * (-p).ln_1p();
    }
    if x == n {
        return nf * p.ln();
    }
    let xf = x as f64;
    let yf = (n - x) as f64;
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(yf, nf * q);
    let lf = LN_2PI + xf.ln() + (-xf / nf).ln_1p();
    lc - 0.5 * lf
}

/// `P(X >= k)` or `P(X < k)` for `X ~ Bin(n, p)`, summed term by term from
/// the largest term with Neumaier compensation. `k` may be `0..=n+1`.
pub fn binomial_tail(n: u64, p: f64, k: u64, tail: Tail) -> Result<ExtendedProb> {
    check_probability("p", p)?;
    if k > n + 1 {
        return Err(Error::param(format!("tail index k={k} exceeds n+1={}", n + 1)));
    }
    let (lo, hi) = match tail {
        Tail::AtLeast if k > n => return Ok(ExtendedProb::ZERO),
        Tail::AtLeast => (k, n),
        Tail::Below if k == 0 => return Ok(ExtendedProb::ZERO),
        Tail::Below => (0, k - 1),
    };
    // terms are unimodal, so the largest one in [lo, hi] is the clamped mode
    let mode = (((n + 1) as f64 * p).floor() as u64).min(n).clamp(lo, hi);
    let peak = ln_pmf(n, p, mode);
    if peak == f64::NEG_INFINITY {
        return Ok(ExtendedProb::ZERO);
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut add = |t: f64| {
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
    };
    add(1.0);
    // walk outwards until the terms no longer register
    for x in (mode + 1)..=hi {
        let t = (ln_pmf(n, p, x) - peak).exp();
        add(t);
        if t < 1e-20 {
            break;
        }
    }
    for x in (lo..mode).rev() {
        let t = (ln_pmf(n, p, x) - peak).exp();
        add(t);
        if t < 1e-20 {
            break;
        }
    }
    Ok(ExtendedProb::from_ln(peak) * ExtendedProb::from_f64(sum + comp))
}
