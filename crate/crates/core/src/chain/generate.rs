use rand::distributions::{Bernoulli, Distribution};
use rand::Rng;

use super::{CongestionVector, ControlVector};
use crate::error::{check_probability, Error, Result};
use crate::rng::{self, Purpose};

/// Overwrites `out` with independent Bernoulli(`prob`) draws.
///
/// `prob` must already be validated.
pub fn fill_bits<R: Rng + ?Sized>(rng: &mut R, prob: f64, out: &mut [bool]) {
    let dist = Bernoulli::new(prob).expect("probability validated by caller");
    for bit in out.iter_mut() {
        *bit = dist.sample(rng);
    }
}

/// Draws a congestion vector of a `p`-congested chain: each block is
/// congested independently with probability `p`.
pub fn generate_congestion_vector(n: usize, p: f64, seed: u64) -> Result<CongestionVector> {
    if n == 0 {
        return Err(Error::param("period length must be at least 1"));
    }
    check_probability("p", p)?;
    let mut bits = vec![false; n];
    fill_bits(&mut rng::stream(seed, Purpose::Congestion, 0), p, &mut bits);
    CongestionVector::new(bits)
}

/// Draws which blocks the adversary mines: each independently with
/// probability `alpha`. Uses a stream disjoint from
/// [`generate_congestion_vector`] for the same seed.
pub fn sample_control_vector(n: usize, alpha: f64, seed: u64) -> Result<ControlVector> {
    if n == 0 {
        return Err(Error::param("period length must be at least 1"));
    }
    check_probability("alpha", alpha)?;
    let mut bits = vec![false; n];
    fill_bits(&mut rng::stream(seed, Purpose::Control, 0), alpha, &mut bits);
    Ok(ControlVector::new(bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(bits: &[bool]) -> f64 {
        bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64
    }

    #[test]
    fn extreme_probabilities() {
        let v = generate_congestion_vector(5, 0.0, 3).unwrap();
        assert_eq!(v.bits(), &[false; 5]);
        let v = generate_congestion_vector(5, 1.0, 3).unwrap();
        assert_eq!(v.bits(), &[true; 5]);
        let c = sample_control_vector(4, 0.0, 3).unwrap();
        assert_eq!(c.bits(), &[false; 4]);
        let c = sample_control_vector(4, 1.0, 3).unwrap();
        assert_eq!(c.bits(), &[true; 4]);
    }

    #[test]
    fn invalid_parameters() {
        assert!(generate_congestion_vector(0, 0.5, 1).is_err());
        assert!(generate_congestion_vector(3, 1.5, 1).is_err());
        assert!(generate_congestion_vector(3, -0.1, 1).is_err());
        assert!(sample_control_vector(3, 2.0, 1).is_err());
        assert!(sample_control_vector(0, 0.2, 1).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_congestion_vector(1000, 0.4, 11).unwrap();
        let b = generate_congestion_vector(1000, 0.4, 11).unwrap();
        let c = generate_congestion_vector(1000, 0.4, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn congestion_and_control_streams_are_independent() {
        let pe = generate_congestion_vector(256, 0.5, 5).unwrap();
        let ctrl = sample_control_vector(256, 0.5, 5).unwrap();
        assert_ne!(pe.bits(), ctrl.bits());
    }

    #[test]
    fn sample_mean_within_three_sigma() {
        // sigma = sqrt(p (1 - p) / n) = 0.001129 for p = 0.85, n = 1e5
        for seed in [0, 1, 2] {
            let v = generate_congestion_vector(100_000, 0.85, seed).unwrap();
            let m = mean(v.bits());
            assert!((0.846..=0.854).contains(&m), "mean {m}");
        }
        let sigma = (0.33f64 * 0.67 / 1e5).sqrt();
        let c = sample_control_vector(100_000, 0.33, 9).unwrap();
        assert!((mean(c.bits()) - 0.33).abs() <= 3.0 * sigma);
    }

    #[test]
    fn frequency_within_four_sigma() {
        let n = 20_000;
        for p in [0.15, 0.5, 0.85] {
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            for seed in 0..5 {
                let v = generate_congestion_vector(n, p, seed).unwrap();
                assert!((mean(v.bits()) - p).abs() <= 4.0 * sigma);
                let c = sample_control_vector(n, p, seed).unwrap();
                assert!((mean(c.bits()) - p).abs() <= 4.0 * sigma);
            }
        }
    }
}
