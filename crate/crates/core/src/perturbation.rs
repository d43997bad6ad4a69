//! Bernoulli(1/2) pseudo-rewards and their per-arm binomial aggregates.

use rand::RngCore;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{PheError, Result};
use crate::rng::RngStream;

/// Draws from `B(n, 1/2)` in expected constant time.
///
/// Up to 64 trials the draw is the popcount of `n` fair random bits. Larger
/// counts use the BTPE rejection sampler, whose expected cost does not grow
/// with `n`.
pub fn sample_binomial(n: u64, rng: &mut RngStream) -> u64 {
    match n {
        0 => 0,
        1..=64 => {
            let bits = rng.next_u64();
            let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            u64::from((bits & mask).count_ones())
        }
        _ => Binomial::new(n, 0.5).expect("p = 1/2 is valid").sample(rng),
    }
}

/// Perturbation scale `a`: the number of pseudo-rewards per observed reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    a: f64,
}

impl PerturbationConfig {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(PheError::InvalidParameter(format!(
                "perturbation scale must be positive, got {a}"
            )));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn is_integral(&self) -> bool {
        self.a.fract() == 0.0
    }

    /// Number of pseudo-rewards attached to an arm with `pulls` observations:
    /// `a * pulls` for integral `a`, otherwise `ceil(a * pulls)`.
    pub fn pseudo_count(&self, pulls: u64) -> u64 {
        if self.is_integral() {
            self.a as u64 * pulls
        } else {
            (self.a * pulls as f64).ceil() as u64
        }
    }

    /// Sum of the pseudo-rewards of an arm pulled `pulls` times.
    pub fn pseudo_reward_count(&self, pulls: u64, rng: &mut RngStream) -> u64 {
        sample_binomial(self.pseudo_count(pulls), rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_choose(n: u64, k: u64) -> f64 {
        let lf = |m: u64| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
        lf(n) - lf(k) - lf(n - k)
    }

    /// Chi-square upper-tail probability by the Wilson-Hilferty cube-root
    /// normal approximation.
    fn chi_square_sf(x: f64, dof: f64) -> f64 {
        let z = ((x / dof).cbrt() - (1.0 - 2.0 / (9.0 * dof))) / (2.0 / (9.0 * dof)).sqrt();
        0.5 * erfc(z / std::f64::consts::SQRT_2)
    }

    // Abramowitz-Stegun 7.1.26; plenty for a p > 0.001 decision.
    fn erfc(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc(-x);
        }
        let t = 1.0 / (1.0 + 0.327_591_1 * x);
        let poly =
            t * (0.254_829_592 + t * (-0.284_496_736 + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
        poly * (-x * x).exp()
    }

    #[test]
    fn zero_trials() {
        let mut rng = RngStream::new(0);
        assert_eq!(sample_binomial(0, &mut rng), 0);
    }

    #[test]
    fn single_trial_is_fair() {
        let mut rng = RngStream::new(1);
        let n = 100_000;
        let ones: u64 = (0..n).map(|_| sample_binomial(1, &mut rng)).sum();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.005, "freq {freq}");
    }

    #[test]
    fn forty_trials_match_pmf() {
        let mut rng = RngStream::new(2);
        let draws = 100_000;
        let n = 40u64;
        let mut counts = vec![0u64; n as usize + 1];
        for _ in 0..draws {
            counts[sample_binomial(n, &mut rng) as usize] += 1;
        }
        let mean = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| k as f64 * c as f64)
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 20.0).abs() < 0.05, "mean {mean}");

        // Pool the tails so every cell expects at least 5 draws.
        let pmf: Vec<f64> = (0..=n)
            .map(|k| (ln_choose(n, k) - n as f64 * 2f64.ln()).exp())
            .collect();
        let mut cells: Vec<(f64, f64)> = Vec::new();
        let (mut obs, mut exp) = (0.0, 0.0);
        for k in 0..=n as usize {
            obs += counts[k] as f64;
            exp += pmf[k] * draws as f64;
            if exp >= 5.0 && (n as usize - k) > 0 {
                cells.push((obs, exp));
                obs = 0.0;
                exp = 0.0;
            }
        }
        if let Some(last) = cells.last_mut() {
            last.0 += obs;
            last.1 += exp;
        }
        let stat: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
        let p = chi_square_sf(stat, (cells.len() - 1) as f64);
        assert!(p > 0.001, "chi2 {stat} p {p}");
    }

    #[test]
    fn large_counts_have_the_right_moments() {
        let mut rng = RngStream::new(3);
        let n = 10_000u64;
        let draws = 20_000;
        let xs: Vec<f64> = (0..draws).map(|_| sample_binomial(n, &mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        // sd of the mean is 50 / sqrt(20000) ~ 0.35
        assert!((mean - 5000.0).abs() < 1.2, "mean {mean}");
        assert!((var / 2500.0 - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn always_within_range() {
        let mut rng = RngStream::new(4);
        for n in [0u64, 1, 2, 7, 63, 64, 65, 100, 1000] {
            for _ in 0..200 {
                assert!(sample_binomial(n, &mut rng) <= n);
            }
        }
    }

    #[test]
    fn pseudo_counts() {
        let two = PerturbationConfig::new(2.0).unwrap();
        assert_eq!(two.pseudo_count(3), 6);
        let half = PerturbationConfig::new(0.5).unwrap();
        assert_eq!(half.pseudo_count(3), 2);
        let one = PerturbationConfig::new(1.0).unwrap();
        assert_eq!(one.pseudo_count(0), 0);
        let mut rng = RngStream::new(0);
        assert_eq!(one.pseudo_reward_count(0, &mut rng), 0);
        for _ in 0..100 {
            assert!(half.pseudo_reward_count(3, &mut rng) <= 2);
            assert!(two.pseudo_reward_count(3, &mut rng) <= 6);
        }
    }

    #[test]
    fn rejects_non_positive_scale() {
        assert!(PerturbationConfig::new(0.0).is_err());
        assert!(PerturbationConfig::new(-1.0).is_err());
        assert!(PerturbationConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn same_lineage_same_draws() {
        let cfg = PerturbationConfig::new(1.0).unwrap();
        let mut a = RngStream::for_round(1, 2, 3, 4);
        let mut b = RngStream::for_round(1, 2, 3, 4);
        for pulls in [5u64, 50, 500] {
            assert_eq!(
                cfg.pseudo_reward_count(pulls, &mut a),
                cfg.pseudo_reward_count(pulls, &mut b)
            );
        }
    }

    #[test]
    fn bernoulli_half_has_maximum_variance() {
        for i in 0..=100 {
            let mu = i as f64 / 100.0;
            assert!(mu * (1.0 - mu) <= 0.25 + 1e-15);
        }
    }
}
