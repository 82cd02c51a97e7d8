use rand::Rng;

use crate::error::{Error, Result};

/// Randomized response calibrated to `epsilon0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrConfig {
    epsilon0: f64,
    d_eps: f64,
}

impl RrConfig {
    pub fn new(epsilon0: f64) -> Result<Self> {
        if !(epsilon0 > 0.0 && epsilon0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "randomized response needs epsilon0 > 0, got {epsilon0}"
            )));
        }
        // (e^x + 1)/(e^x - 1) written as coth(x/2) so large x does not overflow
        let d_eps = 1.0 / (epsilon0 / 2.0).tanh();
        Ok(RrConfig { epsilon0, d_eps })
    }

    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    /// Magnitude of every response.
    pub fn d_eps(&self) -> f64 {
        self.d_eps
    }

    /// Probability of answering `+d_eps` for a private `value` in `[-1, 1]`.
    pub fn prob_plus(&self, value: f64) -> f64 {
        0.5 * (1.0 + value / self.d_eps)
    }
}

/// Report `+d_eps` with probability `(1 + value/d_eps)/2`, else `-d_eps`.
///
/// The report is an unbiased estimate of `value`.
pub fn randomized_response<R: Rng + ?Sized>(value: f64, rr: &RrConfig, rng: &mut R) -> Result<f64> {
    if !(-1.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter(format!(
            "randomized response input must lie in [-1,1], got {value}"
        )));
    }
    Ok(respond(value, rr, rng))
}

#[inline]
pub(crate) fn respond<R: Rng + ?Sized>(value: f64, rr: &RrConfig, rng: &mut R) -> f64 {
    if rng.random::<f64>() < rr.prob_plus(value) {
        rr.d_eps
    } else {
        -rr.d_eps
    }
}

/// How a simulated user perturbs a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Randomized(RrConfig),
    /// Report the private value itself. Test hook; provides no privacy.
    Truthful,
}

impl Perturbation {
    pub fn epsilon(&self) -> f64 {
        match self {
            Perturbation::Randomized(rr) => rr.epsilon0(),
            Perturbation::Truthful => f64::INFINITY,
        }
    }

    #[inline]
    pub(crate) fn apply<R: Rng + ?Sized>(&self, value: f64, rng: &mut R) -> f64 {
        match self {
            Perturbation::Randomized(rr) => respond(value, rr, rng),
            Perturbation::Truthful => value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn d_eps_at_ln3() {
        let rr = RrConfig::new(3f64.ln()).unwrap();
        assert!((rr.d_eps() - 2.0).abs() < 1e-12);
        assert!((rr.prob_plus(1.0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn d_eps_limits() {
        assert!(RrConfig::new(1e-3).unwrap().d_eps() > 1000.0);
        let big = RrConfig::new(50.0).unwrap();
        assert!(big.d_eps() >= 1.0 && big.d_eps() - 1.0 < 1e-12);
        assert!(RrConfig::new(0.0).is_err());
    }

    #[test]
    fn rejects_out_of_range_input() {
        let rr = RrConfig::new(1.0).unwrap();
        assert!(randomized_response(1.5, &rr, &mut rng_from_seed(0)).is_err());
        let out = randomized_response(-1.0, &rr, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out.abs(), rr.d_eps());
    }

    #[test]
    fn zero_input_is_a_fair_coin() {
        let rr = RrConfig::new(1.0).unwrap();
        let mut rng = rng_from_seed(42);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| randomized_response(0.0, &rr, &mut rng).unwrap())
            .sum::<f64>()
            / draws as f64;
        let sigma = rr.d_eps() / (draws as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean}, 3σ {}", 3.0 * sigma);
    }
}
