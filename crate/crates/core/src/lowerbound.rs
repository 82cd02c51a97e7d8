//! Marginal-to-ranking embeddings behind the privacy lower bounds, with exact
//! checks of the two inequalities that relate them.
//!
//! Items are 0-based here. A sign vector `x ∈ {-1,+1}^d` maps to a ranking on
//! `2d + t` items that fixes the middle block `d..d+t` and swaps items `j` and
//! `j + d + t` exactly when `x_j = -1`.
//!
//! With that embedding, [`recover_rho`] returns `-x`; [`decode_signs`] is the
//! sign-consistent inverse (`decode_signs(embed_pi(x)) == x`) and is the vector
//! the lower-inequality check uses.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{kendall_tau, Ranking};
use crate::seed::derive_rng;

fn check_signs(x: &[i8], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    if let Some(bad) = x.iter().find(|&&v| v != 1 && v != -1) {
        return Err(Error::InvalidParameter(format!("sign vector entry {bad} is not ±1")));
    }
    Ok(())
}

fn check_dims(d: usize, t: usize) -> Result<()> {
    if d == 0 || t == 0 {
        return Err(Error::InvalidParameter(format!("need d, t >= 1, got d={d}, t={t}")));
    }
    Ok(())
}

/// Ranking on `2d + t` items encoding the signs of `x`.
pub fn embed_pi(x: &[i8], d: usize, t: usize) -> Result<Ranking> {
    check_dims(d, t)?;
    check_signs(x, d)?;
    let mut positions: Vec<usize> = (0..2 * d + t).collect();
    for (j, &sign) in x.iter().enumerate() {
        if sign == -1 {
            positions[j] = j + d + t;
            positions[j + d + t] = j;
        }
    }
    Ranking::from_positions(positions)
}

/// `ρ(σ)_j = -1` if `σ` places `j` before `j + d + t`, else `+1`.
pub fn recover_rho(sigma: &Ranking, d: usize, t: usize) -> Result<Vec<i8>> {
    check_dims(d, t)?;
    if sigma.len() != 2 * d + t {
        return Err(Error::DimensionMismatch {
            expected: 2 * d + t,
            got: sigma.len(),
        });
    }
    Ok((0..d)
        .map(|j| if sigma.prefers(j, j + d + t) { -1 } else { 1 })
        .collect())
}

/// Inverse of [`embed_pi`]: `-ρ(σ)`.
pub fn decode_signs(sigma: &Ranking, d: usize, t: usize) -> Result<Vec<i8>> {
    Ok(recover_rho(sigma, d, t)?.into_iter().map(|v| -v).collect())
}

/// `n` sign vectors of dimension `d` and the pad length `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginalInstance {
    pub d: usize,
    pub t: usize,
    pub xs: Vec<Vec<i8>>,
}

impl MarginalInstance {
    pub fn new(d: usize, t: usize, xs: Vec<Vec<i8>>) -> Result<Self> {
        check_dims(d, t)?;
        if xs.is_empty() {
            return Err(Error::InvalidParameter("need at least one sign vector".into()));
        }
        for x in &xs {
            check_signs(x, d)?;
        }
        Ok(MarginalInstance { d, t, xs })
    }

    pub fn random<R: Rng + ?Sized>(d: usize, t: usize, n: usize, rng: &mut R) -> Result<Self> {
        let xs = (0..n).map(|_| random_signs(d, rng)).collect();
        MarginalInstance::new(d, t, xs)
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    /// Coordinate-wise sum of the sign vectors.
    fn sum(&self) -> Vec<i64> {
        let mut s = vec![0i64; self.d];
        for x in &self.xs {
            for (acc, &v) in s.iter_mut().zip(x) {
                *acc += v as i64;
            }
        }
        s
    }

    /// Sum of Kendall distances from `sigma` to every embedded vector.
    fn total_distance(&self, sigma: &Ranking) -> Result<i64> {
        let mut total = 0i64;
        for x in &self.xs {
            total += kendall_tau(sigma, &embed_pi(x, self.d, self.t)?)? as i64;
        }
        Ok(total)
    }
}

pub fn random_signs<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<i8> {
    (0..d).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}

fn dot(a: &[i8], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| x as i64 * y).sum()
}

/// Both sides of one inequality, each multiplied by `scale` so they are integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: i64,
    pub rhs: i64,
    pub scale: i64,
    pub holds: bool,
}

impl InequalityCheck {
    fn at_least(lhs: i64, rhs: i64, scale: i64) -> Self {
        InequalityCheck { lhs, rhs, scale, holds: lhs >= rhs }
    }

    fn at_most(lhs: i64, rhs: i64, scale: i64) -> Self {
        InequalityCheck { lhs, rhs, scale, holds: lhs <= rhs }
    }

    pub fn lhs_value(&self) -> f64 {
        self.lhs as f64 / self.scale as f64
    }

    pub fn rhs_value(&self) -> f64 {
        self.rhs as f64 / self.scale as f64
    }
}

/// Lower inequality: `K̄(σ, Π^x) ≥ t (d/2 − ½⟨decode(σ), x̄⟩)`.
pub fn check_lower(instance: &MarginalInstance, sigma: &Ranking) -> Result<InequalityCheck> {
    let (d, t, n) = (instance.d as i64, instance.t as i64, instance.n() as i64);
    let signs = decode_signs(sigma, instance.d, instance.t)?;
    // scaled by 2n
    let lhs = 2 * instance.total_distance(sigma)?;
    let rhs = t * (d * n - dot(&signs, &instance.sum()));
    Ok(InequalityCheck::at_least(lhs, rhs, 2 * n))
}

/// Upper inequality as usually stated: `K̄(π^y, Π^x) ≤ t (d/2 − ½⟨y, x̄⟩) + 2d²`.
///
/// Each disagreeing coordinate actually costs `2t + 1` inversions, so this
/// fails once `t` is large relative to `d` (e.g. `d = 1, t = 2`).
pub fn check_upper(instance: &MarginalInstance, y: &[i8]) -> Result<InequalityCheck> {
    upper_with_factor(instance, y, 1)
}

/// Upper inequality with the middle-block factor `2t`, valid for all `d, t`.
pub fn check_upper_corrected(instance: &MarginalInstance, y: &[i8]) -> Result<InequalityCheck> {
    upper_with_factor(instance, y, 2)
}

fn upper_with_factor(instance: &MarginalInstance, y: &[i8], factor: i64) -> Result<InequalityCheck> {
    let (d, t, n) = (instance.d as i64, instance.t as i64, instance.n() as i64);
    let sigma = embed_pi(y, instance.d, instance.t)?;
    let lhs = 2 * instance.total_distance(&sigma)?;
    let rhs = factor * t * (d * n - dot(y, &instance.sum())) + 4 * d * d * n;
    Ok(InequalityCheck::at_most(lhs, rhs, 2 * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lower: InequalityCheck,
    pub upper: Option<InequalityCheck>,
    pub upper_corrected: Option<InequalityCheck>,
}

/// Evaluate the lower inequality at `sigma`, and the upper ones at `embed_pi(y)` when `y` is given.
pub fn check_inequalities(
    instance: &MarginalInstance,
    sigma: &Ranking,
    y: Option<&[i8]>,
) -> Result<InequalityReport> {
    let lower = check_lower(instance, sigma)?;
    let (upper, upper_corrected) = match y {
        Some(y) => (
            Some(check_upper(instance, y)?),
            Some(check_upper_corrected(instance, y)?),
        ),
        None => (None, None),
    };
    Ok(InequalityReport {
        lower,
        upper,
        upper_corrected,
    })
}

/// A failing input, in the same units as [`InequalityCheck`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: usize,
    pub inequality: String,
    pub xs: Vec<Vec<i8>>,
    pub sigma_order: Option<Vec<usize>>,
    pub y: Option<Vec<i8>>,
    pub check: InequalityCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSummary {
    pub d: usize,
    pub t: usize,
    pub n: usize,
    pub trials: usize,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub upper_corrected_violations: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl LowerBoundSummary {
    pub fn passed(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

/// Randomized check of both inequalities.
///
/// Even trials use a uniformly random `σ`; odd trials use `σ = embed_pi(y)`,
/// where the lower inequality is tightest.
pub fn run_lowerbound_check(d: usize, t: usize, n: usize, trials: usize, seed: u64) -> Result<LowerBoundSummary> {
    check_dims(d, t)?;
    let mut summary = LowerBoundSummary {
        d,
        t,
        n,
        trials,
        lower_violations: 0,
        upper_violations: 0,
        upper_corrected_violations: 0,
        counterexamples: Vec::new(),
    };
    let m = 2 * d + t;
    for trial in 0..trials {
        let mut rng = derive_rng(seed, &[trial as u64]);
        let instance = MarginalInstance::random(d, t, n, &mut rng)?;
        let y = random_signs(d, &mut rng);
        let sigma = if trial % 2 == 0 {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            Ranking::from_order(&order)?
        } else {
            embed_pi(&y, d, t)?
        };
        let report = check_inequalities(&instance, &sigma, Some(&y))?;
        let mut record = |name: &str, check: InequalityCheck, with_sigma: bool| {
            summary.counterexamples.push(Counterexample {
                trial,
                inequality: name.to_string(),
                xs: instance.xs.clone(),
                sigma_order: with_sigma.then(|| sigma.order()),
                y: (!with_sigma).then(|| y.clone()),
                check,
            });
        };
        if !report.lower.holds {
            summary.lower_violations += 1;
            record("lower", report.lower, true);
        }
        let upper = report.upper.expect("y supplied");
        if !upper.holds {
            summary.upper_violations += 1;
            record("upper", upper, false);
        }
        let corrected = report.upper_corrected.expect("y supplied");
        if !corrected.holds {
            summary.upper_corrected_violations += 1;
            record("upper-corrected", corrected, false);
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_coordinate_embeddings() {
        assert_eq!(embed_pi(&[1], 1, 1).unwrap(), Ranking::identity(3));
        let swapped = embed_pi(&[-1], 1, 1).unwrap();
        assert_eq!(swapped.positions(), &[2, 1, 0]);
    }

    #[test]
    fn rho_of_identity_and_reversal() {
        for (d, t) in [(1, 1), (2, 3), (3, 2)] {
            let m = 2 * d + t;
            assert_eq!(recover_rho(&Ranking::identity(m), d, t).unwrap(), vec![-1; d]);
            assert_eq!(recover_rho(&Ranking::reverse(m), d, t).unwrap(), vec![1; d]);
        }
    }

    #[test]
    fn middle_block_is_fixed() {
        let x = vec![-1, 1, -1];
        let r = embed_pi(&x, 3, 2).unwrap();
        assert_eq!(r.position(3), 3);
        assert_eq!(r.position(4), 4);
    }

    #[test]
    fn input_validation() {
        assert!(embed_pi(&[1, 1], 3, 1).is_err());
        assert!(embed_pi(&[1, 0], 2, 1).is_err());
        assert!(embed_pi(&[1], 1, 0).is_err());
        assert!(recover_rho(&Ranking::identity(4), 1, 1).is_err());
    }

    #[test]
    fn agreeing_voters_are_tight() {
        let y = vec![1, -1, -1];
        let instance = MarginalInstance::new(3, 2, vec![y.clone(); 4]).unwrap();
        let sigma = embed_pi(&y, 3, 2).unwrap();
        let report = check_inequalities(&instance, &sigma, Some(&y)).unwrap();
        assert_eq!(report.lower.lhs, 0);
        assert_eq!(report.lower.rhs, 0);
        assert!(report.lower.holds);
        let upper = report.upper.unwrap();
        assert_eq!(upper.lhs, 0);
        assert_eq!(upper.rhs_value(), 18.0);
        assert!(upper.holds);
    }

    #[test]
    fn literal_rho_breaks_the_lower_inequality() {
        // ρ = -x under this embedding, so plugging ρ in directly flips the sign
        let y = vec![1, 1];
        let instance = MarginalInstance::new(2, 1, vec![y.clone()]).unwrap();
        let sigma = embed_pi(&y, 2, 1).unwrap();
        let rho = recover_rho(&sigma, 2, 1).unwrap();
        // t = 1, d = 2, n = 1
        let literal_rhs = 2 - dot(&rho, &instance.sum());
        assert_eq!(literal_rhs, 4);
        assert!(instance.total_distance(&sigma).unwrap() * 2 < literal_rhs);
        assert!(check_lower(&instance, &sigma).unwrap().holds);
    }

    #[test]
    fn stated_upper_bound_undercounts_long_pads() {
        let instance = MarginalInstance::new(1, 2, vec![vec![1]]).unwrap();
        let upper = check_upper(&instance, &[-1]).unwrap();
        // K = 2t + 1 = 5 > t + 2d² = 4
        assert_eq!(upper.lhs_value(), 5.0);
        assert_eq!(upper.rhs_value(), 4.0);
        assert!(!upper.holds);
        assert!(check_upper_corrected(&instance, &[-1]).unwrap().holds);
    }
}
