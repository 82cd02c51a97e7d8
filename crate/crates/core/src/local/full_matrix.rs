//! Non-interactive local estimate of the whole weight matrix.
//!
//! Each user views its ranking as the `d = m(m-1)` vector of ordered-pair
//! indicators, samples one coordinate uniformly, and sends a single
//! randomized-response report on it. The aggregator rescales by `d`, which
//! makes every coordinate estimate unbiased.

use rand::Rng;

use super::rr::{Perturbation, RrConfig};
use super::users::{LocalClient, UserPool};
use crate::base::{cost_against, run_base, BaseRanker};
use crate::error::Result;
use crate::ranking::{build_weights, AggregationResult, BudgetCharge, PairwiseWeights, RankingProfile};
use crate::seed::derive_rng;

/// Which coordinates each user reports on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordinateSampling {
    /// One uniformly random ordered pair per user.
    OnePerUser,
    /// Every ordered pair. Test hook: composes `d` reports per user.
    All,
}

/// Debiased per-coordinate estimates and the projected weight matrix.
#[derive(Debug, Clone)]
pub struct LocalEstimate {
    m: usize,
    raw: Vec<f64>,
    pub weights: PairwiseWeights,
}

impl LocalEstimate {
    /// Unclipped estimate of `w[j][i]`.
    pub fn raw(&self, j: usize, i: usize) -> f64 {
        self.raw[j * self.m + i]
    }
}

fn coordinate_pair(c: usize, m: usize) -> (usize, usize) {
    let j = c / (m - 1);
    let r = c % (m - 1);
    (j, if r < j { r } else { r + 1 })
}

/// Estimate every weight from one ε-DP report per user.
pub fn local_full_matrix(profile: &RankingProfile, epsilon: f64, seed: u64) -> Result<LocalEstimate> {
    let mut pool = UserPool::from_profile(profile);
    let rr = RrConfig::new(epsilon)?;
    Ok(estimate_full_matrix(
        &mut pool,
        Perturbation::Randomized(rr),
        CoordinateSampling::OnePerUser,
        &mut derive_rng(seed, &[0]),
    ))
}

/// Run the full-matrix protocol over `pool`'s real users.
pub fn estimate_full_matrix<C: LocalClient, R: Rng + ?Sized>(
    pool: &mut UserPool<C>,
    perturbation: Perturbation,
    sampling: CoordinateSampling,
    rng: &mut R,
) -> LocalEstimate {
    let m = pool.m();
    let n = pool.real_users();
    if m < 2 {
        return LocalEstimate {
            m,
            raw: vec![0.0; m * m],
            weights: PairwiseWeights::from_upper(m, |_, _| 0.0),
        };
    }
    let d = m * (m - 1);
    let mut sums = vec![0.0; d];
    for user in 0..n {
        match sampling {
            CoordinateSampling::OnePerUser => {
                let c = rng.random_range(0..d);
                let (j, i) = coordinate_pair(c, m);
                sums[c] += pool.report_pair(user, j, i, &perturbation, rng);
            }
            CoordinateSampling::All => {
                for (c, sum) in sums.iter_mut().enumerate() {
                    let (j, i) = coordinate_pair(c, m);
                    *sum += pool.report_pair(user, j, i, &perturbation, rng);
                }
            }
        }
    }
    let scale = match sampling {
        CoordinateSampling::OnePerUser => d as f64 / n as f64,
        CoordinateSampling::All => 1.0 / n as f64,
    };
    let mut raw = vec![0.0; m * m];
    for (c, sum) in sums.iter().enumerate() {
        let (j, i) = coordinate_pair(c, m);
        raw[j * m + i] = sum * scale;
    }
    let weights =
        PairwiseWeights::from_upper(m, |i, j| (raw[i * m + j] + 1.0 - raw[j * m + i]) / 2.0);
    LocalEstimate { m, raw, weights }
}

/// Local noise-all: estimate the matrix, then run `base` on it.
pub fn reduce_local_noise_all(
    profile: &RankingProfile,
    epsilon: f64,
    base: BaseRanker,
    seed: u64,
) -> Result<AggregationResult> {
    let rr = RrConfig::new(epsilon)?;
    let mut pool = UserPool::from_profile(profile);
    let truth = build_weights(profile);
    reduce_local_noise_all_with(
        &mut pool,
        &truth,
        Perturbation::Randomized(rr),
        CoordinateSampling::OnePerUser,
        base,
        seed,
    )
}

/// [`reduce_local_noise_all`] over an existing pool; `truth` is used only to
/// score the output.
pub fn reduce_local_noise_all_with<C: LocalClient>(
    pool: &mut UserPool<C>,
    truth: &PairwiseWeights,
    perturbation: Perturbation,
    sampling: CoordinateSampling,
    base: BaseRanker,
    seed: u64,
) -> Result<AggregationResult> {
    let before = pool.ledger().total_applications();
    let estimate = estimate_full_matrix(pool, perturbation, sampling, &mut derive_rng(seed, &[0]));
    let (ranking, _) = run_base(base, &estimate.weights, &mut derive_rng(seed, &[2]))?;
    let cost = cost_against(&ranking, truth);
    let reports = pool.ledger().total_applications() - before;
    Ok(AggregationResult {
        ranking,
        cost,
        queries_used: crate::ranking::max_pairs(truth.m()),
        fallback_used: false,
        seed,
        charges: vec![BudgetCharge {
            phase: "local-noise-all".into(),
            epsilon: perturbation.epsilon(),
            delta: 0.0,
            draws: reports,
        }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::opt_bruteforce;
    use crate::ranking::Ranking;
    use crate::seed::rng_from_seed;

    fn mixed_profile() -> RankingProfile {
        let orders: [&[usize]; 4] = [&[0, 1, 2, 3], &[1, 0, 3, 2], &[3, 2, 1, 0], &[0, 2, 1, 3]];
        RankingProfile::new(orders.iter().map(|o| Ranking::from_order(o).unwrap()).collect()).unwrap()
    }

    #[test]
    fn coordinates_cover_all_ordered_pairs() {
        let m = 5;
        let mut seen = std::collections::HashSet::new();
        for c in 0..m * (m - 1) {
            let (j, i) = coordinate_pair(c, m);
            assert_ne!(j, i);
            assert!(seen.insert((j, i)));
        }
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn truthful_all_coordinates_recovers_weights() {
        let profile = mixed_profile();
        let mut pool = UserPool::from_profile(&profile);
        let est = estimate_full_matrix(
            &mut pool,
            Perturbation::Truthful,
            CoordinateSampling::All,
            &mut rng_from_seed(3),
        );
        assert_eq!(est.weights, build_weights(&profile));
    }

    #[test]
    fn truthful_single_coordinate_reports_are_exact_bits() {
        // one user: the sampled coordinate's estimate is d * bit, all others 0
        let r = Ranking::from_order(&[2, 0, 1]).unwrap();
        let profile = RankingProfile::new(vec![r.clone()]).unwrap();
        let mut pool = UserPool::from_profile(&profile);
        let est = estimate_full_matrix(
            &mut pool,
            Perturbation::Truthful,
            CoordinateSampling::OnePerUser,
            &mut rng_from_seed(8),
        );
        let nonzero: Vec<(usize, usize)> = (0..3)
            .flat_map(|j| (0..3).map(move |i| (j, i)))
            .filter(|&(j, i)| j != i && est.raw(j, i) != 0.0)
            .collect();
        assert!(nonzero.len() <= 1);
        for (j, i) in nonzero {
            assert!(r.prefers(j, i));
            assert_eq!(est.raw(j, i), 6.0);
        }
        assert_eq!(pool.ledger().total_applications(), 1);
    }

    #[test]
    fn noiseless_exact_base_matches_oracle() {
        let profile = mixed_profile();
        let truth = build_weights(&profile);
        let mut pool = UserPool::from_profile(&profile);
        let res = reduce_local_noise_all_with(
            &mut pool,
            &truth,
            Perturbation::Truthful,
            CoordinateSampling::All,
            BaseRanker::Exact,
            1,
        )
        .unwrap();
        let opt = opt_bruteforce(&truth).unwrap();
        assert_eq!(res.ranking, opt.ranking);
        assert_eq!(res.cost, opt.cost);
    }

    #[test]
    fn each_user_reports_once() {
        let profile = RankingProfile::new(vec![Ranking::identity(4); 50]).unwrap();
        let mut pool = UserPool::from_profile(&profile);
        let rr = Perturbation::Randomized(RrConfig::new(1.0).unwrap());
        let est = estimate_full_matrix(&mut pool, rr, CoordinateSampling::OnePerUser, &mut rng_from_seed(2));
        assert_eq!(pool.ledger().max_applications(), 1);
        assert_eq!(pool.ledger().total_applications(), 50);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let v = est.weights.get(i, j);
                assert!((0.0..=1.0).contains(&v));
                assert!((v + est.weights.get(j, i) - 1.0).abs() <= f64::EPSILON);
            }
        }
    }
}
