//! Adaptive local query answering and LDPKwikSort.
//!
//! Users are split into `m` equal random groups. Each ordered pair `(j, i)` is
//! bound to one group, chosen uniformly and independently before any query is
//! made, so an answer never depends on the order in which queries arrive. A
//! group answers through randomized response at `ε₀ = ε m / (2q)`, and stops
//! answering (⊥) once it has been used more than `2q/m` times, which caps
//! every user's spend at `ε`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::full_matrix::{reduce_local_noise_all_with, CoordinateSampling};
use super::rr::{Perturbation, RrConfig};
use super::users::{LocalClient, UserPool};
use crate::base::{cost_against, kwiksort, query_budget, BaseRanker, BudgetExhausted, WeightOracle};
use crate::error::{Error, Result};
use crate::ranking::{build_weights, AggregationResult, BudgetCharge, PairwiseWeights, Ranking, RankingProfile};
use crate::seed::{derive_rng, derive_seed};

/// Balanced random assignment of users to `m` groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserPartition {
    assignment: Vec<usize>,
    groups: Vec<Vec<usize>>,
}

impl UserPartition {
    /// `users` must be a multiple of `groups`.
    pub fn random<R: Rng + ?Sized>(users: usize, groups: usize, rng: &mut R) -> Result<Self> {
        if groups == 0 || !users.is_multiple_of(groups) {
            return Err(Error::InvalidParameter(format!(
                "{users} users cannot be split evenly into {groups} groups"
            )));
        }
        let mut ids: Vec<usize> = (0..users).collect();
        ids.shuffle(rng);
        let size = users / groups;
        let mut assignment = vec![0; users];
        let groups: Vec<Vec<usize>> = ids
            .chunks(size.max(1))
            .take(groups)
            .map(<[usize]>::to_vec)
            .collect();
        for (g, members) in groups.iter().enumerate() {
            for &u in members {
                assignment[u] = g;
            }
        }
        Ok(UserPartition { assignment, groups })
    }

    pub fn group_of(&self, user: usize) -> usize {
        self.assignment[user]
    }

    pub fn members(&self, group: usize) -> &[usize] {
        &self.groups[group]
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }
}

/// Group index for every ordered pair, drawn i.i.d. uniform up front.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairAssignment {
    m: usize,
    groups: usize,
    ell: Vec<usize>,
}

impl PairAssignment {
    pub fn random<R: Rng + ?Sized>(m: usize, groups: usize, rng: &mut R) -> Self {
        let ell = (0..m * m).map(|_| rng.random_range(0..groups)).collect();
        PairAssignment { m, groups, ell }
    }

    pub fn group(&self, j: usize, i: usize) -> usize {
        self.ell[j * self.m + i]
    }

    pub fn group_count(&self) -> usize {
        self.groups
    }
}

/// One line of the query transcript; `estimate` is `None` for ⊥.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub pair: (usize, usize),
    pub partition: usize,
    pub counter_value: u32,
    pub estimate: Option<f64>,
}

/// `10 m ln m`; the adaptive answerer needs `q` strictly above this.
pub fn min_adaptive_queries(m: usize) -> f64 {
    10.0 * m as f64 * (m as f64).ln()
}

/// Per-group use limit `⌊2q/m⌋`: a group answers while its counter is at most `2q/m`.
pub fn group_cap(q: u64, m: usize) -> u32 {
    (2 * q / m as u64) as u32
}

pub struct AdaptiveLocalAnswerer<'p, C> {
    pool: &'p mut UserPool<C>,
    partition: UserPartition,
    pairs: PairAssignment,
    perturbation: Perturbation,
    counters: Vec<u32>,
    cap: u32,
    q: u64,
    real_users: usize,
    occurrences: Vec<u32>,
    stream_seed: u64,
    answered: u64,
    transcript: Vec<TranscriptRecord>,
}

impl<'p, C: LocalClient> AdaptiveLocalAnswerer<'p, C> {
    /// ε-local-DP answerer for up to `q` queries.
    pub fn new(pool: &'p mut UserPool<C>, epsilon: f64, q: u64, seed: u64) -> Result<Self> {
        let m = pool.m();
        let epsilon0 = 0.5 * epsilon * m as f64 / q.max(1) as f64;
        let rr = RrConfig::new(epsilon0)?;
        Self::with_perturbation(pool, Perturbation::Randomized(rr), q, seed)
    }

    /// Same protocol with an explicit perturbation (the truthful one is a test hook).
    pub fn with_perturbation(
        pool: &'p mut UserPool<C>,
        perturbation: Perturbation,
        q: u64,
        seed: u64,
    ) -> Result<Self> {
        let m = pool.m();
        if m < 2 {
            return Err(Error::InvalidParameter("adaptive answering needs m >= 2".into()));
        }
        if (q as f64) <= min_adaptive_queries(m) {
            return Err(Error::InvalidParameter(format!(
                "adaptive answerer needs q > 10 m ln m = {:.2}, got {q}",
                min_adaptive_queries(m)
            )));
        }
        if pool.real_users() == 0 {
            return Err(Error::InvalidParameter("no users to query".into()));
        }
        let real_users = pool.real_users();
        pool.pad_to_multiple(m);
        let partition = UserPartition::random(pool.len(), m, &mut derive_rng(seed, &[0]))?;
        let pairs = PairAssignment::random(m, m, &mut derive_rng(seed, &[1]));
        Ok(AdaptiveLocalAnswerer {
            pool,
            partition,
            pairs,
            perturbation,
            counters: vec![0; m],
            cap: group_cap(q, m),
            q,
            real_users,
            occurrences: vec![0; m * m],
            stream_seed: derive_seed(seed, &[2]),
            answered: 0,
            transcript: Vec::new(),
        })
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Lower the per-group limit. Raising it is ignored.
    pub fn with_cap(mut self, cap: u32) -> Self {
        self.cap = self.cap.min(cap);
        self
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn perturbation(&self) -> Perturbation {
        self.perturbation
    }

    pub fn partition(&self) -> &UserPartition {
        &self.partition
    }

    pub fn pairs(&self) -> &PairAssignment {
        &self.pairs
    }

    pub fn counters(&self) -> &[u32] {
        &self.counters
    }

    pub fn transcript(&self) -> &[TranscriptRecord] {
        &self.transcript
    }

    pub fn into_transcript(self) -> Vec<TranscriptRecord> {
        self.transcript
    }

    /// Unbiased estimate of `w[j][i]` from group `ℓ(j, i)`, or ⊥.
    pub fn adaptive_query(&mut self, j: usize, i: usize) -> std::result::Result<f64, BudgetExhausted> {
        let m = self.pool.m();
        assert!(j != i && j < m && i < m, "invalid pair ({j}, {i})");
        let group = self.pairs.group(j, i);
        self.counters[group] += 1;
        let counter_value = self.counters[group];
        if counter_value > self.cap {
            self.transcript.push(TranscriptRecord {
                pair: (j, i),
                partition: group,
                counter_value,
                estimate: None,
            });
            return Err(BudgetExhausted);
        }
        let occurrence = self.occurrences[j * m + i];
        self.occurrences[j * m + i] += 1;
        let mut rng = derive_rng(self.stream_seed, &[j as u64, i as u64, occurrence as u64]);
        let mut sum = 0.0;
        for &user in self.partition.members(group) {
            sum += self.pool.report_pair(user, j, i, &self.perturbation, &mut rng);
        }
        let estimate = m as f64 / self.real_users as f64 * sum;
        self.answered += 1;
        self.transcript.push(TranscriptRecord {
            pair: (j, i),
            partition: group,
            counter_value,
            estimate: Some(estimate),
        });
        Ok(estimate)
    }
}

impl<C: LocalClient> WeightOracle for AdaptiveLocalAnswerer<'_, C> {
    fn query(&mut self, j: usize, i: usize) -> std::result::Result<f64, BudgetExhausted> {
        self.adaptive_query(j, i)
    }

    fn queries_answered(&self) -> u64 {
        self.answered
    }
}

/// Budget split for LDPKwikSort: half to the adaptive answerer, half to the
/// full-matrix fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdpKwikSortPlan {
    pub q: u64,
    pub adaptive_epsilon: f64,
    pub fallback_epsilon: f64,
    pub fallback_base: BaseRanker,
    /// Per-group use limit; may be lowered below `⌊2q/m⌋` but never raised.
    pub cap: u32,
    /// Replace every randomized response with the true value. Test hook.
    pub noiseless: bool,
}

impl LdpKwikSortPlan {
    pub fn calibrated(m: usize, epsilon: f64, constant: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let q = query_budget(m, constant)?;
        if (q as f64) <= min_adaptive_queries(m) {
            return Err(Error::InvalidParameter(format!(
                "budget constant {constant} gives q={q}, but the local answerer needs q > 10 m ln m"
            )));
        }
        Ok(LdpKwikSortPlan {
            q,
            adaptive_epsilon: epsilon / 2.0,
            fallback_epsilon: epsilon / 2.0,
            fallback_base: BaseRanker::best_for(m),
            cap: group_cap(q, m),
            noiseless: false,
        })
    }

    pub fn total_epsilon(&self) -> f64 {
        self.adaptive_epsilon + self.fallback_epsilon
    }
}

/// Result of a local protocol run together with its query transcript.
#[derive(Debug, Clone)]
pub struct LocalRun {
    pub result: AggregationResult,
    pub transcript: Vec<TranscriptRecord>,
}

/// KwikSort against the adaptive answerer; on ⊥, the full-matrix noise-all fallback.
pub fn ldp_kwiksort(
    profile: &RankingProfile,
    epsilon: f64,
    constant: f64,
    seed: u64,
) -> Result<AggregationResult> {
    let m = profile.m();
    if m < 2 {
        return Ok(AggregationResult::non_private(Ranking::identity(m), 0.0, 0, seed));
    }
    let plan = LdpKwikSortPlan::calibrated(m, epsilon, constant)?;
    let mut pool = UserPool::from_profile(profile);
    let truth = build_weights(profile);
    Ok(ldp_kwiksort_pool(&mut pool, &truth, &plan, seed)?.result)
}

/// [`ldp_kwiksort`] over an existing pool; `truth` only scores the output.
pub fn ldp_kwiksort_pool<C: LocalClient>(
    pool: &mut UserPool<C>,
    truth: &PairwiseWeights,
    plan: &LdpKwikSortPlan,
    seed: u64,
) -> Result<LocalRun> {
    let m = pool.m();
    let (outcome, answered, transcript, reports) = {
        let before = pool.ledger().total_applications();
        let mut answerer = if plan.noiseless {
            AdaptiveLocalAnswerer::with_perturbation(pool, Perturbation::Truthful, plan.q, derive_seed(seed, &[1]))?
        } else {
            AdaptiveLocalAnswerer::new(pool, plan.adaptive_epsilon, plan.q, derive_seed(seed, &[1]))?
        }
        .with_cap(plan.cap);
        let outcome = kwiksort(&mut answerer, m, &mut derive_rng(seed, &[0]));
        let answered = answerer.queries_answered();
        let transcript = answerer.into_transcript();
        let reports = pool.ledger().total_applications() - before;
        (outcome, answered, transcript, reports)
    };
    let adaptive_charge = BudgetCharge {
        phase: "adaptive-kwiksort".into(),
        epsilon: plan.adaptive_epsilon,
        delta: 0.0,
        draws: reports,
    };
    let result = match outcome {
        Ok(ranking) => {
            let cost = cost_against(&ranking, truth);
            AggregationResult {
                ranking,
                cost,
                queries_used: answered,
                fallback_used: false,
                seed,
                charges: vec![adaptive_charge],
            }
        }
        Err(BudgetExhausted) => {
            let perturbation = if plan.noiseless {
                Perturbation::Truthful
            } else {
                Perturbation::Randomized(RrConfig::new(plan.fallback_epsilon)?)
            };
            let fallback = reduce_local_noise_all_with(
                pool,
                truth,
                perturbation,
                CoordinateSampling::OnePerUser,
                plan.fallback_base,
                derive_seed(seed, &[3]),
            )?;
            let mut charges = vec![adaptive_charge];
            charges.extend(fallback.charges);
            AggregationResult {
                ranking: fallback.ranking,
                cost: fallback.cost,
                queries_used: answered + fallback.queries_used,
                fallback_used: true,
                seed,
                charges,
            }
        }
    };
    Ok(LocalRun { result, transcript })
}
