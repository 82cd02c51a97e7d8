//! Central-model private aggregation.
//!
//! A trusted curator holds the true weights and answers queries through a
//! [`CentralAnswerer`], which perturbs each unordered pair at most once with
//! Laplace or Gaussian noise, clips to `[0,1]`, and serves the complement for
//! the opposite orientation.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::base::{
    cost_against, kwiksort, query_budget, run_base, BaseRanker, BudgetExhausted, QueryCounter,
    WeightOracle,
};
use crate::error::{Error, Result};
use crate::ranking::{max_pairs, AggregationResult, BudgetCharge, PairwiseWeights};
use crate::seed::{derive_rng, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0,1), got {delta}")));
        }
        Ok(PrivacyBudget { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        PrivacyBudget::new(epsilon, 0.0)
    }

    pub fn is_pure(&self) -> bool {
        self.delta == 0.0
    }

    /// The same budget with `epsilon` halved.
    pub fn half_epsilon(&self) -> PrivacyBudget {
        PrivacyBudget {
            epsilon: self.epsilon / 2.0,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Laplace,
    Gaussian,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Laplace => "laplace",
            Mechanism::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplace" => Ok(Mechanism::Laplace),
            "gaussian" => Ok(Mechanism::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown mechanism '{other}'"))),
        }
    }
}

/// Noise distribution and scale: Laplace `b` or Gaussian standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mechanism: Mechanism,
    pub scale: f64,
}

impl NoiseSpec {
    /// No perturbation at all; for tests and sanity runs.
    pub fn zero() -> Self {
        NoiseSpec {
            mechanism: Mechanism::Laplace,
            scale: 0.0,
        }
    }

    /// Laplace scale `q / (ε n)`: each of `q` answers has sensitivity `1/n`.
    pub fn laplace(budget: PrivacyBudget, q: u64, n: usize) -> Result<Self> {
        check_counts(q, n)?;
        if !budget.is_pure() {
            return Err(Error::InvalidParameter(
                "the Laplace answerer is calibrated for pure DP (delta = 0)".into(),
            ));
        }
        Ok(NoiseSpec {
            mechanism: Mechanism::Laplace,
            scale: q as f64 / (budget.epsilon * n as f64),
        })
    }

    /// Gaussian `σ = sqrt(2 q ln(1.25/δ)) / (ε n)`, the ℓ2 sensitivity over `q` answers being `√q / n`.
    pub fn gaussian(budget: PrivacyBudget, q: u64, n: usize) -> Result<Self> {
        check_counts(q, n)?;
        if budget.is_pure() {
            return Err(Error::InvalidParameter(
                "the Gaussian answerer needs delta > 0".into(),
            ));
        }
        let sigma = (2.0 * q as f64 * (1.25 / budget.delta).ln()).sqrt() / (budget.epsilon * n as f64);
        Ok(NoiseSpec {
            mechanism: Mechanism::Gaussian,
            scale: sigma,
        })
    }

    pub fn calibrate(mechanism: Mechanism, budget: PrivacyBudget, q: u64, n: usize) -> Result<Self> {
        match mechanism {
            Mechanism::Laplace => NoiseSpec::laplace(budget, q, n),
            Mechanism::Gaussian => NoiseSpec::gaussian(budget, q, n),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        match self.mechanism {
            Mechanism::Laplace => {
                let a: f64 = rng.sample(Exp1);
                let b: f64 = rng.sample(Exp1);
                self.scale * (a - b)
            }
            Mechanism::Gaussian => {
                let z: f64 = rng.sample(StandardNormal);
                self.scale * z
            }
        }
    }
}

fn check_counts(q: u64, n: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidParameter("query limit must be at least 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("voter count must be at least 1".into()));
    }
    Ok(())
}

/// Curator-side noisy oracle with a hard query limit.
#[derive(Debug, Clone)]
pub struct CentralAnswerer<'a> {
    w: &'a PairwiseWeights,
    noise: NoiseSpec,
    counter: QueryCounter,
    // upper triangle, indexed i * m + j for i < j
    clipped: Vec<Option<f64>>,
    raw_noise: Vec<Option<f64>>,
    draws: u64,
    rng: SimRng,
}

impl<'a> CentralAnswerer<'a> {
    pub fn new(w: &'a PairwiseWeights, noise: NoiseSpec, q: u64, rng: SimRng) -> Self {
        let m = w.m();
        CentralAnswerer {
            w,
            noise,
            counter: QueryCounter::limited(q),
            clipped: vec![None; m * m],
            raw_noise: vec![None; m * m],
            draws: 0,
            rng,
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn limit(&self) -> u64 {
        self.counter.limit().unwrap_or(u64::MAX)
    }

    /// Noise samples drawn so far (one per distinct unordered pair revealed).
    pub fn noise_draws(&self) -> u64 {
        self.draws
    }

    /// Pre-clipping noise attached to pair `{i, j}`, if it was revealed.
    pub fn raw_noise(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = (i.min(j), i.max(j));
        self.raw_noise[a * self.w.m() + b]
    }

    fn noised_upper(&mut self, a: usize, b: usize) -> f64 {
        let idx = a * self.w.m() + b;
        if let Some(v) = self.clipped[idx] {
            return v;
        }
        let z = self.noise.sample(&mut self.rng);
        self.draws += 1;
        let v = (self.w.get(a, b) + z).clamp(0.0, 1.0);
        self.raw_noise[idx] = Some(z);
        self.clipped[idx] = Some(v);
        v
    }
}

impl WeightOracle for CentralAnswerer<'_> {
    fn query(&mut self, j: usize, i: usize) -> std::result::Result<f64, BudgetExhausted> {
        assert_ne!(i, j, "diagonal weights are never queried");
        self.counter.tick()?;
        let (a, b) = (j.min(i), j.max(i));
        let v = self.noised_upper(a, b);
        Ok(if j == a { v } else { 1.0 - v })
    }

    fn queries_answered(&self) -> u64 {
        self.counter.used()
    }
}

/// Laplace answerer for `q` queries at privacy `budget` over `n` voters.
pub fn laplace_answerer(
    w: &PairwiseWeights,
    budget: PrivacyBudget,
    q: u64,
    n: usize,
    rng: SimRng,
) -> Result<CentralAnswerer<'_>> {
    Ok(CentralAnswerer::new(w, NoiseSpec::laplace(budget, q, n)?, q, rng))
}

/// Gaussian answerer for `q` queries at `(ε, δ)` over `n` voters.
pub fn gaussian_answerer(
    w: &PairwiseWeights,
    budget: PrivacyBudget,
    q: u64,
    n: usize,
    rng: SimRng,
) -> Result<CentralAnswerer<'_>> {
    Ok(CentralAnswerer::new(w, NoiseSpec::gaussian(budget, q, n)?, q, rng))
}

/// Noise every pair, then run `base` on the noised matrix.
///
/// The cost in the result is measured against the true `w`.
pub fn reduce_noise_all(
    w: &PairwiseWeights,
    budget: PrivacyBudget,
    mechanism: Mechanism,
    n: usize,
    base: BaseRanker,
    seed: u64,
) -> Result<AggregationResult> {
    let q = max_pairs(w.m()).max(1);
    let noise = NoiseSpec::calibrate(mechanism, budget, q, n)?;
    reduce_noise_all_with(w, noise, budget, base, seed)
}

/// [`reduce_noise_all`] with an explicit noise level; `budget` is only recorded.
pub fn reduce_noise_all_with(
    w: &PairwiseWeights,
    noise: NoiseSpec,
    budget: PrivacyBudget,
    base: BaseRanker,
    seed: u64,
) -> Result<AggregationResult> {
    let m = w.m();
    let q = max_pairs(m).max(1);
    let mut answerer = CentralAnswerer::new(w, noise, q, derive_rng(seed, &[1]));
    let noised = PairwiseWeights::from_upper(m, |i, j| {
        answerer.query(i, j).expect("the budget covers every pair")
    });
    let (ranking, _) = run_base(base, &noised, &mut derive_rng(seed, &[2]))?;
    let cost = cost_against(&ranking, w);
    Ok(AggregationResult {
        ranking,
        cost,
        queries_used: answerer.queries_answered(),
        fallback_used: false,
        seed,
        charges: vec![BudgetCharge {
            phase: "noise-all".into(),
            epsilon: budget.epsilon,
            delta: budget.delta,
            draws: answerer.noise_draws(),
        }],
    })
}

/// How DPKwikSort divides its budget: half for the KwikSort answerer, half
/// reserved for the pure-DP noise-all fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpKwikSortPlan {
    pub q: u64,
    pub answerer_budget: PrivacyBudget,
    pub answerer_noise: NoiseSpec,
    pub fallback_budget: PrivacyBudget,
    pub fallback_noise: NoiseSpec,
    pub fallback_base: BaseRanker,
}

impl DpKwikSortPlan {
    pub fn calibrated(
        m: usize,
        n: usize,
        budget: PrivacyBudget,
        mechanism: Mechanism,
        constant: f64,
    ) -> Result<Self> {
        let q = query_budget(m, constant)?;
        let answerer_budget = budget.half_epsilon();
        let answerer_noise = NoiseSpec::calibrate(mechanism, answerer_budget, q, n)?;
        let fallback_budget = PrivacyBudget::pure(budget.epsilon / 2.0)?;
        let fallback_noise = NoiseSpec::laplace(fallback_budget, max_pairs(m), n)?;
        Ok(DpKwikSortPlan {
            q,
            answerer_budget,
            answerer_noise,
            fallback_budget,
            fallback_noise,
            fallback_base: BaseRanker::best_for(m),
        })
    }

    /// Same accounting, no perturbation.
    pub fn without_noise(mut self) -> Self {
        self.answerer_noise = NoiseSpec::zero();
        self.fallback_noise = NoiseSpec::zero();
        self
    }

    pub fn total_epsilon(&self) -> f64 {
        self.answerer_budget.epsilon + self.fallback_budget.epsilon
    }
}

/// KwikSort against a noisy central answerer, falling back to noise-all on FAIL.
pub fn dp_kwiksort(
    w: &PairwiseWeights,
    budget: PrivacyBudget,
    mechanism: Mechanism,
    n: usize,
    constant: f64,
    seed: u64,
) -> Result<AggregationResult> {
    let plan = DpKwikSortPlan::calibrated(w.m(), n, budget, mechanism, constant)?;
    dp_kwiksort_planned(w, &plan, seed)
}

pub fn dp_kwiksort_planned(
    w: &PairwiseWeights,
    plan: &DpKwikSortPlan,
    seed: u64,
) -> Result<AggregationResult> {
    let m = w.m();
    let mut answerer = CentralAnswerer::new(w, plan.answerer_noise, plan.q, derive_rng(seed, &[1]));
    let outcome = kwiksort(&mut answerer, m, &mut derive_rng(seed, &[0]));
    let answerer_charge = BudgetCharge {
        phase: "kwiksort".into(),
        epsilon: plan.answerer_budget.epsilon,
        delta: plan.answerer_budget.delta,
        draws: answerer.noise_draws(),
    };
    match outcome {
        Ok(ranking) => {
            let cost = cost_against(&ranking, w);
            Ok(AggregationResult {
                ranking,
                cost,
                queries_used: answerer.queries_answered(),
                fallback_used: false,
                seed,
                charges: vec![answerer_charge],
            })
        }
        Err(BudgetExhausted) => {
            let fallback = reduce_noise_all_with(
                w,
                plan.fallback_noise,
                plan.fallback_budget,
                plan.fallback_base,
                crate::seed::derive_seed(seed, &[3]),
            )?;
            let mut charges = vec![answerer_charge];
            charges.extend(fallback.charges);
            Ok(AggregationResult {
                ranking: fallback.ranking,
                cost: fallback.cost,
                queries_used: answerer.queries_answered() + fallback.queries_used,
                fallback_used: true,
                seed,
                charges,
            })
        }
    }
}
