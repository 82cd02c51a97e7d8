//! Non-private aggregation over query access to the weights.
//!
//! Both private reductions wrap one of these algorithms and only change what
//! answers the weight queries.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{opt_bruteforce, MAX_EXACT_ITEMS};
use crate::ranking::{kemeny_cost_of_order, PairwiseWeights, Ranking};

/// Signal that an answerer has run out of queries (FAIL / ⊥).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExhausted;

impl fmt::Display for BudgetExhausted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("query budget exhausted")
    }
}

impl std::error::Error for BudgetExhausted {}

/// Query access to (an estimate of) the pairwise weights.
pub trait WeightOracle {
    /// Estimate of `w[j][i]`, the fraction preferring `j` over `i`.
    fn query(&mut self, j: usize, i: usize) -> std::result::Result<f64, BudgetExhausted>;

    /// Queries answered so far.
    fn queries_answered(&self) -> u64;
}

/// Counts answered queries against an optional limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryCounter {
    used: u64,
    limit: Option<u64>,
}

impl QueryCounter {
    pub fn unlimited() -> Self {
        QueryCounter { used: 0, limit: None }
    }

    pub fn limited(limit: u64) -> Self {
        QueryCounter {
            used: 0,
            limit: Some(limit),
        }
    }

    /// Reserve one query; fails on query `limit + 1` without counting it.
    pub fn tick(&mut self) -> std::result::Result<(), BudgetExhausted> {
        if self.limit.is_some_and(|limit| self.used >= limit) {
            return Err(BudgetExhausted);
        }
        self.used += 1;
        Ok(())
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> Option<u64> {
        self.limit
    }
}

/// Answers queries with the true weights.
#[derive(Debug, Clone)]
pub struct ExactOracle<'a> {
    w: &'a PairwiseWeights,
    counter: QueryCounter,
}

impl<'a> ExactOracle<'a> {
    pub fn new(w: &'a PairwiseWeights) -> Self {
        ExactOracle {
            w,
            counter: QueryCounter::unlimited(),
        }
    }

    pub fn with_limit(w: &'a PairwiseWeights, limit: u64) -> Self {
        ExactOracle {
            w,
            counter: QueryCounter::limited(limit),
        }
    }
}

impl WeightOracle for ExactOracle<'_> {
    fn query(&mut self, j: usize, i: usize) -> std::result::Result<f64, BudgetExhausted> {
        self.counter.tick()?;
        Ok(self.w.get(j, i))
    }

    fn queries_answered(&self) -> u64 {
        self.counter.used()
    }
}

/// KwikSort over all `m` items.
pub fn kwiksort<O, R>(oracle: &mut O, m: usize, rng: &mut R) -> std::result::Result<Ranking, BudgetExhausted>
where
    O: WeightOracle + ?Sized,
    R: Rng + ?Sized,
{
    let items: Vec<usize> = (0..m).collect();
    let order = kwiksort_items(oracle, &items, rng)?;
    Ok(Ranking::from_order(&order).expect("kwiksort permutes its input"))
}

/// KwikSort restricted to `items`; returns them in preference order.
///
/// A uniformly random pivot `i` splits the rest: `j` goes left iff the oracle
/// reports `w[j][i] > 0.5`. Ties at exactly `0.5` go right.
pub fn kwiksort_items<O, R>(
    oracle: &mut O,
    items: &[usize],
    rng: &mut R,
) -> std::result::Result<Vec<usize>, BudgetExhausted>
where
    O: WeightOracle + ?Sized,
    R: Rng + ?Sized,
{
    let mut out = Vec::with_capacity(items.len());
    sort_into(oracle, items, rng, &mut out)?;
    Ok(out)
}

fn sort_into<O, R>(
    oracle: &mut O,
    items: &[usize],
    rng: &mut R,
    out: &mut Vec<usize>,
) -> std::result::Result<(), BudgetExhausted>
where
    O: WeightOracle + ?Sized,
    R: Rng + ?Sized,
{
    match items.len() {
        0 => return Ok(()),
        1 => {
            out.push(items[0]);
            return Ok(());
        }
        _ => {}
    }
    let pivot = items[rng.random_range(0..items.len())];
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &j in items.iter().filter(|&&j| j != pivot) {
        if oracle.query(j, pivot)? > 0.5 {
            left.push(j);
        } else {
            right.push(j);
        }
    }
    sort_into(oracle, &left, rng, out)?;
    out.push(pivot);
    sort_into(oracle, &right, rng, out)
}

/// Borda count: descending row sums of `w`, ties to the smaller item id.
pub fn borda(w: &PairwiseWeights) -> Ranking {
    let m = w.m();
    let scores: Vec<f64> = (0..m)
        .map(|i| (0..m).filter(|&j| j != i).map(|j| w.get(i, j)).sum())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ranking::from_order(&order).expect("sorting permutes items")
}

/// `⌈constant · m · ln m⌉`, the KwikSort query allowance.
pub fn query_budget(m: usize, constant: f64) -> Result<u64> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("query budget needs m >= 2, got {m}")));
    }
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "budget constant must be positive, got {constant}"
        )));
    }
    let m_f = m as f64;
    Ok((constant * m_f * m_f.ln()).ceil() as u64)
}

/// Non-private algorithm run on a (possibly noised) weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseRanker {
    Exact,
    Kwiksort,
    Borda,
}

impl BaseRanker {
    /// Exact search when it is feasible, KwikSort otherwise.
    pub fn best_for(m: usize) -> BaseRanker {
        if m <= MAX_EXACT_ITEMS {
            BaseRanker::Exact
        } else {
            BaseRanker::Kwiksort
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaseRanker::Exact => "exact",
            BaseRanker::Kwiksort => "kwiksort",
            BaseRanker::Borda => "borda",
        }
    }
}

impl std::str::FromStr for BaseRanker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(BaseRanker::Exact),
            "kwiksort" => Ok(BaseRanker::Kwiksort),
            "borda" => Ok(BaseRanker::Borda),
            other => Err(Error::InvalidParameter(format!("unknown base ranker '{other}'"))),
        }
    }
}

/// Run `base` on `w`, returning the ranking and the number of weight reads.
pub fn run_base<R: Rng + ?Sized>(
    base: BaseRanker,
    w: &PairwiseWeights,
    rng: &mut R,
) -> Result<(Ranking, u64)> {
    match base {
        BaseRanker::Exact => {
            let res = opt_bruteforce(w)?;
            Ok((res.ranking, res.queries_used))
        }
        BaseRanker::Kwiksort => {
            let mut oracle = ExactOracle::new(w);
            let ranking = kwiksort(&mut oracle, w.m(), rng).expect("unlimited oracle never fails");
            Ok((ranking, oracle.queries_answered()))
        }
        BaseRanker::Borda => Ok((borda(w), crate::ranking::max_pairs(w.m()))),
    }
}

/// Kemeny cost; dimensions are guaranteed by construction at the call sites.
pub(crate) fn cost_against(ranking: &Ranking, w: &PairwiseWeights) -> f64 {
    kemeny_cost_of_order(&ranking.order(), w)
}
