//! Permutations, the Kendall tau metric and the Kemeny objective.
//!
//! A [`Ranking`] stores *positions*: `positions[j]` is the 0-based rank of item
//! `j`, so a lower value means a stronger preference. [`PairwiseWeights`] holds
//! the matrix `w[i][j]` = fraction of voters placing `i` before `j`; every
//! aggregation algorithm in the crate consumes weights, never raw rankings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the probability constraint `w[i][j] + w[j][i] = 1`.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ranking {
    positions: Vec<usize>,
}

impl Ranking {
    /// Build from a position array (`positions[item] = rank`).
    pub fn from_positions(positions: Vec<usize>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidRanking("a ranking needs at least one item".into()));
        }
        let m = positions.len();
        let mut seen = vec![false; m];
        for &p in &positions {
            if p >= m || seen[p] {
                return Err(Error::InvalidRanking(format!(
                    "positions {positions:?} are not a permutation of 0..{m}"
                )));
            }
            seen[p] = true;
        }
        Ok(Ranking { positions })
    }

    /// Build from a preference order (most preferred item first).
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let m = order.len();
        if m == 0 {
            return Err(Error::InvalidRanking("a ranking needs at least one item".into()));
        }
        let mut positions = vec![usize::MAX; m];
        for (rank, &item) in order.iter().enumerate() {
            if item >= m || positions[item] != usize::MAX {
                return Err(Error::InvalidRanking(format!(
                    "order {order:?} is not a permutation of 0..{m}"
                )));
            }
            positions[item] = rank;
        }
        Ok(Ranking { positions })
    }

    pub fn identity(m: usize) -> Self {
        assert!(m >= 1, "identity ranking needs m >= 1");
        Ranking {
            positions: (0..m).collect(),
        }
    }

    pub fn reverse(m: usize) -> Self {
        assert!(m >= 1, "reverse ranking needs m >= 1");
        Ranking {
            positions: (0..m).rev().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn position(&self, item: usize) -> usize {
        self.positions[item]
    }

    /// Items listed from most to least preferred.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.positions.len()];
        for (item, &rank) in self.positions.iter().enumerate() {
            order[rank] = item;
        }
        order
    }

    /// The ranking with the preference order reversed.
    pub fn reversed(&self) -> Ranking {
        let m = self.positions.len();
        Ranking {
            positions: self.positions.iter().map(|&p| m - 1 - p).collect(),
        }
    }

    pub fn prefers(&self, i: usize, j: usize) -> bool {
        self.positions[i] < self.positions[j]
    }
}

/// The multiset of voter rankings, all over the same `m` items.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingProfile {
    m: usize,
    rankings: Vec<Ranking>,
}

impl RankingProfile {
    pub fn new(rankings: Vec<Ranking>) -> Result<Self> {
        let first = rankings
            .first()
            .ok_or_else(|| Error::InvalidProfile("a profile needs at least one voter".into()))?;
        let m = first.len();
        if let Some(bad) = rankings.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bad.len(),
            });
        }
        Ok(RankingProfile { m, rankings })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.rankings.len()
    }

    pub fn rankings(&self) -> &[Ranking] {
        &self.rankings
    }
}

/// Pairwise preference fractions satisfying the probability constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseWeights {
    m: usize,
    w: Vec<f64>,
}

impl PairwiseWeights {
    /// Validate a row-major `m × m` matrix. The diagonal is ignored and reset to 0.
    pub fn new(m: usize, mut w: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidWeights("m must be at least 1".into()));
        }
        if w.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                got: w.len(),
            });
        }
        for i in 0..m {
            w[i * m + i] = 0.0;
            for j in (i + 1)..m {
                let (a, b) = (w[i * m + j], w[j * m + i]);
                if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
                    return Err(Error::InvalidWeights(format!(
                        "w[{i}][{j}]={a}, w[{j}][{i}]={b} outside [0,1]"
                    )));
                }
                if (a + b - 1.0).abs() > PROBABILITY_TOLERANCE {
                    return Err(Error::InvalidWeights(format!(
                        "w[{i}][{j}] + w[{j}][{i}] = {} != 1",
                        a + b
                    )));
                }
            }
        }
        Ok(PairwiseWeights { m, w })
    }

    /// Build from the upper triangle: `upper(i, j)` for `i < j` is clipped to
    /// `[0,1]` and its complement fills `w[j][i]`.
    pub fn from_upper<F>(m: usize, mut upper: F) -> Self
    where
        F: FnMut(usize, usize) -> f64,
    {
        assert!(m >= 1, "weights need m >= 1");
        let mut w = vec![0.0; m * m];
        for i in 0..m {
            for j in (i + 1)..m {
                let v = upper(i, j).clamp(0.0, 1.0);
                w[i * m + j] = v;
                w[j * m + i] = 1.0 - v;
            }
        }
        PairwiseWeights { m, w }
    }

    /// Weights of the profile consisting of `ranking` alone.
    pub fn unanimous(ranking: &Ranking) -> Self {
        PairwiseWeights::from_upper(ranking.len(), |i, j| {
            if ranking.prefers(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `w[i][j]`: fraction preferring `i` over `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.m + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }
}

/// Record of one privacy-consuming step of a private algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetCharge {
    pub phase: String,
    pub epsilon: f64,
    pub delta: f64,
    /// Noise draws (central) or randomized-response applications (local) performed.
    pub draws: u64,
}

/// Output of every aggregation algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub ranking: Ranking,
    /// Kemeny score of `ranking` against the true weights.
    pub cost: f64,
    pub queries_used: u64,
    pub fallback_used: bool,
    pub seed: u64,
    /// Empty for non-private algorithms.
    pub charges: Vec<BudgetCharge>,
}

impl AggregationResult {
    pub fn non_private(ranking: Ranking, cost: f64, queries_used: u64, seed: u64) -> Self {
        AggregationResult {
            ranking,
            cost,
            queries_used,
            fallback_used: false,
            seed,
            charges: Vec::new(),
        }
    }

    pub fn epsilon_spent(&self) -> f64 {
        self.charges.iter().map(|c| c.epsilon).sum()
    }
}

/// Number of pairs ordered differently by `a` and `b`.
///
/// Runs in `O(m log m)`: walk the items in `a`'s preference order, read off
/// their positions in `b`, and count inversions of that sequence.
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut seq: Vec<usize> = a.order().into_iter().map(|item| b.position(item)).collect();
    let mut buf = vec![0; seq.len()];
    Ok(count_inversions(&mut seq, &mut buf))
}

fn count_inversions(seq: &mut [usize], buf: &mut [usize]) -> u64 {
    let len = seq.len();
    if len < 2 {
        return 0;
    }
    let mid = len / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(left, bl) + count_inversions(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < len {
        if seq[i] <= seq[j] {
            buf[k] = seq[i];
            i += 1;
        } else {
            buf[k] = seq[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + len - j].copy_from_slice(&seq[j..len]);
    seq.copy_from_slice(&buf[..len]);
    count
}

/// Exact pairwise fractions of a profile, computed from integer counts.
pub fn build_weights(profile: &RankingProfile) -> PairwiseWeights {
    let m = profile.m();
    let n = profile.n();
    let mut counts = vec![0u64; m * m];
    for ranking in profile.rankings() {
        let order = ranking.order();
        for (a, &i) in order.iter().enumerate() {
            for &j in &order[a + 1..] {
                counts[i * m + j] += 1;
            }
        }
    }
    let n_f = n as f64;
    let mut w = vec![0.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let c = counts[i * m + j];
            w[i * m + j] = c as f64 / n_f;
            w[j * m + i] = (n as u64 - c) as f64 / n_f;
        }
    }
    PairwiseWeights { m, w }
}

/// Kemeny score of `sigma`: sum of `w[j][i]` over pairs with `i` placed before `j`.
///
/// Equal to the average Kendall tau distance from `sigma` to the profile that
/// produced `w`.
pub fn kemeny_cost(sigma: &Ranking, w: &PairwiseWeights) -> Result<f64> {
    if sigma.len() != w.m() {
        return Err(Error::DimensionMismatch {
            expected: w.m(),
            got: sigma.len(),
        });
    }
    Ok(kemeny_cost_of_order(&sigma.order(), w))
}

/// Kemeny score for a preference order; the caller guarantees dimensions match.
pub(crate) fn kemeny_cost_of_order(order: &[usize], w: &PairwiseWeights) -> f64 {
    let mut cost = 0.0;
    for (a, &i) in order.iter().enumerate() {
        for &j in &order[a + 1..] {
            cost += w.get(j, i);
        }
    }
    cost
}

/// `C(m, 2)`, the largest possible Kendall distance on `m` items.
pub fn max_pairs(m: usize) -> u64 {
    (m as u64) * (m.saturating_sub(1) as u64) / 2
}
