//! Exact Kemeny optimum for small instances.
//!
//! A depth-first scan over permutations, split by first item, pruned with an
//! exact subset-DP bound on the cost of completing each prefix.

use crate::error::{Error, Result};
use crate::par::{map_indices, Execution};
use crate::ranking::{kemeny_cost_of_order, max_pairs, AggregationResult, PairwiseWeights, Ranking};

/// Largest item count the search accepts (10! ≈ 3.6M leaves when every ranking ties).
pub const MAX_EXACT_ITEMS: usize = 10;

/// Costs closer than this are treated as ties and resolved lexicographically.
const TIE_TOLERANCE: f64 = 1e-9;

/// Minimum-cost ranking over all `m!` permutations.
///
/// Ties are broken towards the lexicographically smallest position array, and
/// the result does not depend on whether the scan ran in parallel.
pub fn opt_bruteforce(w: &PairwiseWeights) -> Result<AggregationResult> {
    opt_bruteforce_with(w, Execution::default())
}

pub fn opt_bruteforce_with(w: &PairwiseWeights, exec: Execution) -> Result<AggregationResult> {
    let m = w.m();
    if m > MAX_EXACT_ITEMS {
        return Err(Error::Guard(format!(
            "exhaustive search refused for m={m} (limit {MAX_EXACT_ITEMS})"
        )));
    }
    let table = PrefixTable::new(w);
    let partials = map_indices(exec, m, |first| table.best_with_first(first));
    let mut best: Option<Candidate> = None;
    for cand in partials.into_iter().flatten() {
        best = Some(match best {
            None => cand,
            Some(cur) => cur.better_of(cand),
        });
    }
    let best = best.expect("m >= 1 yields at least one candidate");
    let ranking = Ranking::from_positions(best.positions).expect("search emits permutations");
    let cost = kemeny_cost_of_order(&ranking.order(), w);
    Ok(AggregationResult::non_private(ranking, cost, max_pairs(m), 0))
}

#[derive(Debug, Clone)]
struct Candidate {
    cost: f64,
    positions: Vec<usize>,
}

impl Candidate {
    fn better_of(self, other: Candidate) -> Candidate {
        let cheaper = other.cost < self.cost - TIE_TOLERANCE;
        let tied_and_smaller = other.cost <= self.cost + TIE_TOLERANCE && other.positions < self.positions;
        if cheaper || tied_and_smaller {
            other
        } else {
            self
        }
    }
}

/// `add[i][mask]` = cost of appending item `i` after the items in `mask`;
/// `completion[mask]` = cheapest way to order the items outside `mask` after it.
struct PrefixTable {
    m: usize,
    add: Vec<f64>,
    completion: Vec<f64>,
}

impl PrefixTable {
    fn new(w: &PairwiseWeights) -> Self {
        let m = w.m();
        let size = 1usize << m;
        let mut add = vec![0.0; m * size];
        for i in 0..m {
            let row = &mut add[i * size..(i + 1) * size];
            for mask in 1..size {
                let low = mask.trailing_zeros() as usize;
                let rest = mask & (mask - 1);
                row[mask] = row[rest] + if low == i { 0.0 } else { w.get(i, low) };
            }
        }
        let mut table = PrefixTable {
            m,
            add,
            completion: vec![0.0; size],
        };
        for mask in (0..size - 1).rev() {
            table.completion[mask] = (0..m)
                .filter(|&i| mask & (1 << i) == 0)
                .map(|i| table.cost_of(i, mask) + table.completion[mask | (1 << i)])
                .fold(f64::INFINITY, f64::min);
        }
        table
    }

    fn cost_of(&self, item: usize, mask: usize) -> f64 {
        self.add[item * (1usize << self.m) + mask]
    }

    fn best_with_first(&self, first: usize) -> Option<Candidate> {
        let mut order = Vec::with_capacity(self.m);
        order.push(first);
        let mut best: Option<Candidate> = None;
        self.search(&mut order, 1usize << first, 0.0, &mut best);
        best
    }

    // Only branches that can still finish within the tie tolerance of the
    // optimum are expanded; every tied permutation is still visited.
    fn search(&self, order: &mut Vec<usize>, mask: usize, cost: f64, best: &mut Option<Candidate>) {
        if cost + self.completion[mask] > self.completion[0] + TIE_TOLERANCE {
            return;
        }
        if order.len() == self.m {
            let mut positions = vec![0; self.m];
            for (rank, &item) in order.iter().enumerate() {
                positions[item] = rank;
            }
            let cand = Candidate { cost, positions };
            *best = Some(match best.take() {
                None => cand,
                Some(cur) => cur.better_of(cand),
            });
            return;
        }
        for item in 0..self.m {
            if mask & (1 << item) != 0 {
                continue;
            }
            order.push(item);
            self.search(order, mask | (1 << item), cost + self.cost_of(item, mask), best);
            order.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::{build_weights, RankingProfile};

    #[test]
    fn unanimous_profile_is_recovered() {
        let r = Ranking::from_order(&[3, 1, 4, 0, 2]).unwrap();
        let w = PairwiseWeights::unanimous(&r);
        let res = opt_bruteforce(&w).unwrap();
        assert_eq!(res.ranking, r);
        assert_eq!(res.cost, 0.0);
    }

    #[test]
    fn two_candidates() {
        let w = PairwiseWeights::new(2, vec![0.0, 0.9, 0.1, 0.0]).unwrap();
        let res = opt_bruteforce(&w).unwrap();
        assert_eq!(res.ranking.order(), vec![0, 1]);
        assert!((res.cost - 0.1).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_smallest_positions() {
        // all pairs tied: every ranking costs C(m,2)/2, identity wins
        let r = Ranking::from_order(&[2, 0, 1, 3]).unwrap();
        let w = build_weights(&RankingProfile::new(vec![r.clone(), r.reversed()]).unwrap());
        let res = opt_bruteforce(&w).unwrap();
        assert_eq!(res.ranking, Ranking::identity(4));
        assert_eq!(res.cost, 3.0);
    }

    #[test]
    fn refuses_large_instances() {
        let w = PairwiseWeights::unanimous(&Ranking::identity(11));
        assert!(matches!(opt_bruteforce(&w), Err(Error::Guard(_))));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let w = PairwiseWeights::from_upper(7, |i, j| ((i * 7 + j * 3) % 5) as f64 / 4.0);
        let a = opt_bruteforce_with(&w, Execution::Sequential).unwrap();
        let b = opt_bruteforce_with(&w, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
