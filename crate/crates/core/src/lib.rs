//! Differentially private Kemeny rank aggregation.
//!
//! The crate covers permutations and the Kendall tau metric ([`ranking`]), an
//! exact small-instance optimum ([`oracle`]), non-private base rankers
//! ([`base`]), central-model mechanisms ([`central`]), a simulated local-model
//! protocol ([`local`]), a lower-bound construction checker ([`lowerbound`]),
//! and synthetic experiments ([`harness`]).

pub mod base;
pub mod central;
pub mod error;
pub mod harness;
pub mod local;
pub mod lowerbound;
pub mod oracle;
pub mod par;
pub mod ranking;
pub mod seed;

pub use base::{borda, kwiksort, query_budget, BaseRanker, BudgetExhausted, ExactOracle, WeightOracle};
pub use central::{dp_kwiksort, reduce_noise_all, Mechanism, PrivacyBudget};
pub use error::{Error, Result};
pub use local::{ldp_kwiksort, local_full_matrix, reduce_local_noise_all};
pub use oracle::{opt_bruteforce, MAX_EXACT_ITEMS};
pub use par::Execution;
pub use ranking::{build_weights, kemeny_cost, kendall_tau, AggregationResult, PairwiseWeights, Ranking, RankingProfile};
