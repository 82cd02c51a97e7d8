//! Local-model private aggregation over simulated users.

pub mod adaptive;
pub mod full_matrix;
pub mod rr;
pub mod users;

pub use adaptive::{
    group_cap, ldp_kwiksort, ldp_kwiksort_pool, min_adaptive_queries, AdaptiveLocalAnswerer,
    LdpKwikSortPlan, LocalRun, PairAssignment, TranscriptRecord, UserPartition,
};
pub use full_matrix::{
    estimate_full_matrix, local_full_matrix, reduce_local_noise_all, reduce_local_noise_all_with,
    CoordinateSampling, LocalEstimate,
};
pub use rr::{randomized_response, Perturbation, RrConfig};
pub use users::{LocalClient, PrivacyLedger, SimulatedUser, UserPool};
