//! Finite-length simulation: random Tanner graphs, correlated sources,
//! erasure channels and a GF(2) peeling decoder with correlation nodes.

mod graph;
mod sample;
mod trials;

pub use graph::{peel, peel_with_schedule, CodeGraph, ConstraintGraph, ConstraintRole, GraphBuilder, Observation, PeelOutcome};
pub use sample::{ldpc_num_checks, sample_ldgm_graph, sample_ldpc_graph, sample_sources, Sources};
pub use trials::{
    compare_to_de, de_prediction, run_trials, simulate_single_user_trial, simulate_trial, CodeFamily, DeComparison, TrialConfig,
    TrialOutcome, TrialRecord, TrialResult, RNG_NAME,
};
