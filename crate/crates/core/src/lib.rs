//! Exact enumeration of maximal parent sets under the MDL score.
//!
//! Given a table of categorical observations, [`engine::run`] finds, for every
//! variable, all parent sets whose MDL score beats every one of their strict
//! subsets. Those lists answer any optimal-parent-set query by a single scan
//! ([`MpsList::query_d`]).
//!
//! Score arithmetic is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiation.

pub mod dataset;
pub mod engine;
pub mod error;
pub mod lattice;
pub mod oracle;
pub mod scalar;
pub mod scoring;
pub mod store;
pub mod varset;

pub use dataset::{canonical_order, parse_arity_declarations, Dataset, LoadOptions};
pub use engine::{
    estimate_next2_layer, measure_extra_work, run, synchronized_reference, EngineConfig, ExtraWork,
    NodeTrace, RunOutput, RunStats,
};
pub use error::{Error, Result};
pub use lattice::{layer_node_count, LatticeNode, BYTES_PER_NODE};
pub use scalar::Real;
pub use scoring::{group_by, network_complexity, score_targets, GroupIndex, ScoreResult, Scorer, TargetScore};
pub use store::{MpsEntry, MpsList};
pub use varset::VarSet;

pub type MpsEntry64 = MpsEntry<f64>;
pub type MpsList64 = MpsList<f64>;
pub type RunOutput64 = RunOutput<f64>;
pub type ScoreResult64 = ScoreResult<f64>;

pub type MpsEntry32 = MpsEntry<f32>;
pub type MpsList32 = MpsList<f32>;
pub type RunOutput32 = RunOutput<f32>;
pub type ScoreResult32 = ScoreResult<f32>;

/// Runs the engine in double precision.
pub fn run_f64(dataset: &Dataset, config: &EngineConfig) -> Result<RunOutput64> {
    engine::run::<f64>(dataset, config)
}
