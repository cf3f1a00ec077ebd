//! Simulation laboratory for tournament design.
//!
//! Players are identified by their true strength rank. A [`WinMatrix`] gives
//! the probability that one player beats another; a format turns a matrix
//! and a random stream into a [`TournamentResult`] holding a strict ranking
//! and the match log. The [`metrics`] module scores rankings against the true
//! order, [`engine`] runs Monte Carlo replications, and [`oracle`] computes
//! exact distributions for small fields.

pub mod engine;
pub mod formats;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod prob;
pub mod swiss;

pub use engine::{
    dominance, run, sweep, DominanceEstimate, EngineError, Execution, RunConfig, RunSummary,
    SweepRow,
};
pub use formats::{
    run_format, Bracket, FormatError, FormatKind, FormatSpec, GroupDraw, Seeding, TieRule,
};
pub use metrics::{
    avg_rank_top, inversions, weighted_inversions, LogBase, Metric, MetricSet, MetricVector,
};
pub use model::{validate_result, MatchRecord, ObservedRanking, PlayerId, Stage, TournamentResult};
pub use oracle::{enumerate, OracleError, OutcomeEnumeration};
pub use prob::{elo_matrix, skill_matrix, ModelError, RatingTable, SkillModel, WinMatrix};
