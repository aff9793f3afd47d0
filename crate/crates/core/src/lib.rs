//! Exact solver for single-machine scheduling under time-of-use energy
//! tariffs on a machine with power states (off / idle / processing / ...).
//!
//! The machine is described by a transition diagram: a set of states with a
//! transition-time and a transition-power matrix. Jobs must run in the
//! processing state, the machine is off in the first and last interval, and
//! the objective is the total energy cost (TEC): the sum over intervals of
//! the interval's energy price times the power of the active transition.
//!
//! The solver is a depth-first branch-and-bound over job sequences. Optimal
//! switching costs between processing intervals are precomputed once per
//! instance ([`switching`]), lower bounds come from relaxing the un-fixed
//! jobs into equal-length pieces ([`bounds`]), and feasible incumbents are
//! recovered early by bin-packing jobs into the processing blocks of the
//! relaxed solutions ([`packing`]).
//!
//! All money amounts are exact: costs and powers are rationals, scaled to a
//! common integer grid per instance, so bound comparisons never suffer
//! floating-point drift.

pub mod bnb;
pub mod bounds;
pub mod instgen;
pub mod io;
pub mod model;
pub mod num;
pub mod packing;
pub mod seqtec;
pub mod switching;

pub use bnb::{solve, solve_with_progress, ProgressEvent, SearchConfig, SolveResult, SolveStatus};
pub use bounds::{gcd_of_remaining, lower_bound, Block, BlockList, BoundMode, GcdValue, PartialSequence};
pub use instgen::{generate, ingest_prices, nosby, standby_demo, CostSource, GenSpec};
pub use model::{
    processing_window, tec, validate, Instance, ProcessingWindow, Schedule, StateId,
    TransitionDiagram, Violation,
};
pub use num::Rational;
pub use packing::{bin_find, bin_pack, initial_upper_bound, BinFindResult, PackAssignment, PackOutcome};
pub use seqtec::{fixed_sequence_tec, LevelsArray};
pub use switching::{build_graph, replay, spaces, Behavior, IntervalStateGraph, SwitchingTable};

/// Errors shared across the crate. Feasibility *violations* are data
/// ([`model::Violation`]), not errors.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("transition ({from}, {to}) used in interval {interval} does not exist")]
    AbsentTransition { interval: usize, from: String, to: String },
    #[error("machine can never be in the processing state within the horizon")]
    NoProcessingWindow,
    #[error("no feasible schedule for the given job sequence")]
    InfeasibleSequence,
    #[error("the processing window cannot host the relaxed jobs")]
    InfeasibleRelaxation,
    #[error("split with no recorded join")]
    EmptyJoinStack,
    #[error("malformed switching behavior: {0}")]
    MalformedBehavior(String),
    #[error("reconstructed schedule failed validation: {0:?}")]
    ReconstructionMismatch(Vec<model::Violation>),
    #[error("input too large for this operation: {0}")]
    TooLarge(String),
    #[error("numeric overflow: {0}")]
    Numeric(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("price profile too short: need {needed} intervals, profile has {available}")]
    ProfileTooShort { needed: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
