//! Simulation and analysis of the n-player iterated prisoner's dilemma under
//! time-average ("Smale") strategies, in exact rational arithmetic.
//!
//! The crate is organised bottom-up:
//!
//! * [`rational`] — arbitrary-precision rationals and exact decimal rendering;
//! * [`game`] — symmetric n-player dilemma payoffs and their axioms;
//! * [`geometry`] — the planar outcome set, separation lines, projections;
//! * [`plans`] — per-player decision rules (memory-one on the time average);
//! * [`engine`] — the exact round-by-round simulator and decay-bound checker;
//! * [`analysis`] — limit prediction, dissent statistics, segment formulas.
//!
//! A Smale-style player does not react to the last round; it watches the
//! running time average of the whole history, projected to the plane spanned
//! by (own payoff, population mean payoff), and defects exactly when that
//! point lies strictly above its chosen separation line. Everything here is
//! computed over `BigRational`, so statements like "the average equals the
//! predicted limit" or "the decay bound holds at every round" are decided
//! exactly, not to within a float epsilon.

pub mod analysis;
pub mod engine;
pub mod game;
pub mod geometry;
pub mod plans;
pub mod rational;

pub use analysis::{
    dissenter_statistics, harmonic_slope, is_good_line, predict_limit, segment_limit,
    AnalysisError, Classification, DissenterReport, IdentityResiduals, LimitPrediction,
    SegmentLimit,
};
pub use engine::{
    check_smale_bound, envelope_constant, plan_cooperates_below, plan_defects_above, run, step,
    BoundCheck, BoundSide, EngineError, Runner, SimState, Snapshot, SnapshotPolicy, Trajectory,
};
pub use game::{Axiom, GameError, GameSpec, SwitchingInequality, ValidationReport};
pub use geometry::{
    convex_hull, good_line, in_convex_hull, is_separation_line, project, slope_bounds, Line,
    LineError, Point, SlopeBounds, StrategySet,
};
pub use plans::{parse_script, random_script, script_to_string, Move, Plan, PlanError};
pub use rational::Rat;
