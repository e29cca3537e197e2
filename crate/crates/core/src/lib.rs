//! Reduction of probabilistic control-flow programs.
//!
//! A PCFP pairs control locations with finite-domain integer variables and
//! location-guided probabilistic guarded commands. This crate parses a
//! PRISM-like input language into single-location programs, unfolds selected
//! variables into the location space, eliminates locations via weakest
//! precondition reasoning while preserving exact reachability probabilities,
//! and solves the resulting explicit Markov chains / MDPs with exact
//! rational arithmetic to certify the reduction.

pub mod eliminate;
pub mod expr;
pub mod frontend;
pub mod gen;
pub mod pcfp;
pub mod solver;
pub mod unfold;

pub use expr::{
    ConstEnv, ConstId, DomainMap, IntExpr, Predicate, Update, Valuation, VarDomain, VarId,
};
pub use pcfp::{
    build_semantics, check_deterministic, check_potential_goal, check_well_formed,
    mark_goal_states, ActionTag, Command, Destination, ExplicitModel, GoalSpec, LocationId,
    LocationInfo, Objective, Pcfp, StateId,
};
