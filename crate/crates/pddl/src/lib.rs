//! PDDL toolkit: a typed AST, parser and canonical printer, closed-world
//! grounding and evaluation, a forward-search planner and a plan validator.
//!
//! Supported requirements: `:strips :typing :negative-preconditions
//! :disjunctive-preconditions :conditional-effects :existential-preconditions`.

pub mod ast;
mod error;
mod name;
pub mod parse;
pub mod planner;
mod print;
pub mod semantics;
mod sexpr;

pub use ast::*;
pub use error::PddlError;
pub use name::Name;
pub use parse::{
    parse_action, parse_condition, parse_domain, parse_ground_action, parse_ground_atom, parse_literal, parse_problem,
    CondKind,
};
pub use planner::{plan, simulate, validate_plan, PlanResult, PlanValidation, PlannerConfig, PlannerError, SearchMode};
pub use print::{print_domain, print_problem};
pub use semantics::{applicable, apply, goal_holds, ground, holds, successor};
