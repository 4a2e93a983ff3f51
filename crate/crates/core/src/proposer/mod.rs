//! The inference roles of the loop: trajectory sampling, semantics
//! generation, error prediction, problem checking and goal proposal.
//!
//! Each role is a trait with oracle, heuristic and LLM-backed implementations.

mod checker;
mod goal;
mod heuristic;
mod lift;
pub mod llm;
mod oracle;
mod select;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use induct_pddl::semantics::check_problem;
use induct_pddl::{Domain, GroundAction, GroundAtom, Name, PddlError, Problem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::ProposedSemantics;
use crate::envs::{Observation, StepStatus};

pub use checker::SetDifferenceChecker;
pub use goal::{builtin_corpus, load_corpus, retrieve, token_f1, Exemplar, HeuristicGoal, OracleGoal};
pub use heuristic::{HeuristicErrorPredictor, HeuristicLearner, HeuristicSampler};
pub use lift::{lift_atom, lifted_delta, lifted_state};
pub use oracle::{OracleErrorPredictor, OracleSampler, OracleSemantics};
pub use select::ProposerSelection;

#[derive(Debug, Error)]
pub enum ProposerError {
    #[error("LLM endpoint failure: {0}")]
    Endpoint(String),
    #[error("no usable content in model output for {role}")]
    Unparseable { role: Role },
    #[error("no failure to explain: the trajectory reached the goal")]
    NoFailure,
    #[error("goal text could not be resolved into a condition: {0}")]
    GoalUnresolvable(String),
    #[error("invalid proposer configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Trajectory,
    Semantics,
    Error,
    Checker,
    Goal,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Trajectory, Role::Semantics, Role::Error, Role::Checker, Role::Goal];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Trajectory => "trajectory",
            Role::Semantics => "semantics",
            Role::Error => "error",
            Role::Checker => "checker",
            Role::Goal => "goal",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which implementation backs a role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposerKind {
    Oracle,
    Heuristic,
    Llm,
}

impl FromStr for ProposerKind {
    type Err = ProposerError;
    fn from_str(s: &str) -> Result<Self, ProposerError> {
        match s.to_ascii_lowercase().as_str() {
            "oracle" => Ok(ProposerKind::Oracle),
            "heuristic" => Ok(ProposerKind::Heuristic),
            "llm" => Ok(ProposerKind::Llm),
            _ => Err(ProposerError::Config(format!("unknown proposer `{s}`"))),
        }
    }
}

impl fmt::Display for ProposerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProposerKind::Oracle => "oracle",
            ProposerKind::Heuristic => "heuristic",
            ProposerKind::Llm => "llm",
        })
    }
}

/// One executed step, kept across episodes for learners that use all experience.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub pre: Observation,
    pub action: GroundAction,
    pub status: StepStatus,
    pub post: Observation,
}

/// Everything a role may look at. `observations` has one more entry than `actions`.
#[derive(Clone, Debug)]
pub struct ProposerContext {
    pub skeleton: Domain,
    /// The domain sampled from beliefs for this iteration.
    pub domain: Domain,
    pub problem: Problem,
    pub task_text: String,
    pub observations: Vec<Observation>,
    pub actions: Vec<GroundAction>,
    pub statuses: Vec<StepStatus>,
    /// Step at which the believed model disagreed with what was observed.
    pub mismatch_at: Option<usize>,
    pub partial_plan: Option<Vec<GroundAction>>,
    /// Every transition seen so far in the run, this episode included.
    pub history: Vec<Transition>,
}

impl ProposerContext {
    pub fn new(skeleton: Domain, domain: Domain, problem: Problem, task_text: &str, initial: Observation) -> Self {
        ProposerContext {
            skeleton,
            domain,
            problem,
            task_text: task_text.to_string(),
            observations: vec![initial],
            actions: Vec::new(),
            statuses: Vec::new(),
            mismatch_at: None,
            partial_plan: None,
            history: Vec::new(),
        }
    }

    pub fn current(&self) -> &Observation {
        self.observations.last().expect("at least the initial observation")
    }

    /// First step that failed: no change, a fatal reset, or a model mismatch.
    pub fn failing_step(&self) -> Option<usize> {
        let first_bad = self.statuses.iter().position(|s| *s != StepStatus::Applied);
        match (first_bad, self.mismatch_at) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn objects(&self) -> &[(Name, Name)] {
        &self.problem.objects
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    UnsatisfiedPrecondition,
    UnreachedGoal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedError {
    pub kind: ErrorKind,
    pub failing_index: Option<usize>,
    /// Violated literals or unmet goal conjuncts, as PDDL text.
    pub literals: Vec<String>,
    pub explanation: String,
}

impl PredictedError {
    pub fn precondition(index: usize, literals: Vec<String>, explanation: &str) -> Self {
        PredictedError {
            kind: ErrorKind::UnsatisfiedPrecondition,
            failing_index: Some(index),
            literals,
            explanation: explanation.to_string(),
        }
    }

    pub fn goal(unmet: Vec<String>, explanation: &str) -> Self {
        PredictedError { kind: ErrorKind::UnreachedGoal, failing_index: None, literals: unmet, explanation: explanation.to_string() }
    }

    pub fn validate(&self) -> Result<(), ProposerError> {
        match self.kind {
            ErrorKind::UnsatisfiedPrecondition if self.failing_index.is_none() => {
                Err(ProposerError::Config("precondition error without a failing index".into()))
            }
            ErrorKind::UnreachedGoal if self.literals.is_empty() => {
                Err(ProposerError::Config("goal error without unmet conjuncts".into()))
            }
            _ => Ok(()),
        }
    }

    /// Text handed to the semantics generator.
    pub fn render(&self) -> String {
        let head = match (self.kind, self.failing_index) {
            (ErrorKind::UnsatisfiedPrecondition, Some(i)) => format!("unsatisfied precondition at step {i}"),
            _ => "goal not reached".to_string(),
        };
        let mut s = head;
        for l in &self.literals {
            s.push_str("\n  ");
            s.push_str(l);
        }
        if !self.explanation.is_empty() {
            s.push_str("\nreason: ");
            s.push_str(&self.explanation);
        }
        s
    }
}

/// A correction to the problem file. The goal is never edited.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemEdit {
    pub objects_to_add: Vec<(Name, Name)>,
    pub atoms_to_add: Vec<GroundAtom>,
    pub atoms_to_remove: Vec<GroundAtom>,
}

impl ProblemEdit {
    pub fn is_empty(&self) -> bool {
        self.objects_to_add.is_empty() && self.atoms_to_add.is_empty() && self.atoms_to_remove.is_empty()
    }

    /// The edited problem, checked against the domain.
    pub fn apply(&self, problem: &Problem, domain: &Domain) -> Result<Problem, PddlError> {
        let mut p = problem.clone();
        let known: BTreeSet<Name> = p.objects.iter().map(|(o, _)| o.clone()).collect();
        for (o, t) in &self.objects_to_add {
            if !known.contains(o) {
                p.objects.push((o.clone(), t.clone()));
            }
        }
        for a in &self.atoms_to_remove {
            p.init.remove(a);
        }
        p.init.extend(self.atoms_to_add.iter().cloned());
        check_problem(domain, &p)?;
        Ok(p)
    }
}

pub trait TrajectorySampler {
    fn sample_trajectory(&mut self, ctx: &ProposerContext) -> Result<Vec<GroundAction>, ProposerError>;
}

pub trait SemanticsGenerator {
    /// Semantics for every action of the domain in one call.
    fn generate_semantics(
        &mut self,
        ctx: &ProposerContext,
        error: Option<&PredictedError>,
    ) -> Result<ProposedSemantics, ProposerError>;
}

pub trait ErrorPredictor {
    fn predict_error(&mut self, ctx: &ProposerContext) -> Result<PredictedError, ProposerError>;
}

pub trait ProblemChecker {
    fn check_problem(&mut self, ctx: &ProposerContext) -> Result<Option<ProblemEdit>, ProposerError>;
}

pub trait GoalProposer {
    fn propose_goal(
        &mut self,
        text: &str,
        skeleton: &Domain,
        objects: &[(Name, Name)],
        exemplars: &[Exemplar],
    ) -> Result<induct_pddl::Condition, ProposerError>;
}

/// One implementation per role.
pub struct Proposers {
    pub sampler: Box<dyn TrajectorySampler>,
    pub semantics: Box<dyn SemanticsGenerator>,
    pub error: Box<dyn ErrorPredictor>,
    pub checker: Box<dyn ProblemChecker>,
    pub goal: Box<dyn GoalProposer>,
    /// Present when some role talks to a model; its exchanges go to the trace.
    pub llm: Option<llm::LlmClient>,
}

/// Goal conjuncts unmet in `obs`, as text.
pub(crate) fn unmet_conjuncts(
    goal: &induct_pddl::Condition,
    obs: &Observation,
    domain: &Domain,
    problem: &Problem,
) -> Result<Vec<String>, PddlError> {
    let expanded = induct_pddl::semantics::expand_exists(goal, domain, problem);
    let state = obs.state();
    let mut out = Vec::new();
    for (c, orig) in expanded.conjuncts().into_iter().zip(goal.conjuncts()) {
        if !induct_pddl::holds(&state, c)? {
            out.push(orig.to_string());
        }
    }
    Ok(out)
}
