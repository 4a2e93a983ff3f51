//! Forward state-space planner, plan validator and external planner adapter.

mod compiled;
pub mod external;

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::*;
use crate::error::PddlError;
use crate::semantics::{check_problem, goal_holds, successor};

pub use external::{ExternalPlanError, ExternalPlanner, ExternalPlannerConfig};

use compiled::{compile, Bits, Compiled};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    BreadthFirst,
    GreedyBestFirst,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub time_budget_secs: f64,
    pub node_budget: usize,
    pub search_mode: SearchMode,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { time_budget_secs: 30.0, node_budget: 1_000_000, search_mode: SearchMode::GreedyBestFirst }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if !(self.time_budget_secs > 0.0) || !self.time_budget_secs.is_finite() {
            return Err(PlannerError::InvalidConfig(format!("time budget must be > 0, got {}", self.time_budget_secs)));
        }
        if self.node_budget == 0 {
            return Err(PlannerError::InvalidConfig("node budget must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanResult {
    Complete { plan: Vec<GroundAction> },
    /// Search space exhausted; path to the explored state with most goal conjuncts.
    Partial { prefix: Vec<GroundAction>, satisfied: usize },
    Unsolvable,
    BudgetExhausted { prefix: Vec<GroundAction>, satisfied: usize },
}

impl PlanResult {
    pub fn complete(&self) -> Option<&[GroundAction]> {
        match self {
            PlanResult::Complete { plan } => Some(plan),
            _ => None,
        }
    }

    /// Best-effort prefix for a failed search, if it makes any progress.
    pub fn partial(&self) -> Option<&[GroundAction]> {
        match self {
            PlanResult::Partial { prefix, .. } | PlanResult::BudgetExhausted { prefix, .. } if !prefix.is_empty() => {
                Some(prefix)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("domain and problem are inconsistent: {0}")]
    Inconsistent(PddlError),
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

struct Node {
    state: Bits,
    parent: usize,
    op: u32,
    g: usize,
}

const ROOT: usize = usize::MAX;

struct Best {
    node: usize,
    satisfied: usize,
    g: usize,
}

/// Search for a plan from the problem's init to its goal under `domain`.
pub fn plan(domain: &Domain, problem: &Problem, cfg: &PlannerConfig) -> Result<PlanResult, PlannerError> {
    cfg.validate()?;
    check_problem(domain, problem).map_err(PlannerError::Inconsistent)?;
    let task = compile(domain, problem)?;
    let deadline = Instant::now() + Duration::from_secs_f64(cfg.time_budget_secs);
    Ok(search(&task, cfg, deadline))
}

fn extract(task: &Compiled, nodes: &[Node], mut idx: usize) -> Vec<GroundAction> {
    let mut out = Vec::new();
    while idx != ROOT && nodes[idx].parent != ROOT {
        out.push(task.ops[nodes[idx].op as usize].action.clone());
        idx = nodes[idx].parent;
    }
    out.reverse();
    out
}

fn search(task: &Compiled, cfg: &PlannerConfig, deadline: Instant) -> PlanResult {
    let n_goals = task.goal.len();
    let init_sat = task.satisfied(&task.init);
    if init_sat == n_goals {
        return PlanResult::Complete { plan: Vec::new() };
    }
    let mut nodes = vec![Node { state: task.init.clone(), parent: ROOT, op: 0, g: 0 }];
    let mut seen: HashMap<Bits, usize> = HashMap::new();
    seen.insert(task.init.clone(), 0);
    let mut best = Best { node: 0, satisfied: init_sat, g: 0 };

    // Greedy: (h, g, insertion) min-ordered. Breadth-first: FIFO.
    let mut heap: BinaryHeap<Reverse<(usize, usize, usize)>> = BinaryHeap::new();
    let mut fifo: VecDeque<usize> = VecDeque::new();
    match cfg.search_mode {
        SearchMode::GreedyBestFirst => heap.push(Reverse((n_goals - init_sat, 0, 0))),
        SearchMode::BreadthFirst => fifo.push_back(0),
    }
    let mut expansions = 0usize;
    loop {
        let current = match cfg.search_mode {
            SearchMode::GreedyBestFirst => heap.pop().map(|Reverse((_, _, i))| i),
            SearchMode::BreadthFirst => fifo.pop_front(),
        };
        let Some(current) = current else {
            let prefix = extract(task, &nodes, best.node);
            return if prefix.is_empty() {
                PlanResult::Unsolvable
            } else {
                PlanResult::Partial { prefix, satisfied: best.satisfied }
            };
        };
        expansions += 1;
        if expansions % 128 == 0 && Instant::now() >= deadline {
            return PlanResult::BudgetExhausted { prefix: extract(task, &nodes, best.node), satisfied: best.satisfied };
        }
        let g = nodes[current].g + 1;
        for (oi, op) in task.ops.iter().enumerate() {
            if !op.pre.eval(&nodes[current].state) {
                continue;
            }
            let next = op.apply(&nodes[current].state);
            if seen.contains_key(&next) {
                continue;
            }
            if nodes.len() >= cfg.node_budget {
                return PlanResult::BudgetExhausted {
                    prefix: extract(task, &nodes, best.node),
                    satisfied: best.satisfied,
                };
            }
            let sat = task.satisfied(&next);
            let idx = nodes.len();
            nodes.push(Node { state: next.clone(), parent: current, op: oi as u32, g });
            seen.insert(next, idx);
            if sat == n_goals {
                return PlanResult::Complete { plan: extract(task, &nodes, idx) };
            }
            let better = match sat.cmp(&best.satisfied) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => {
                    g < best.g || (g == best.g && extract(task, &nodes, idx) < extract(task, &nodes, best.node))
                }
            };
            if better {
                best = Best { node: idx, satisfied: sat, g };
            }
            match cfg.search_mode {
                SearchMode::GreedyBestFirst => heap.push(Reverse((n_goals - sat, g, idx))),
                SearchMode::BreadthFirst => fifo.push_back(idx),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanValidation {
    Valid,
    /// The action at `index` is inapplicable in the state reached before it.
    PreconditionFailure { index: usize },
    /// Every action applied but the final state misses the goal; `index` is the plan length.
    GoalMiss { index: usize },
}

impl PlanValidation {
    pub fn is_valid(&self) -> bool {
        matches!(self, PlanValidation::Valid)
    }
}

/// Sequentially apply `plan` from the problem's init and check the goal.
pub fn validate_plan(domain: &Domain, problem: &Problem, plan: &[GroundAction]) -> Result<PlanValidation, PddlError> {
    let mut state = problem.initial_state();
    for (i, a) in plan.iter().enumerate() {
        match successor(&state, a, domain, problem)? {
            Some(next) => state = next,
            None => return Ok(PlanValidation::PreconditionFailure { index: i }),
        }
    }
    if goal_holds(&state, problem, domain)? {
        Ok(PlanValidation::Valid)
    } else {
        Ok(PlanValidation::GoalMiss { index: plan.len() })
    }
}

/// States visited by executing `plan` from init; stops at the first inapplicable action.
pub fn simulate(domain: &Domain, problem: &Problem, plan: &[GroundAction]) -> Result<Vec<State>, PddlError> {
    let mut states = vec![problem.initial_state()];
    for a in plan {
        match successor(states.last().unwrap(), a, domain, problem)? {
            Some(next) => states.push(next),
            None => break,
        }
    }
    Ok(states)
}
