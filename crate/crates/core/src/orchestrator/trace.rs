//! Line-delimited JSON run trace.

use induct_pddl::{GroundAction, PlanResult};
use serde::{Deserialize, Serialize};

use crate::envs::{Observation, StepCheck, StepStatus};
use crate::proposer::llm::LlmExchange;
use crate::proposer::{PredictedError, ProblemEdit, Role};

pub const TRACE_SCHEMA: &str = "induct-trace";
pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectorySource {
    Planner,
    Sampler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Success,
    ResetBudget,
    StepBudget,
    IterationBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefEntry {
    pub key: String,
    pub belief: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub success: bool,
    pub termination: Termination,
    pub nr: usize,
    pub nes: usize,
    pub iterations: usize,
    /// Satisfied top-level goal conjuncts over all conjuncts, at the end.
    pub gc_fraction: f64,
    /// Domain of every leaf with belief ≥ 0.5, as PDDL.
    pub best_domain: String,
    pub beliefs: Vec<BeliefEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Header { schema: String, version: u32, seed: u64, config: serde_json::Value },
    Goal { goal: String, exemplars: Vec<String> },
    Problem { reason: String, problem: String },
    Reset { nr: usize, observation: Observation },
    Iteration { index: usize, domain: String, problem: String },
    Plan { result: PlanResult },
    Trajectory { source: TrajectorySource, proposed: Vec<GroundAction>, actions: Vec<GroundAction> },
    ProspectionFailed,
    Step { nes: usize, index: usize, action: GroundAction, status: StepStatus, observation: Observation, goal_reached: bool },
    Rejected { action: GroundAction, reason: String },
    Mismatch { index: usize, check: StepCheck },
    Edit { edit: ProblemEdit },
    Error { error: PredictedError },
    Semantics { paths: Vec<String>, dropped: Vec<String> },
    Belief { beliefs: Vec<BeliefEntry> },
    ProposerFailure { role: Role, message: String },
    Llm { exchange: LlmExchange },
    End { report: RunReport },
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error("unsupported trace schema {schema} v{version}")]
    Schema { schema: String, version: u32 },
    #[error("trace has no header")]
    MissingHeader,
    #[error("trace ends without a run report")]
    Truncated,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub events: Vec<TraceEvent>,
}

impl RunTrace {
    pub fn push(&mut self, e: TraceEvent) {
        self.events.push(e);
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            s.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            s.push('\n');
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<RunTrace, TraceError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(line).map_err(|source| TraceError::Parse { line: i + 1, source })?);
        }
        let t = RunTrace { events };
        if let Some(TraceEvent::Header { schema, version, .. }) = t.events.first() {
            if schema != TRACE_SCHEMA || *version != TRACE_VERSION {
                return Err(TraceError::Schema { schema: schema.clone(), version: *version });
            }
        } else if !t.events.is_empty() {
            return Err(TraceError::MissingHeader);
        }
        Ok(t)
    }

    pub fn header(&self) -> Option<(u64, &serde_json::Value)> {
        match self.events.first() {
            Some(TraceEvent::Header { seed, config, .. }) => Some((*seed, config)),
            _ => None,
        }
    }

    pub fn report(&self) -> Option<&RunReport> {
        self.events.iter().rev().find_map(|e| match e {
            TraceEvent::End { report } => Some(report),
            _ => None,
        })
    }

    pub fn step_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, TraceEvent::Step { .. })).count()
    }

    /// Explicit resets plus fatal steps that sent the episode back to its start.
    pub fn reset_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| {
                matches!(e, TraceEvent::Reset { .. })
                    || matches!(e, TraceEvent::Step { status: StepStatus::EpisodeReset, .. })
            })
            .count()
    }

    /// Model exchanges in the order they were made.
    pub fn llm_exchanges(&self) -> Vec<LlmExchange> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Llm { exchange } => Some(exchange.clone()),
                _ => None,
            })
            .collect()
    }
}
