//! Building a role set from a per-role selection.

use induct_pddl::PlannerConfig;
use serde::{Deserialize, Serialize};

use super::llm::{ChatTransport, HttpTransport, LlmClient, LlmEndpointConfig, LlmProposer, PromptSet};
use super::{
    HeuristicErrorPredictor, HeuristicGoal, HeuristicLearner, HeuristicSampler, OracleErrorPredictor, OracleGoal,
    OracleSampler, OracleSemantics, ProposerError, ProposerKind, Proposers, SetDifferenceChecker,
};
use crate::envs::Task;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposerSelection {
    pub trajectory: ProposerKind,
    pub semantics: ProposerKind,
    pub error: ProposerKind,
    pub checker: ProposerKind,
    pub goal: ProposerKind,
    /// Oracle semantics: probability of dropping each true leaf.
    pub oracle_semantics_noise: f64,
    /// Oracle sampler: probability of replacing each planned action.
    pub oracle_trajectory_noise: f64,
    pub llm: Option<LlmEndpointConfig>,
}

impl Default for ProposerSelection {
    fn default() -> Self {
        ProposerSelection::uniform(ProposerKind::Heuristic)
    }
}

impl ProposerSelection {
    pub fn uniform(kind: ProposerKind) -> Self {
        ProposerSelection {
            trajectory: kind,
            semantics: kind,
            error: kind,
            checker: kind,
            goal: kind,
            oracle_semantics_noise: 0.0,
            oracle_trajectory_noise: 0.0,
            llm: None,
        }
    }

    fn kinds(&self) -> [ProposerKind; 5] {
        [self.trajectory, self.semantics, self.error, self.checker, self.goal]
    }

    pub fn uses_llm(&self) -> bool {
        self.kinds().contains(&ProposerKind::Llm)
    }

    pub fn validate(&self) -> Result<(), ProposerError> {
        for (name, p) in [("oracle_semantics_noise", self.oracle_semantics_noise), ("oracle_trajectory_noise", self.oracle_trajectory_noise)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ProposerError::Config(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if self.uses_llm() {
            self.llm.clone().unwrap_or_default().validate()?;
        }
        Ok(())
    }

    /// Instantiate every role. `transport` replaces the HTTP client when given.
    pub fn build(
        &self,
        task: &Task,
        planner: &PlannerConfig,
        seed: u64,
        transport: Option<Box<dyn ChatTransport>>,
    ) -> Result<Proposers, ProposerError> {
        self.validate()?;
        let llm = if self.uses_llm() {
            let cfg = self.llm.clone().unwrap_or_default();
            let transport = match transport {
                Some(t) => t,
                None => Box::new(HttpTransport::new(&cfg)?),
            };
            let prompts = PromptSet::load(&cfg)?;
            Some((LlmClient::new(transport, cfg), prompts))
        } else {
            None
        };
        let model = || {
            let (client, prompts) = llm.clone().expect("llm configured when selected");
            LlmProposer::new(client, prompts)
        };
        let truth = &task.domain;
        let sub = |k: u64| crate::derive_seed(seed, k);
        Ok(Proposers {
            sampler: match self.trajectory {
                ProposerKind::Oracle => {
                    Box::new(OracleSampler::new(truth.clone(), planner.clone(), self.oracle_trajectory_noise, sub(11)))
                }
                ProposerKind::Heuristic => Box::new(HeuristicSampler::new(sub(12))),
                ProposerKind::Llm => Box::new(model()),
            },
            semantics: match self.semantics {
                ProposerKind::Oracle => Box::new(OracleSemantics::new(truth.clone(), self.oracle_semantics_noise, sub(13))),
                ProposerKind::Heuristic => Box::new(HeuristicLearner),
                ProposerKind::Llm => Box::new(model()),
            },
            error: match self.error {
                ProposerKind::Oracle => Box::new(OracleErrorPredictor::new(truth.clone())),
                ProposerKind::Heuristic => Box::new(HeuristicErrorPredictor),
                ProposerKind::Llm => Box::new(model()),
            },
            checker: match self.checker {
                ProposerKind::Oracle | ProposerKind::Heuristic => Box::new(SetDifferenceChecker),
                ProposerKind::Llm => Box::new(model()),
            },
            goal: match self.goal {
                ProposerKind::Oracle => Box::new(OracleGoal::new(task.problem.goal.clone())),
                ProposerKind::Heuristic => Box::new(HeuristicGoal),
                ProposerKind::Llm => Box::new(model()),
            },
            llm: llm.map(|(c, _)| c),
        })
    }
}
