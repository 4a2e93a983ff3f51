//! Roles answered from the hidden domain, with optional seeded corruption.

use induct_pddl::semantics::{all_ground_actions, ground};
use induct_pddl::{holds, plan, Condition, Domain, GroundAction, PlanResult, PlannerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::heuristic::HeuristicSampler;
use super::{
    unmet_conjuncts, ErrorPredictor, PredictedError, ProposerContext, ProposerError, SemanticsGenerator,
    TrajectorySampler,
};
use crate::belief::{assemble, ProposedSemantics, TreeKind};
use crate::envs::StepStatus;

/// Plans under the true domain; falls back to a walk when that fails
/// (e.g. the agent's problem is still missing unexplored objects).
#[derive(Debug)]
pub struct OracleSampler {
    truth: Domain,
    planner: PlannerConfig,
    corruption: f64,
    rng: ChaCha8Rng,
    fallback: HeuristicSampler,
}

impl OracleSampler {
    pub fn new(truth: Domain, planner: PlannerConfig, corruption: f64, seed: u64) -> Self {
        OracleSampler {
            truth,
            planner,
            corruption,
            rng: ChaCha8Rng::seed_from_u64(seed),
            fallback: HeuristicSampler::new(seed ^ 0x5eed).with_explore(0.0),
        }
    }
}

impl TrajectorySampler for OracleSampler {
    fn sample_trajectory(&mut self, ctx: &ProposerContext) -> Result<Vec<GroundAction>, ProposerError> {
        let mut traj = match plan(&self.truth, &ctx.problem, &self.planner) {
            Ok(PlanResult::Complete { plan }) if !plan.is_empty() => plan,
            _ => {
                let mut c = ctx.clone();
                c.domain = self.truth.clone();
                self.fallback.walk(&c, ctx.problem.initial_state(), Vec::new())?
            }
        };
        if self.corruption > 0.0 {
            let mut pool = all_ground_actions(&ctx.skeleton, &ctx.problem);
            pool.sort();
            for a in traj.iter_mut() {
                if !pool.is_empty() && self.rng.random_bool(self.corruption) {
                    *a = pool[self.rng.random_range(0..pool.len())].clone();
                }
            }
        }
        Ok(traj)
    }
}

/// The true semantics, each leaf dropped independently with probability `noise`.
#[derive(Debug)]
pub struct OracleSemantics {
    truth: Domain,
    noise: f64,
    rng: ChaCha8Rng,
}

impl OracleSemantics {
    pub fn new(truth: Domain, noise: f64, seed: u64) -> Self {
        OracleSemantics { truth, noise, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl SemanticsGenerator for OracleSemantics {
    fn generate_semantics(
        &mut self,
        _ctx: &ProposerContext,
        _error: Option<&PredictedError>,
    ) -> Result<ProposedSemantics, ProposerError> {
        let mut out = ProposedSemantics::from_domain(&self.truth);
        if self.noise <= 0.0 {
            return Ok(out);
        }
        for (name, sem) in out.actions.iter_mut() {
            for (kind, tree) in [(TreeKind::Pre, &mut sem.pre), (TreeKind::Post, &mut sem.post)] {
                let all = crate::belief::leaves(name, kind, tree);
                let mut kept = Vec::new();
                for l in all {
                    if self.rng.random_bool(self.noise) {
                        out.dropped.push(l.key());
                    } else {
                        kept.push(l);
                    }
                }
                *tree = assemble(&kept);
            }
        }
        Ok(out)
    }
}

/// Violated true preconditions of the failing step, or unmet goal conjuncts.
#[derive(Debug)]
pub struct OracleErrorPredictor {
    truth: Domain,
}

impl OracleErrorPredictor {
    pub fn new(truth: Domain) -> Self {
        OracleErrorPredictor { truth }
    }
}

impl ErrorPredictor for OracleErrorPredictor {
    fn predict_error(&mut self, ctx: &ProposerContext) -> Result<PredictedError, ProposerError> {
        if let Some(i) = ctx.failing_step() {
            let action = &ctx.actions[i];
            let obs = &ctx.observations[i];
            let problem = obs.to_problem("explain", &self.truth, Condition::empty());
            let mut violated = Vec::new();
            if let Some(schema) = self.truth.action(action.name.as_str()) {
                let (pre, _) = ground(&self.truth, schema, &action.args, &problem)?;
                let state = obs.state();
                for c in pre.conjuncts() {
                    if !holds(&state, c)? {
                        violated.push(c.to_string());
                    }
                }
            }
            let explanation = match ctx.statuses.get(i) {
                Some(StepStatus::EpisodeReset) => format!("{action} was fatal and the episode restarted"),
                Some(StepStatus::NoChange) => format!("{action} had no effect"),
                _ => format!("{action} produced a different outcome than the believed effect"),
            };
            return Ok(PredictedError::precondition(i, violated, &explanation));
        }
        let unmet = unmet_conjuncts(&ctx.problem.goal, ctx.current(), &self.truth, &ctx.problem)?;
        if unmet.is_empty() {
            return Err(ProposerError::NoFailure);
        }
        Ok(PredictedError::goal(unmet, "every step applied but the goal does not hold"))
    }
}
