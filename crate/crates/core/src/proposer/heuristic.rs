//! Offline roles that learn from experience alone.

use std::collections::{BTreeMap, BTreeSet};

use induct_pddl::semantics::{all_ground_actions, ground, satisfied_conjuncts};
use induct_pddl::{
    apply, holds, successor, validate_plan, Condition, GroundAction, Literal, Name, PlanValidation, State,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lift::{has_duplicate_args, lifted_delta, lifted_state};
use super::{
    unmet_conjuncts, ErrorPredictor, PredictedError, ProposerContext, ProposerError, SemanticsGenerator,
    TrajectorySampler,
};
use crate::belief::{ActionSemantics, ProposedSemantics};
use crate::envs::StepStatus;

fn and_of(lits: BTreeSet<Literal>) -> Condition {
    Condition::And(lits.into_iter().map(Condition::Literal).collect())
}

/// Version-space learner: preconditions are the positive lifted atoms common
/// to every successful pre-state; effects are the lifted deltas common to
/// every success. Actions never seen succeeding get empty trees.
#[derive(Debug, Default)]
pub struct HeuristicLearner;

impl SemanticsGenerator for HeuristicLearner {
    fn generate_semantics(
        &mut self,
        ctx: &ProposerContext,
        _error: Option<&PredictedError>,
    ) -> Result<ProposedSemantics, ProposerError> {
        let mut out = ProposedSemantics::default();
        for schema in &ctx.skeleton.actions {
            let mut pre: Option<BTreeSet<Literal>> = None;
            let mut post: Option<BTreeSet<Literal>> = None;
            for t in &ctx.history {
                if t.action.name != schema.name || t.status != StepStatus::Applied || has_duplicate_args(&t.action) {
                    continue;
                }
                let p = lifted_state(&t.pre, &t.action, schema, &ctx.skeleton);
                let e = lifted_delta(&t.pre, &t.post, &t.action, schema, &ctx.skeleton);
                pre = Some(match pre {
                    None => p,
                    Some(acc) => acc.intersection(&p).cloned().collect(),
                });
                post = Some(match post {
                    None => e,
                    Some(acc) => acc.intersection(&e).cloned().collect(),
                });
            }
            out.actions.insert(
                schema.name.clone(),
                ActionSemantics {
                    pre: and_of(pre.unwrap_or_default()),
                    post: and_of(post.unwrap_or_default()),
                },
            );
        }
        Ok(out)
    }
}

/// Seeded random walk under the sampled domain, steered toward the goal and
/// away from failure contexts already observed for untested actions.
#[derive(Debug)]
pub struct HeuristicSampler {
    rng: ChaCha8Rng,
    pub max_len: usize,
    pub goal_bias: f64,
    /// Per-step probability of trying actions the beliefs deem inapplicable.
    pub explore: f64,
}

impl HeuristicSampler {
    pub fn new(seed: u64) -> Self {
        HeuristicSampler { rng: ChaCha8Rng::seed_from_u64(seed), max_len: 12, goal_bias: 0.5, explore: 0.1 }
    }

    pub fn with_explore(mut self, explore: f64) -> Self {
        self.explore = explore;
        self
    }

    pub(crate) fn walk(
        &mut self,
        ctx: &ProposerContext,
        mut state: State,
        mut traj: Vec<GroundAction>,
    ) -> Result<Vec<GroundAction>, ProposerError> {
        let domain = &ctx.domain;
        let problem = &ctx.problem;
        let mut candidates = all_ground_actions(domain, problem);
        candidates.sort();
        let succeeded: BTreeSet<&Name> =
            ctx.history.iter().filter(|t| t.status == StepStatus::Applied).map(|t| &t.action.name).collect();
        let mut failed_contexts: BTreeMap<&Name, Vec<BTreeSet<Literal>>> = BTreeMap::new();
        for t in ctx.history.iter().filter(|t| t.status != StepStatus::Applied) {
            if let Some(schema) = ctx.skeleton.action(t.action.name.as_str()) {
                failed_contexts
                    .entry(&t.action.name)
                    .or_default()
                    .push(lifted_state(&t.pre, &t.action, schema, &ctx.skeleton));
            }
        }
        let pre_obs_of = |s: &State| crate::envs::Observation { atoms: s.0.clone(), objects: problem.objects.clone() };

        while traj.len() < self.max_len {
            let obs = pre_obs_of(&state);
            // Occasionally step outside the believed preconditions, which may
            // be over-specific, and predict only the believed effect.
            let explore = self.rng.random_bool(self.explore);
            let mut options: Vec<(GroundAction, State)> = Vec::new();
            for a in &candidates {
                let next = match successor(&state, a, domain, problem)? {
                    Some(next) if !explore => next,
                    None if explore => {
                        let schema = domain.action(a.name.as_str()).expect("grounded from the domain");
                        let (_, eff) = ground(domain, schema, &a.args, problem)?;
                        apply(&state, &eff)?
                    }
                    _ => continue,
                };
                if !succeeded.contains(&a.name) {
                    if let (Some(ctxs), Some(schema)) = (failed_contexts.get(&a.name), ctx.skeleton.action(a.name.as_str())) {
                        let here = lifted_state(&obs, a, schema, &ctx.skeleton);
                        if ctxs.contains(&here) {
                            continue;
                        }
                    }
                }
                options.push((a.clone(), next));
            }
            if options.is_empty() {
                if explore {
                    continue;
                }
                break;
            }
            // Explore where the state says the most about the arguments: per
            // schema, keep the candidates with the largest liftable context.
            let context: Vec<usize> = options
                .iter()
                .map(|(a, _)| {
                    ctx.skeleton.action(a.name.as_str()).map_or(0, |s| lifted_state(&obs, a, s, &ctx.skeleton).len())
                })
                .collect();
            let mut richest: BTreeMap<&Name, usize> = BTreeMap::new();
            for ((a, _), &n) in options.iter().zip(&context) {
                let e = richest.entry(&a.name).or_default();
                *e = (*e).max(n);
            }
            let keep: Vec<bool> = options.iter().zip(&context).map(|((a, _), n)| *n == richest[&a.name]).collect();
            let mut options: Vec<(GroundAction, State)> =
                options.iter().zip(keep).filter(|(_, k)| *k).map(|(o, _)| o.clone()).collect();
            let pick = if self.rng.random_bool(self.goal_bias) {
                let mut best = Vec::new();
                let mut best_score = 0usize;
                for (i, (_, next)) in options.iter().enumerate() {
                    let score = satisfied_conjuncts(next, &problem.goal, domain, problem)?;
                    if best.is_empty() || score > best_score {
                        best = vec![i];
                        best_score = score;
                    } else if score == best_score {
                        best.push(i);
                    }
                }
                best[self.rng.random_range(0..best.len())]
            } else {
                // Uniform over schemas first, so schemas with many groundings do not dominate.
                let names: BTreeSet<&Name> = options.iter().map(|(a, _)| &a.name).collect();
                let name = *names.iter().nth(self.rng.random_range(0..names.len())).unwrap();
                let within: Vec<usize> = (0..options.len()).filter(|&i| &options[i].0.name == name).collect();
                within[self.rng.random_range(0..within.len())]
            };
            let (a, next) = options.swap_remove(pick);
            traj.push(a);
            state = next;
        }
        if traj.is_empty() {
            // Nothing looks applicable under the beliefs; try something anyway.
            if candidates.is_empty() {
                return Err(ProposerError::Unparseable { role: super::Role::Trajectory });
            }
            traj.push(candidates[self.rng.random_range(0..candidates.len())].clone());
        }
        Ok(traj)
    }
}

impl TrajectorySampler for HeuristicSampler {
    fn sample_trajectory(&mut self, ctx: &ProposerContext) -> Result<Vec<GroundAction>, ProposerError> {
        let mut state = ctx.problem.initial_state();
        let mut prefix = Vec::new();
        if let Some(pp) = &ctx.partial_plan {
            if !pp.is_empty() && validate_plan(&ctx.domain, &ctx.problem, pp)? == PlanValidation::Valid {
                return Ok(pp.clone());
            }
            for a in pp {
                match successor(&state, a, &ctx.domain, &ctx.problem)? {
                    Some(next) => {
                        state = next;
                        prefix.push(a.clone());
                    }
                    None => break,
                }
            }
        }
        self.walk(ctx, state, prefix)
    }
}

/// Explains a failure from the believed model: believed preconditions that
/// did not hold come first, then those that held (and so cannot be the whole
/// story). A run without failure explains unmet goal conjuncts.
#[derive(Debug, Default)]
pub struct HeuristicErrorPredictor;

impl ErrorPredictor for HeuristicErrorPredictor {
    fn predict_error(&mut self, ctx: &ProposerContext) -> Result<PredictedError, ProposerError> {
        if let Some(i) = ctx.failing_step() {
            let action = &ctx.actions[i];
            let obs = &ctx.observations[i];
            let problem = obs.to_problem("explain", &ctx.domain, Condition::empty());
            let mut violated = Vec::new();
            let mut held = Vec::new();
            if let Some(schema) = ctx.domain.action(action.name.as_str()) {
                if let Ok((pre, _)) = ground(&ctx.domain, schema, &action.args, &problem) {
                    let state = obs.state();
                    for c in pre.conjuncts() {
                        if holds(&state, c)? {
                            held.push(c.to_string());
                        } else {
                            violated.push(c.to_string());
                        }
                    }
                }
            }
            let explanation = if violated.is_empty() {
                format!("{action} failed although its believed preconditions held; a precondition is missing")
            } else {
                format!("{action} failed; believed preconditions did not hold")
            };
            violated.extend(held);
            return Ok(PredictedError::precondition(i, violated, &explanation));
        }
        let unmet = unmet_conjuncts(&ctx.problem.goal, ctx.current(), &ctx.domain, &ctx.problem)?;
        if unmet.is_empty() {
            return Err(ProposerError::NoFailure);
        }
        Ok(PredictedError::goal(unmet, "every step applied but the goal does not hold"))
    }
}
