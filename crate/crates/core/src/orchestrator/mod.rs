//! The induction loop: sample a domain from beliefs, verify with the planner,
//! execute, explain failures and update beliefs until a validated plan works.

mod prospect;
mod replay;
mod trace;

use std::path::PathBuf;

use induct_pddl::semantics::satisfied_conjuncts;
use induct_pddl::{plan, print_domain, print_problem, Domain, PlanResult, PlannerConfig, PlannerError, Problem, PddlError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::belief::{BeliefConfig, BeliefError, BeliefMemory, ProposedSemantics};
use crate::derive_seed;
use crate::envs::{stepwise_check, Env, EnvConfig, EnvError, Observation, StepStatus};
use crate::proposer::llm::ChatTransport;
use crate::proposer::{
    builtin_corpus, load_corpus, retrieve, ProposerContext, ProposerError, ProposerSelection, Proposers, Role,
    Transition,
};

pub use prospect::{prospect, ProspectionFailed};
pub use replay::{replay, ReplayError};
pub use trace::{
    BeliefEntry, RunReport, RunTrace, Termination, TraceError, TraceEvent, TrajectorySource, TRACE_SCHEMA,
    TRACE_VERSION,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopMode {
    /// Return the environment to its initial state before each new attempt.
    #[default]
    Reset,
    /// Never reset; re-derive the problem from the current observation instead.
    ResetFree,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    pub prospection_k: usize,
    /// Random redraws per invalid position during prospection.
    pub prospection_attempts: usize,
    pub planner: PlannerConfig,
    pub belief: BeliefConfig,
    pub max_resets: usize,
    pub max_executed_steps: usize,
    pub max_iterations: usize,
    pub mode: LoopMode,
    pub stepwise_detector: bool,
    pub retrieval_corpus: Option<PathBuf>,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            prospection_k: 5,
            prospection_attempts: 10,
            planner: PlannerConfig::default(),
            belief: BeliefConfig::default(),
            max_resets: 50,
            max_executed_steps: 1000,
            max_iterations: 200,
            mode: LoopMode::Reset,
            stepwise_detector: false,
            retrieval_corpus: None,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        if self.max_resets == 0 || self.max_executed_steps == 0 || self.max_iterations == 0 {
            return Err(RunError::Config("budgets must be > 0".into()));
        }
        self.planner.validate()?;
        self.belief.validate()?;
        if let Some(p) = &self.retrieval_corpus {
            if !p.exists() {
                return Err(RunError::Config(format!("retrieval corpus {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub env: EnvConfig,
    #[serde(default)]
    pub loop_cfg: LoopConfig,
    #[serde(default)]
    pub proposers: ProposerSelection,
    #[serde(default)]
    pub seed: u64,
}

impl RunSpec {
    pub fn new(env: EnvConfig, proposers: ProposerSelection, seed: u64) -> Self {
        RunSpec { env, loop_cfg: LoopConfig::default(), proposers, seed }
    }

    /// The environment configuration with its seed derived from the run seed.
    pub fn resolved_env(&self) -> EnvConfig {
        EnvConfig { seed: derive_seed(self.seed, 1), ..self.env.clone() }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.env.validate()?;
        self.loop_cfg.validate()?;
        self.proposers.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Proposer(#[from] ProposerError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

/// Objects and init transcribed from the observation, goal from the goal proposer.
pub fn init_problem(
    obs: &Observation,
    task_id: &str,
    task_text: &str,
    skeleton: &Domain,
    proposers: &mut Proposers,
    corpus_path: Option<&std::path::Path>,
    trace: &mut RunTrace,
) -> Result<Problem, RunError> {
    let corpus = match corpus_path {
        Some(p) => load_corpus(p)?,
        None => builtin_corpus(),
    };
    let exemplars = retrieve(task_text, &corpus, 2);
    let goal = proposers.goal.propose_goal(task_text, skeleton, &obs.objects, &exemplars);
    drain_llm(proposers, trace);
    let goal = goal?;
    trace.push(TraceEvent::Goal { goal: goal.to_string(), exemplars: exemplars.iter().map(|e| e.text.clone()).collect() });
    Ok(obs.to_problem(task_id, skeleton, goal))
}

fn drain_llm(proposers: &Proposers, trace: &mut RunTrace) {
    if let Some(c) = &proposers.llm {
        for exchange in c.drain() {
            trace.push(TraceEvent::Llm { exchange });
        }
    }
}

fn beliefs_of(m: &BeliefMemory) -> Vec<BeliefEntry> {
    m.leaves().into_iter().map(|l| BeliefEntry { key: l.path.key(), belief: l.belief }).collect()
}

/// Mutable state of one run; [`LoopState::run_iteration`] performs one pass.
pub struct LoopState<'a> {
    pub cfg: LoopConfig,
    pub env: &'a mut Env,
    pub proposers: &'a mut Proposers,
    pub trace: RunTrace,
    pub memory: BeliefMemory,
    pub skeleton: Domain,
    /// Problem for the task's initial state (with any checker edits).
    pub base_problem: Problem,
    /// Problem the next iteration plans from.
    pub problem: Problem,
    pub history: Vec<Transition>,
    pub nr: usize,
    pub nes: usize,
    pub iterations: usize,
    /// Steps were executed since the environment was last at its initial state.
    dirty: bool,
    rng: ChaCha8Rng,
}

impl<'a> LoopState<'a> {
    pub fn new(
        cfg: LoopConfig,
        env: &'a mut Env,
        proposers: &'a mut Proposers,
        seed: u64,
        mut trace: RunTrace,
    ) -> Result<Self, RunError> {
        cfg.validate()?;
        let skeleton = env.skeleton();
        let obs = env.observe();
        let task = env.task().clone();
        let problem =
            init_problem(&obs, &task.id, &task.text, &skeleton, proposers, cfg.retrieval_corpus.as_deref(), &mut trace)?;
        trace.push(TraceEvent::Problem { reason: "initial".into(), problem: print_problem(&problem) });
        Ok(LoopState {
            cfg,
            env,
            proposers,
            trace,
            memory: BeliefMemory::new(),
            skeleton,
            base_problem: problem.clone(),
            problem,
            history: Vec::new(),
            nr: 0,
            nes: 0,
            iterations: 0,
            dirty: false,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 2)),
        })
    }

    fn learn(&mut self, ctx: &ProposerContext, error: Option<&crate::proposer::PredictedError>) -> Result<(), RunError> {
        let sem = self.proposers.semantics.generate_semantics(ctx, error);
        drain_llm(self.proposers, &mut self.trace);
        let sem: ProposedSemantics = match sem {
            Ok(s) => s,
            Err(e @ (ProposerError::Unparseable { .. } | ProposerError::NoFailure)) => {
                self.trace.push(TraceEvent::ProposerFailure { role: Role::Semantics, message: e.to_string() });
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        self.trace.push(TraceEvent::Semantics { paths: sem.paths().into_iter().collect(), dropped: sem.dropped.clone() });
        self.memory = self.memory.update(&sem, &self.skeleton, &self.cfg.belief)?;
        self.trace.push(TraceEvent::Belief { beliefs: beliefs_of(&self.memory) });
        Ok(())
    }

    /// Whether the current best domain lets the planner solve the task.
    fn validated(&self) -> Result<bool, RunError> {
        let best = self.memory.best_domain(&self.skeleton);
        Ok(matches!(plan(&best, &self.base_problem, &self.cfg.planner)?, PlanResult::Complete { .. }))
    }

    /// One pass of sample → verify → execute → explain → learn. Returns the
    /// termination reason once the run is over.
    pub fn run_iteration(&mut self) -> Result<Option<Termination>, RunError> {
        if self.iterations >= self.cfg.max_iterations {
            return Ok(Some(Termination::IterationBudget));
        }
        if self.dirty {
            match self.cfg.mode {
                LoopMode::Reset => {
                    if self.nr >= self.cfg.max_resets {
                        return Ok(Some(Termination::ResetBudget));
                    }
                    let observation = self.env.reset();
                    self.nr += 1;
                    self.dirty = false;
                    self.trace.push(TraceEvent::Reset { nr: self.nr, observation });
                    self.problem = self.base_problem.clone();
                }
                LoopMode::ResetFree => {
                    let obs = self.env.observe();
                    self.problem = obs.to_problem(self.base_problem.name.as_str(), &self.skeleton, self.base_problem.goal.clone());
                    self.trace.push(TraceEvent::Problem { reason: "current observation".into(), problem: print_problem(&self.problem) });
                }
            }
        }
        let index = self.iterations;
        self.iterations += 1;

        let sampled = self.memory.sample_domain(&self.skeleton, &mut self.rng);
        self.trace.push(TraceEvent::Iteration {
            index,
            domain: print_domain(&sampled),
            problem: print_problem(&self.problem),
        });
        let result = plan(&sampled, &self.problem, &self.cfg.planner)?;
        self.trace.push(TraceEvent::Plan { result: result.clone() });

        let mut ctx = ProposerContext::new(
            self.skeleton.clone(),
            sampled.clone(),
            self.problem.clone(),
            &self.env.task().text,
            self.env.observe(),
        );
        ctx.partial_plan = result.partial().map(<[_]>::to_vec);
        ctx.history = std::mem::take(&mut self.history);

        let (source, proposed) = match result.complete() {
            Some(p) if !p.is_empty() => (TrajectorySource::Planner, p.to_vec()),
            Some(_) => (TrajectorySource::Planner, Vec::new()),
            None => {
                let t = self.proposers.sampler.sample_trajectory(&ctx);
                drain_llm(self.proposers, &mut self.trace);
                match t {
                    Ok(t) => (TrajectorySource::Sampler, t),
                    Err(e @ ProposerError::Unparseable { .. }) => {
                        self.trace.push(TraceEvent::ProposerFailure { role: Role::Trajectory, message: e.to_string() });
                        self.history = ctx.history;
                        return Ok(None);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        };
        let actions = if proposed.is_empty() {
            Vec::new()
        } else {
            match prospect(&proposed, &sampled, &self.problem, self.cfg.prospection_k, self.cfg.prospection_attempts, &mut self.rng) {
                Ok(a) => a,
                Err(ProspectionFailed) => {
                    self.trace.push(TraceEvent::ProspectionFailed);
                    self.history = ctx.history;
                    return Ok(None);
                }
            }
        };
        self.trace.push(TraceEvent::Trajectory { source, proposed, actions: actions.clone() });

        // Execute until something goes wrong or the goal is reached.
        let mut goal_reached = self.env.goal_reached();
        let mut step_budget_hit = false;
        for (j, a) in actions.iter().enumerate() {
            if goal_reached {
                break;
            }
            if self.nes >= self.cfg.max_executed_steps {
                step_budget_hit = true;
                break;
            }
            let pre = ctx.current().clone();
            let fb = match self.env.step(a) {
                Ok(fb) => fb,
                Err(EnvError::MalformedAction { action, source }) => {
                    self.trace.push(TraceEvent::Rejected { action: a.clone(), reason: format!("{action}: {source}") });
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            self.nes += 1;
            self.dirty = true;
            self.trace.push(TraceEvent::Step {
                nes: self.nes,
                index: j,
                action: a.clone(),
                status: fb.status,
                observation: fb.observation.clone(),
                goal_reached: fb.goal_reached,
            });
            ctx.actions.push(a.clone());
            ctx.statuses.push(fb.status);
            ctx.observations.push(fb.observation.clone());
            ctx.history.push(Transition { pre: pre.clone(), action: a.clone(), status: fb.status, post: fb.observation.clone() });
            goal_reached = fb.goal_reached;
            match fb.status {
                StepStatus::EpisodeReset => {
                    self.nr += 1;
                    self.dirty = false;
                    self.problem = self.base_problem.clone();
                    break;
                }
                StepStatus::NoChange => break,
                StepStatus::Applied => {}
            }
            if self.cfg.stepwise_detector {
                let check = stepwise_check(&pre, a, &fb.observation, &sampled)?;
                if !check.is_consistent() {
                    self.trace.push(TraceEvent::Mismatch { index: j, check });
                    ctx.mismatch_at = Some(j);
                    break;
                }
            }
        }

        if goal_reached && ctx.failing_step().is_none() {
            self.learn(&ctx, None)?;
            self.history = ctx.history;
            if self.validated()? {
                return Ok(Some(Termination::Success));
            }
        } else if !ctx.actions.is_empty() {
            self.explain_and_learn(&ctx)?;
            self.history = ctx.history;
        } else {
            self.history = ctx.history;
        }
        if step_budget_hit || self.nes >= self.cfg.max_executed_steps {
            return Ok(Some(Termination::StepBudget));
        }
        Ok(None)
    }

    fn explain_and_learn(&mut self, ctx: &ProposerContext) -> Result<(), RunError> {
        let edit = self.proposers.checker.check_problem(ctx);
        drain_llm(self.proposers, &mut self.trace);
        match edit {
            Ok(Some(edit)) => match edit.apply(&self.base_problem, &self.skeleton) {
                Ok(p) => {
                    // Restart from sampling without touching beliefs.
                    if let Ok(cur) = edit.apply(&self.problem, &self.skeleton) {
                        self.problem = cur;
                    }
                    self.base_problem = p;
                    self.trace.push(TraceEvent::Edit { edit });
                    self.trace.push(TraceEvent::Problem { reason: "checker edit".into(), problem: print_problem(&self.base_problem) });
                    return Ok(());
                }
                Err(e) => {
                    self.trace.push(TraceEvent::ProposerFailure { role: Role::Checker, message: format!("rejected edit: {e}") });
                }
            },
            Ok(None) => {}
            Err(e @ (ProposerError::Unparseable { .. } | ProposerError::NoFailure)) => {
                self.trace.push(TraceEvent::ProposerFailure { role: Role::Checker, message: e.to_string() });
            }
            Err(e) => return Err(e.into()),
        }
        let error = self.proposers.error.predict_error(ctx);
        drain_llm(self.proposers, &mut self.trace);
        let error = match error {
            Ok(e) => {
                self.trace.push(TraceEvent::Error { error: e.clone() });
                Some(e)
            }
            Err(e @ (ProposerError::Unparseable { .. } | ProposerError::NoFailure)) => {
                self.trace.push(TraceEvent::ProposerFailure { role: Role::Error, message: e.to_string() });
                None
            }
            Err(e) => return Err(e.into()),
        };
        self.learn(ctx, error.as_ref())
    }

    pub fn report(&self, termination: Termination) -> Result<RunReport, RunError> {
        let task = self.env.task();
        let goal = &self.base_problem.goal;
        let total = goal.conjuncts().len();
        let sat = satisfied_conjuncts(self.env.true_state(), goal, &task.domain, &task.problem)?;
        Ok(RunReport {
            success: termination == Termination::Success,
            termination,
            nr: self.nr,
            nes: self.nes,
            iterations: self.iterations,
            gc_fraction: if total == 0 { 1.0 } else { sat as f64 / total as f64 },
            best_domain: print_domain(&self.memory.best_domain(&self.skeleton)),
            beliefs: beliefs_of(&self.memory),
        })
    }
}

/// Output of a complete run.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub trace: RunTrace,
    pub memory: BeliefMemory,
    pub truth: Domain,
}

/// Run the loop for one spec. `transport` stands in for the HTTP endpoint when given.
pub fn run(spec: &RunSpec, transport: Option<Box<dyn ChatTransport>>) -> Result<RunOutcome, RunError> {
    spec.validate()?;
    let env_cfg = spec.resolved_env();
    let mut env = Env::new(env_cfg.clone())?;
    let mut proposers = spec.proposers.build(env.task(), &spec.loop_cfg.planner, derive_seed(spec.seed, 3), transport)?;
    let resolved = RunSpec { env: env_cfg, ..spec.clone() };
    let mut trace = RunTrace::default();
    trace.push(TraceEvent::Header {
        schema: TRACE_SCHEMA.into(),
        version: TRACE_VERSION,
        seed: spec.seed,
        config: serde_json::to_value(&resolved).expect("config serializes"),
    });
    let truth = env.hidden_domain().clone();
    let mut state = LoopState::new(spec.loop_cfg.clone(), &mut env, &mut proposers, spec.seed, trace)?;
    let termination = loop {
        if let Some(t) = state.run_iteration()? {
            break t;
        }
    };
    let report = state.report(termination)?;
    state.trace.push(TraceEvent::End { report: report.clone() });
    Ok(RunOutcome { report, trace: std::mem::take(&mut state.trace), memory: state.memory.clone(), truth })
}
