//! Simulated environments backed by a hidden PDDL domain.
//!
//! The agent only ever sees [`Observation`]s; the true state, the hidden
//! domain and the noise stream stay inside [`Env`].

mod stepwise;
mod task;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use induct_pddl::{
    goal_holds, successor, GroundAction, GroundAtom, Name, PddlError, Problem, State, Domain, Condition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use stepwise::{stepwise_check, StepCheck};
pub use task::{GridLayout, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvId {
    Blocksworld,
    Gridquest,
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvId::Blocksworld => "blocksworld",
            EnvId::Gridquest => "gridquest",
        })
    }
}

impl FromStr for EnvId {
    type Err = EnvError;
    fn from_str(s: &str) -> Result<Self, EnvError> {
        match s.to_ascii_lowercase().as_str() {
            "blocksworld" => Ok(EnvId::Blocksworld),
            "gridquest" => Ok(EnvId::Gridquest),
            _ => Err(EnvError::Config(format!("unknown environment `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observability {
    #[default]
    Full,
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub env: EnvId,
    pub task: String,
    #[serde(default)]
    pub observability: Observability,
    /// Probability that an applicable `stack`/`putdown` lands on a different target.
    #[serde(default)]
    pub noise_probability: f64,
    #[serde(default)]
    pub seed: u64,
}

impl EnvConfig {
    pub fn new(env: EnvId, task: &str) -> Self {
        EnvConfig { env, task: task.to_string(), observability: Observability::Full, noise_probability: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(0.0..=1.0).contains(&self.noise_probability) {
            return Err(EnvError::Config(format!("noise probability must be in [0, 1], got {}", self.noise_probability)));
        }
        if self.noise_probability > 0.0 && self.env != EnvId::Blocksworld {
            return Err(EnvError::Config("action noise is only defined for blocksworld".into()));
        }
        if self.observability == Observability::Partial && self.env != EnvId::Gridquest {
            return Err(EnvError::Config("partial observability is only defined for gridquest".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment configuration: {0}")]
    Config(String),
    #[error("unknown {env} task `{task}`")]
    UnknownTask { env: EnvId, task: String },
    #[error("task definition: {0}")]
    Task(String),
    #[error("malformed action {action}: {source}")]
    MalformedAction { action: String, source: PddlError },
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

/// What the agent perceives: visible atoms and the typed objects it knows about.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub atoms: BTreeSet<GroundAtom>,
    pub objects: Vec<(Name, Name)>,
}

impl Observation {
    pub fn state(&self) -> State {
        State(self.atoms.clone())
    }

    pub fn knows(&self, obj: &Name) -> bool {
        self.objects.iter().any(|(o, _)| o == obj)
    }

    /// A problem whose init is this observation, for grounding and planning.
    pub fn to_problem(&self, name: &str, domain: &Domain, goal: Condition) -> Problem {
        Problem {
            name: Name::new(name),
            domain_name: domain.name.clone(),
            objects: self.objects.clone(),
            init: self.atoms.clone(),
            goal,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::from("objects:");
        for (o, t) in &self.objects {
            s.push_str(&format!(" {o} - {t}"));
        }
        s.push_str("\natoms:");
        for a in &self.atoms {
            s.push_str(&format!("\n  {a}"));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    /// Preconditions held and the state changed (possibly by a noisy outcome).
    Applied,
    /// The action was well formed but inapplicable; nothing happened.
    NoChange,
    /// A fatal move; the environment has returned to its initial state.
    EpisodeReset,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionFeedback {
    pub step_index: usize,
    pub status: StepStatus,
    pub observation: Observation,
    pub goal_reached: bool,
}

#[derive(Debug)]
pub struct Env {
    cfg: EnvConfig,
    task: Task,
    state: State,
    rng: ChaCha8Rng,
    step_index: usize,
    visited: BTreeSet<Name>,
    visible: BTreeSet<Name>,
    noise_eligible: usize,
    noise_applied: usize,
}

impl Env {
    pub fn new(cfg: EnvConfig) -> Result<Env, EnvError> {
        cfg.validate()?;
        let task = Task::builtin(cfg.env, &cfg.task)?;
        Env::with_task(cfg, task)
    }

    pub fn with_task(cfg: EnvConfig, task: Task) -> Result<Env, EnvError> {
        cfg.validate()?;
        if task.env != cfg.env {
            return Err(EnvError::Config(format!("task `{}` belongs to {}, not {}", task.id, task.env, cfg.env)));
        }
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let state = task.problem.initial_state();
        let mut env = Env {
            cfg,
            task,
            state,
            rng,
            step_index: 0,
            visited: BTreeSet::new(),
            visible: BTreeSet::new(),
            noise_eligible: 0,
            noise_applied: 0,
        };
        env.note_position();
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn task(&self) -> &Task {
        &self.task
    }

    /// The domain with every action's semantics removed; all the agent may see.
    pub fn skeleton(&self) -> Domain {
        self.task.domain.skeleton()
    }

    pub fn hidden_domain(&self) -> &Domain {
        &self.task.domain
    }

    pub fn true_state(&self) -> &State {
        &self.state
    }

    pub fn steps_in_episode(&self) -> usize {
        self.step_index
    }

    /// `(eligible, corrupted)` counts of noisy placement draws so far.
    pub fn noise_counts(&self) -> (usize, usize) {
        (self.noise_eligible, self.noise_applied)
    }

    /// Return to the initial state; the explored region starts over.
    pub fn reset(&mut self) -> Observation {
        self.restart();
        self.note_position();
        self.observe()
    }

    pub fn goal_reached(&self) -> bool {
        goal_holds(&self.state, &self.task.problem, &self.task.domain).unwrap_or(false)
    }

    pub fn observe(&self) -> Observation {
        match self.cfg.observability {
            Observability::Full => Observation { atoms: self.state.0.clone(), objects: self.task.problem.objects.clone() },
            Observability::Partial => {
                let grid = self.task.grid.as_ref().expect("validated: partial implies grid");
                let visible = |o: &Name| !grid.cells.contains_key(o) || self.visible.contains(o);
                Observation {
                    atoms: self.state.atoms().filter(|a| a.args.iter().all(visible)).cloned().collect(),
                    objects: self.task.problem.objects.iter().filter(|(o, _)| visible(o)).cloned().collect(),
                }
            }
        }
    }

    /// Execute one ground action. Malformed actions (unknown name, wrong arity
    /// or argument types, unknown objects) are rejected without consuming a step.
    pub fn step(&mut self, action: &GroundAction) -> Result<ExecutionFeedback, EnvError> {
        let domain = &self.task.domain;
        let problem = &self.task.problem;
        let malformed = |source| EnvError::MalformedAction { action: action.to_string(), source };
        let schema = domain.action(action.name.as_str()).ok_or_else(|| malformed(PddlError::UnknownAction(action.name.clone())))?;
        induct_pddl::semantics::check_args(domain, schema, &action.args, problem).map_err(malformed)?;

        let index = self.step_index;
        self.step_index += 1;
        let status = if self.is_fatal(action) {
            self.restart();
            StepStatus::EpisodeReset
        } else {
            match successor(&self.state, action, domain, problem)? {
                None => StepStatus::NoChange,
                Some(next) => {
                    let next = match self.noisy_outcome(action)? {
                        Some(alt) => alt,
                        None => next,
                    };
                    self.state = next;
                    StepStatus::Applied
                }
            }
        };
        self.note_position();
        Ok(ExecutionFeedback {
            step_index: index,
            status,
            observation: self.observe(),
            goal_reached: self.goal_reached(),
        })
    }

    fn restart(&mut self) {
        self.state = self.task.problem.initial_state();
        self.step_index = 0;
        self.visited.clear();
        self.visible.clear();
    }

    fn note_position(&mut self) {
        let Some(grid) = &self.task.grid else { return };
        for a in self.state.atoms().filter(|a| a.predicate == "at" && a.args.len() == 1) {
            self.visited.insert(a.args[0].clone());
            self.visible.extend(grid.neighborhood(&a.args[0], 1));
        }
    }

    /// Entering a guarded cell without winning the fight ends the episode.
    fn is_fatal(&self, action: &GroundAction) -> bool {
        if self.task.env != EnvId::Gridquest {
            return false;
        }
        let has = |p: &str, args: &[&Name]| {
            self.state.contains(&GroundAtom { predicate: Name::new(p), args: args.iter().map(|n| (*n).clone()).collect() })
        };
        match (action.name.as_str(), action.args.as_slice()) {
            ("move", [from, to]) => has("at", &[from]) && has("adj", &[from, to]) && has("guarded", &[to]),
            ("attack", [item, monster, from, to]) => {
                has("at", &[from])
                    && has("adj", &[from, to])
                    && has("monster-at", &[monster, to])
                    && !(has("holding", &[item]) && has("beats", &[item, monster]))
            }
            _ => false,
        }
    }

    /// For an applicable placement, maybe redirect it to another clear target.
    fn noisy_outcome(&mut self, action: &GroundAction) -> Result<Option<State>, EnvError> {
        if self.cfg.noise_probability <= 0.0 {
            return Ok(None);
        }
        let (held, target) = match (action.name.as_str(), action.args.as_slice()) {
            ("stack", [x, y]) => (x.clone(), Some(y.clone())),
            ("putdown", [x]) => (x.clone(), None),
            _ => return Ok(None),
        };
        let mut alternatives: Vec<GroundAction> = self
            .state
            .atoms()
            .filter(|a| a.predicate == "clear" && a.args.len() == 1)
            .map(|a| &a.args[0])
            .filter(|b| **b != held && Some(*b) != target.as_ref())
            .map(|b| GroundAction { name: Name::new("stack"), args: vec![held.clone(), b.clone()] })
            .collect();
        if target.is_some() {
            alternatives.push(GroundAction { name: Name::new("putdown"), args: vec![held.clone()] });
        }
        if alternatives.is_empty() {
            return Ok(None);
        }
        self.noise_eligible += 1;
        if !self.rng.random_bool(self.cfg.noise_probability) {
            return Ok(None);
        }
        let pick = alternatives.swap_remove(self.rng.random_range(0..alternatives.len()));
        let next = successor(&self.state, &pick, &self.task.domain, &self.task.problem)?;
        if next.is_some() {
            self.noise_applied += 1;
        }
        Ok(next)
    }
}
