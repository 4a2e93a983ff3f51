//! Experiment configuration file and flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use induct_core::envs::{EnvConfig, EnvId, Task};
use induct_core::orchestrator::{LoopConfig, RunSpec};
use induct_core::proposer::{ProposerKind, ProposerSelection};
use serde::{Deserialize, Serialize};

use crate::InvalidInput;

/// A batch of runs: every task × every seed under one loop/proposer setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    /// Tasks to run; defaults to `env.task` alone.
    #[serde(default)]
    pub tasks: Vec<String>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, rename = "loop")]
    pub loop_cfg: LoopConfig,
    #[serde(default)]
    pub proposers: ProposerSelection,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub env: Option<EnvId>,
    pub task: Option<String>,
    pub proposer: Option<ProposerKind>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| InvalidInput(format!("cannot read config {}", path.display())))?;
        toml::from_str(&text).map_err(|e| InvalidInput(format!("{}: {e}", path.display())).into())
    }

    /// Load the file if given, then apply overrides. Without a file, `--env`
    /// and `--task` must both be present.
    pub fn resolve(path: Option<&Path>, o: &Overrides) -> Result<RunConfig> {
        let mut cfg = match path {
            Some(p) => RunConfig::load(p)?,
            None => {
                let (Some(env), Some(task)) = (o.env, o.task.as_deref()) else {
                    bail!(InvalidInput("either --config or both --env and --task are required".into()));
                };
                RunConfig {
                    env: EnvConfig::new(env, task),
                    tasks: Vec::new(),
                    seeds: default_seeds(),
                    out: default_out(),
                    loop_cfg: LoopConfig::default(),
                    proposers: ProposerSelection::default(),
                }
            }
        };
        if let Some(env) = o.env {
            cfg.env.env = env;
        }
        if let Some(task) = &o.task {
            cfg.env.task = task.clone();
            cfg.tasks = vec![task.clone()];
        }
        if let Some(seed) = o.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(kind) = o.proposer {
            let llm = cfg.proposers.llm.take();
            cfg.proposers = ProposerSelection { llm, ..ProposerSelection::uniform(kind) };
        }
        if let Some(out) = &o.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }

    pub fn tasks(&self) -> Vec<String> {
        if self.tasks.is_empty() {
            vec![self.env.task.clone()]
        } else {
            self.tasks.clone()
        }
    }

    /// One validated spec per (task, seed), in task-major order.
    pub fn specs(&self) -> Result<Vec<RunSpec>> {
        if self.seeds.is_empty() {
            bail!(InvalidInput("seeds must be nonempty".into()));
        }
        let mut out = Vec::new();
        for task in self.tasks() {
            Task::builtin(self.env.env, &task).map_err(|e| InvalidInput(e.to_string()))?;
            for &seed in &self.seeds {
                let spec = RunSpec {
                    env: EnvConfig { task: task.clone(), ..self.env.clone() },
                    loop_cfg: self.loop_cfg.clone(),
                    proposers: self.proposers.clone(),
                    seed,
                };
                spec.validate().map_err(|e| InvalidInput(e.to_string()))?;
                out.push(spec);
            }
        }
        Ok(out)
    }
}
