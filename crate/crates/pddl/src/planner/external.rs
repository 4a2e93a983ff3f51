//! Adapter for an out-of-process planner (e.g. Fast Downward).
//!
//! The command template is a list of argv words; `{domain}`, `{problem}` and
//! `{plan}` are replaced with file paths inside the working directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{validate_plan, PlanResult, PlanValidation};
use crate::ast::{Domain, GroundAction, Problem};
use crate::error::PddlError;
use crate::parse::parse_ground_action;
use crate::print::{print_domain, print_problem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalPlannerConfig {
    pub command: Vec<String>,
    pub work_dir: PathBuf,
}

#[derive(Debug, Error)]
pub enum ExternalPlanError {
    #[error("external planner command is empty")]
    EmptyCommand,
    #[error("i/o error in {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("external planner failed ({status}): {stderr}")]
    ProcessFailure { status: String, stderr: String },
    #[error("external planner exited successfully but wrote no plan file")]
    MissingPlan,
    #[error("plan file line {line}: {source}")]
    UnparseablePlan { line: usize, source: PddlError },
    #[error("external plan rejected by validation: {0:?}")]
    ValidationFailure(PlanValidation),
    #[error(transparent)]
    Pddl(#[from] PddlError),
}

/// One adapter per working directory; invocations are serialized.
#[derive(Debug)]
pub struct ExternalPlanner {
    cfg: ExternalPlannerConfig,
    lock: Mutex<()>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExternalPlanError + '_ {
    move |source| ExternalPlanError::Io { path: path.to_path_buf(), source }
}

/// Parse a plan file: one `(action arg ...)` per line; blank lines and `;` comments skipped.
pub fn parse_plan_text(text: &str) -> Result<Vec<GroundAction>, ExternalPlanError> {
    let mut plan = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let a = parse_ground_action(line).map_err(|source| ExternalPlanError::UnparseablePlan { line: i + 1, source })?;
        plan.push(a);
    }
    Ok(plan)
}

impl ExternalPlanner {
    pub fn new(cfg: ExternalPlannerConfig) -> Self {
        ExternalPlanner { cfg, lock: Mutex::new(()) }
    }

    pub fn config(&self) -> &ExternalPlannerConfig {
        &self.cfg
    }

    pub fn plan(&self, domain: &Domain, problem: &Problem) -> Result<PlanResult, ExternalPlanError> {
        let (program, args) = self.cfg.command.split_first().ok_or(ExternalPlanError::EmptyCommand)?;
        let _guard = self.lock.lock().unwrap_or_else(|e| e.into_inner());

        let dir = &self.cfg.work_dir;
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let domain_path = dir.join("domain.pddl");
        let problem_path = dir.join("problem.pddl");
        let plan_path = dir.join("plan.txt");
        fs::write(&domain_path, print_domain(domain)).map_err(io_err(&domain_path))?;
        fs::write(&problem_path, print_problem(problem)).map_err(io_err(&problem_path))?;
        if plan_path.exists() {
            fs::remove_file(&plan_path).map_err(io_err(&plan_path))?;
        }

        let fill = |s: &str| {
            s.replace("{domain}", &domain_path.to_string_lossy())
                .replace("{problem}", &problem_path.to_string_lossy())
                .replace("{plan}", &plan_path.to_string_lossy())
        };
        let output = Command::new(fill(program))
            .args(args.iter().map(|a| fill(a)))
            .current_dir(dir)
            .output()
            .map_err(io_err(Path::new(program)))?;
        if !output.status.success() {
            return Err(ExternalPlanError::ProcessFailure {
                status: output.status.to_string(),
                stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
            });
        }
        if !plan_path.exists() {
            return Err(ExternalPlanError::MissingPlan);
        }
        let text = fs::read_to_string(&plan_path).map_err(io_err(&plan_path))?;
        let plan = parse_plan_text(&text)?;
        match validate_plan(domain, problem, &plan)? {
            PlanValidation::Valid => Ok(PlanResult::Complete { plan }),
            other => Err(ExternalPlanError::ValidationFailure(other)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_file_skips_comments() {
        let p = parse_plan_text("(pickup a)\n\n; cost = 1 (unit cost)\n(STACK a b)\n").unwrap();
        assert_eq!(p, vec![GroundAction::new("pickup", &["a"]), GroundAction::new("stack", &["a", "b"])]);
        assert!(matches!(parse_plan_text("(pickup a\n"), Err(ExternalPlanError::UnparseablePlan { line: 1, .. })));
    }
}
