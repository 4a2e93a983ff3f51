use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use induct_core::belief::BeliefMemory;
use induct_core::envs::Task;
use induct_core::eval::{belief_series_csv, summarize, Metrics};
use induct_core::orchestrator::{replay, run, ReplayError, RunSpec, RunTrace, TraceError};
use induct_pddl::{print_domain, Domain};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Overrides, RunConfig};
use crate::InvalidInput;

/// One row of `summary.json` / `summary.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub env: String,
    pub task: String,
    pub seed: u64,
    pub trace: String,
    pub termination: String,
    pub f1: f64,
    pub nr: usize,
    pub nes: usize,
    pub success: bool,
    pub gc_fraction: f64,
    pub iterations: usize,
}

impl SummaryRow {
    fn new(spec: &RunSpec, trace: &Path, termination: String, m: &Metrics) -> Self {
        SummaryRow {
            env: spec.env.env.to_string(),
            task: spec.env.task.clone(),
            seed: spec.seed,
            trace: trace.display().to_string(),
            termination,
            f1: m.f1,
            nr: m.nr,
            nes: m.nes,
            success: m.success,
            gc_fraction: m.gc_fraction,
            iterations: m.iterations,
        }
    }
}

fn trace_stem(spec: &RunSpec) -> String {
    format!("{}-{}-seed{}", spec.env.env, spec.env.task, spec.seed)
}

fn run_one(spec: &RunSpec, out: &Path) -> Result<SummaryRow> {
    let outcome = run(spec, None).with_context(|| format!("run {}", trace_stem(spec)))?;
    let path = out.join(format!("{}.jsonl", trace_stem(spec)));
    fs::write(&path, outcome.trace.to_jsonl()).with_context(|| format!("write {}", path.display()))?;
    let series = out.join(format!("{}.beliefs.csv", trace_stem(spec)));
    fs::write(&series, belief_series_csv(&outcome.trace)).with_context(|| format!("write {}", series.display()))?;
    let m = summarize(&outcome.trace, &outcome.truth)?;
    Ok(SummaryRow::new(spec, &path, format!("{:?}", outcome.report.termination), &m))
}

fn write_summary(out: &Path, rows: &[SummaryRow]) -> Result<()> {
    let json = out.join("summary.json");
    fs::write(&json, serde_json::to_string_pretty(rows)? + "\n").with_context(|| format!("write {}", json.display()))?;
    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Validate everything up front, then execute every (task, seed) run.
/// Returns `Ok(false)` when at least one run failed at runtime.
pub fn cmd_run(config: Option<&Path>, overrides: &Overrides, jobs: Option<usize>) -> Result<bool> {
    let cfg = RunConfig::resolve(config, overrides)?;
    let specs = cfg.specs()?;
    fs::create_dir_all(&cfg.out).with_context(|| format!("create {}", cfg.out.display()))?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let results: Vec<Result<SummaryRow>> = pool.install(|| specs.par_iter().map(|s| run_one(s, &cfg.out)).collect());

    let mut rows = Vec::new();
    let mut ok = true;
    for r in results {
        match r {
            Ok(row) => {
                println!(
                    "{} {} seed {}: {} f1={:.1} nr={} nes={}",
                    row.env, row.task, row.seed, row.termination, row.f1, row.nr, row.nes
                );
                rows.push(row);
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ok = false;
            }
        }
    }
    write_summary(&cfg.out, &rows)?;
    Ok(ok)
}

fn read_trace(path: &Path) -> Result<RunTrace> {
    let text = fs::read_to_string(path).with_context(|| InvalidInput(format!("cannot read {}", path.display())))?;
    RunTrace::from_jsonl(&text).map_err(|e| InvalidInput(format!("{}: {e}", path.display())).into())
}

fn spec_of(trace: &RunTrace) -> Result<RunSpec> {
    let (_, config) = trace.header().ok_or_else(|| InvalidInput("trace has no header".into()))?;
    serde_json::from_value(config.clone()).map_err(|e| InvalidInput(format!("trace header: {e}")).into())
}

fn truth_of(spec: &RunSpec) -> Result<Domain> {
    Ok(Task::builtin(spec.env.env, &spec.env.task)?.domain)
}

/// Re-execute a trace. `Ok(false)` on divergence, after printing where.
pub fn cmd_replay(path: &Path) -> Result<bool> {
    let trace = read_trace(path)?;
    match replay(&trace) {
        Ok(steps) => {
            println!("replayed {steps} steps: identical feedback");
            Ok(true)
        }
        Err(ReplayError::Divergence { nes, detail }) => {
            println!("divergence at step {nes}: {detail}");
            Ok(false)
        }
        Err(e @ (ReplayError::Trace(_) | ReplayError::Header(_))) => Err(InvalidInput(e.to_string()).into()),
        Err(e) => Err(e.into()),
    }
}

/// Recompute metrics from stored traces.
pub fn cmd_eval(paths: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let mut rows = Vec::new();
    for p in paths {
        let trace = read_trace(p)?;
        let spec = spec_of(&trace)?;
        let m = summarize(&trace, &truth_of(&spec)?).with_context(|| p.display().to_string())?;
        let termination = trace.report().map(|r| format!("{:?}", r.termination)).unwrap_or_default();
        rows.push(SummaryRow::new(&spec, p, termination, &m));
    }
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    if let Some(out) = out {
        fs::write(out, serde_json::to_string_pretty(&rows)? + "\n").with_context(|| format!("write {}", out.display()))?;
    }
    Ok(())
}

/// Emit the domain holding every statement whose final belief is ≥ `threshold`.
pub fn cmd_print_domain(path: &Path, threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        bail!(InvalidInput(format!("threshold must be in [0, 1], got {threshold}")));
    }
    let trace = read_trace(path)?;
    let spec = spec_of(&trace)?;
    let report = trace.report().ok_or_else(|| anyhow!(TraceError::Truncated))?;
    let skeleton = truth_of(&spec)?.skeleton();
    let memory = BeliefMemory::from_entries(report.beliefs.iter().map(|b| (b.key.as_str(), b.belief)), &skeleton)?;
    print!("{}", print_domain(&memory.domain_at(&skeleton, threshold)));
    Ok(())
}
