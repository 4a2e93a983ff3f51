use std::collections::{BTreeMap, BTreeSet};

use induct_core::belief::domain_paths;
use induct_core::envs::{EnvConfig, EnvId, Observation, StepStatus, Task};
use induct_core::eval::{f1, f1_paths, summarize, EvalError};
use induct_core::orchestrator::{run, RunReport, RunSpec, RunTrace, Termination, TraceEvent, TRACE_SCHEMA, TRACE_VERSION};
use induct_core::proposer::{ProposerKind, ProposerSelection};
use induct_pddl::{parse_domain, parse_ground_action, print_domain, Condition, Domain};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn truth() -> Domain {
    Task::builtin(EnvId::Blocksworld, "task1").unwrap().domain
}

fn drop_first_precondition(d: &Domain) -> Domain {
    let mut d = d.clone();
    let a = d.actions.iter_mut().find(|a| a.name.as_str() == "pickup").unwrap();
    match &mut a.precondition {
        Condition::And(v) => {
            v.remove(0);
        }
        other => panic!("unexpected precondition {other:?}"),
    }
    d
}

#[test]
fn identical_domains_score_100() {
    let t = truth();
    let r = f1(&t, &t).unwrap();
    assert_eq!((r.precision, r.recall, r.f1), (100.0, 100.0, 100.0));
    assert!(r.missing.is_empty() && r.spurious.is_empty());
}

#[test]
fn one_missing_path_matches_the_closed_form() {
    let t = truth();
    let n = domain_paths(&t).len() as f64;
    let pred = drop_first_precondition(&t);
    assert_eq!(domain_paths(&pred).len() as f64, n - 1.0);
    let want = 2.0 * (n - 1.0) / (2.0 * n - 1.0) * 100.0;
    let r = f1(&pred, &t).unwrap();
    assert!((r.f1 - want).abs() < 1e-9, "{} vs {want}", r.f1);
    assert_eq!(r.missing.len(), 1);
    // The pooled score is symmetric in its arguments.
    assert!((f1(&t, &pred).unwrap().f1 - want).abs() < 1e-9);
}

fn random_set(rng: &mut ChaCha8Rng, universe: &[String]) -> BTreeSet<String> {
    universe.iter().filter(|_| rng.random_bool(0.5)).cloned().collect()
}

fn universe() -> Vec<String> {
    (0..24).map(|i| format!("{}_pre-and-(p{i})", ["Pickup", "Stack", "Putdown"][i % 3])).collect()
}

#[test]
fn either_naming_gives_the_same_f1() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = universe();
    for _ in 0..1000 {
        let (a, b) = (random_set(&mut rng, &u), random_set(&mut rng, &u));
        let r = f1_paths(&a, &b);
        let (c, na, nb) = (a.intersection(&b).count() as f64, a.len() as f64, b.len() as f64);
        let expected = if na + nb == 0.0 { 100.0 } else { 100.0 * 2.0 * c / (na + nb) };
        assert!((r.f1 - expected).abs() < 1e-9);
        let conv = |p: f64, q: f64| if p + q == 0.0 { 0.0 } else { 2.0 * p * q / (p + q) };
        if na + nb > 0.0 {
            assert!((conv(r.conventional_precision, r.conventional_recall) - r.f1).abs() < 1e-9);
        }
        assert!((f1_paths(&b, &a).f1 - r.f1).abs() < 1e-9);
    }
}

#[test]
fn adding_true_paths_never_lowers_f1_and_adding_false_ones_never_raises_it() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let u = universe();
    for _ in 0..300 {
        let truth = random_set(&mut rng, &u);
        let mut pred = random_set(&mut rng, &u);
        let base = f1_paths(&pred, &truth).f1;
        let missing: Vec<&String> = truth.difference(&pred).collect();
        if let Some(m) = missing.choose(&mut rng) {
            let mut more = pred.clone();
            more.insert((*m).clone());
            assert!(f1_paths(&more, &truth).f1 >= base);
        }
        pred.insert(format!("Pickup_pre-and-(bogus{})", rng.random::<u32>()));
        assert!(f1_paths(&pred, &truth).f1 <= base);
    }
}

#[test]
fn empty_prediction_scores_zero() {
    let t = truth();
    let mut empty = t.clone();
    for a in &mut empty.actions {
        a.precondition = Condition::empty();
        a.effect = Condition::empty();
    }
    assert!(domain_paths(&empty).is_empty());
    let r = f1(&empty, &t).unwrap();
    assert_eq!(r.f1, 0.0);
    assert_eq!(r.missing.len(), domain_paths(&t).len());
}

#[test]
fn different_signatures_are_rejected() {
    let t = truth();
    let mut other = t.clone();
    other.actions.pop();
    assert!(matches!(f1(&other, &t), Err(EvalError::SignatureMismatch(_))));
}

fn blank() -> Observation {
    Observation { atoms: BTreeSet::new(), objects: Vec::new() }
}

/// Two resets (one explicit, one fatal step) and seventeen executed steps.
fn fixture(best: &Domain) -> RunTrace {
    let mut tr = RunTrace::default();
    tr.push(TraceEvent::Header {
        schema: TRACE_SCHEMA.into(),
        version: TRACE_VERSION,
        seed: 3,
        config: serde_json::Value::Object(Default::default()),
    });
    tr.push(TraceEvent::Reset { nr: 1, observation: blank() });
    let a = parse_ground_action("(pickup blue)").unwrap();
    for i in 1..=17 {
        let status = if i == 9 { StepStatus::EpisodeReset } else { StepStatus::Applied };
        tr.push(TraceEvent::Step { nes: i, index: 0, action: a.clone(), status, observation: blank(), goal_reached: false });
    }
    tr.push(TraceEvent::End {
        report: RunReport {
            success: false,
            termination: Termination::ResetBudget,
            nr: 2,
            nes: 17,
            iterations: 6,
            gc_fraction: 0.5,
            best_domain: print_domain(best),
            beliefs: Vec::new(),
        },
    });
    tr
}

#[test]
fn fixture_trace_is_summarized_from_its_report() {
    let t = truth();
    let tr = fixture(&drop_first_precondition(&t));
    assert_eq!(tr.step_count(), 17);
    assert_eq!(tr.reset_count(), 2);
    let back = RunTrace::from_jsonl(&tr.to_jsonl()).unwrap();
    let m = summarize(&back, &t).unwrap();
    assert_eq!((m.nr, m.nes, m.iterations, m.success), (2, 17, 6, false));
    assert_eq!(m.gc_fraction, 0.5);
    let n = domain_paths(&t).len() as f64;
    assert!((m.f1 - 200.0 * (n - 1.0) / (2.0 * n - 1.0)).abs() < 1e-9);
}

#[test]
fn empty_and_truncated_traces() {
    let t = truth();
    let m = summarize(&RunTrace::default(), &t).unwrap();
    assert_eq!((m.f1, m.nr, m.nes, m.success, m.iterations), (0.0, 0, 0, false, 0));
    let mut tr = fixture(&t);
    tr.events.pop();
    assert!(matches!(summarize(&tr, &t), Err(EvalError::Truncated)));
}

#[test]
fn oracle_runs_recover_the_truth() {
    let mut per_task = BTreeMap::new();
    for task in ["task1", "task2", "task3"] {
        let spec = RunSpec::new(EnvConfig::new(EnvId::Blocksworld, task), ProposerSelection::uniform(ProposerKind::Oracle), 0);
        let out = run(&spec, None).unwrap();
        let m = summarize(&out.trace, &out.truth).unwrap();
        assert_eq!(m.f1, 100.0, "{task}");
        assert!(m.success);
        assert_eq!(parse_domain(&out.trace.report().unwrap().best_domain).unwrap(), out.truth);
        per_task.insert(task, m.nes);
    }
    assert_eq!(per_task["task1"], 6);
}
