use induct_core::belief::ProposedSemantics;
use induct_core::envs::{Env, EnvConfig, EnvId, Observability, Task};
use induct_core::eval::summarize;
use induct_core::orchestrator::{
    prospect, replay, run, LoopConfig, LoopMode, LoopState, ProspectionFailed, ReplayError, RunSpec, RunTrace,
    Termination, TraceEvent,
};
use induct_core::proposer::{
    OracleGoal, PredictedError, ProposerContext, ProposerError, ProposerKind, ProposerSelection, Proposers,
    SemanticsGenerator, HeuristicErrorPredictor, HeuristicSampler, SetDifferenceChecker,
};
use induct_pddl::{parse_ground_action, simulate, GroundAction, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn act(s: &str) -> GroundAction {
    parse_ground_action(s).unwrap()
}

fn task1() -> Task {
    Task::builtin(EnvId::Blocksworld, "task1").unwrap()
}

const TASK1_PLAN: [&str; 6] = [
    "(unstack orange green)",
    "(putdown orange)",
    "(unstack green yellow)",
    "(stack green blue)",
    "(pickup yellow)",
    "(stack yellow orange)",
];

fn plan1() -> Vec<GroundAction> {
    TASK1_PLAN.iter().map(|s| act(s)).collect()
}

fn applicable_prefix(actions: &[GroundAction], t: &Task, problem: &Problem) -> usize {
    simulate(&t.domain, problem, actions).unwrap().len() - 1
}

#[test]
fn prospection_keeps_a_valid_prefix() {
    let t = task1();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = prospect(&plan1(), &t.domain, &t.problem, 5, 10, &mut rng).unwrap();
    assert_eq!(out, plan1());
}

#[test]
fn prospection_replaces_an_inapplicable_first_action() {
    let t = task1();
    let mut traj = plan1();
    traj.insert(0, act("(pickup orange)"));
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = prospect(&traj, &t.domain, &t.problem, 5, 10, &mut rng).unwrap();
        assert_ne!(out[0], act("(pickup orange)"));
        assert!(applicable_prefix(&out, &t, &t.problem) >= out.len().min(5), "seed {seed}: {out:?}");
    }
}

#[test]
fn zero_lookahead_changes_nothing() {
    let t = task1();
    let traj = vec![act("(pickup orange)"), act("(stack blue blue)")];
    let out = prospect(&traj, &t.domain, &t.problem, 0, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(out, traj);
}

#[test]
fn prospection_truncates_or_fails() {
    let t = task1();
    // Without redraws a bad second action truncates the trajectory.
    let traj = vec![act("(unstack orange green)"), act("(pickup blue)"), act("(putdown orange)")];
    let out = prospect(&traj, &t.domain, &t.problem, 5, 0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(out, vec![act("(unstack orange green)")]);

    // Nothing is applicable in an empty state.
    let mut empty = t.problem.clone();
    empty.init.clear();
    let r = prospect(&plan1(), &t.domain, &empty, 5, 10, &mut ChaCha8Rng::seed_from_u64(1));
    assert_eq!(r, Err(ProspectionFailed));
}

fn oracle_spec(task: &str, seed: u64) -> RunSpec {
    RunSpec::new(EnvConfig::new(EnvId::Blocksworld, task), ProposerSelection::uniform(ProposerKind::Oracle), seed)
}

/// Actions of each emitted trajectory are applicable under its iteration's sampled domain.
fn check_prospection(trace: &RunTrace, k: usize) {
    let mut current: Option<(induct_pddl::Domain, Problem)> = None;
    for e in &trace.events {
        match e {
            TraceEvent::Iteration { domain, problem, .. } => {
                let d = induct_pddl::parse_domain(domain).unwrap();
                let p = induct_pddl::parse_problem(problem, &d).unwrap();
                current = Some((d, p));
            }
            TraceEvent::Trajectory { actions, .. } => {
                let (d, p) = current.as_ref().unwrap();
                let n = simulate(d, p, actions).unwrap().len() - 1;
                assert!(n >= actions.len().min(k), "prefix {n} of {actions:?}");
            }
            _ => {}
        }
    }
}

fn check_counters(out: &induct_core::orchestrator::RunOutcome) {
    assert_eq!(out.report.nes, out.trace.step_count());
    assert_eq!(out.report.nr, out.trace.reset_count());
}

#[test]
fn oracle_run_solves_task1_quickly() {
    let out = run(&oracle_spec("task1", 0), None).unwrap();
    assert!(out.report.success);
    assert_eq!(out.report.termination, Termination::Success);
    assert!(out.report.iterations <= 2);
    let m = summarize(&out.trace, &out.truth).unwrap();
    assert_eq!(m.f1, 100.0);
    assert_eq!(m.gc_fraction, 1.0);
    check_counters(&out);
    check_prospection(&out.trace, 5);
}

#[test]
fn one_step_budget_stops_after_one_step() {
    let mut spec = RunSpec::new(EnvConfig::new(EnvId::Blocksworld, "task1"), ProposerSelection::default(), 0);
    spec.loop_cfg.max_executed_steps = 1;
    let out = run(&spec, None).unwrap();
    assert_eq!(out.report.nes, 1);
    assert!(!out.report.success);
    assert_eq!(out.report.termination, Termination::StepBudget);
}

#[test]
fn invalid_configuration_is_rejected() {
    let mut spec = oracle_spec("task1", 0);
    spec.loop_cfg.max_resets = 0;
    assert!(run(&spec, None).is_err());
    let mut spec = oracle_spec("task1", 0);
    spec.env.observability = Observability::Partial;
    assert!(run(&spec, None).is_err());
}

#[test]
fn identical_specs_give_identical_traces_and_replay() {
    for (task, kind) in [("task2", ProposerKind::Oracle), ("task0", ProposerKind::Heuristic)] {
        let mut spec = RunSpec::new(EnvConfig::new(EnvId::Blocksworld, task), ProposerSelection::uniform(kind), 7);
        spec.loop_cfg.max_resets = 8;
        let a = run(&spec, None).unwrap().trace.to_jsonl();
        let b = run(&spec, None).unwrap().trace.to_jsonl();
        assert_eq!(a, b, "{task}");
        let trace = RunTrace::from_jsonl(&a).unwrap();
        assert_eq!(trace.to_jsonl(), a);
        assert_eq!(replay(&trace).unwrap(), trace.step_count());
    }
}

#[test]
fn replay_reports_the_first_edited_step() {
    let out = run(&oracle_spec("task3", 0), None).unwrap();
    let mut trace = out.trace.clone();
    let mut seen = 0;
    for e in &mut trace.events {
        if let TraceEvent::Step { action, .. } = e {
            seen += 1;
            if seen == 4 {
                *action = act("(pickup blue)");
            }
        }
    }
    match replay(&trace) {
        Err(ReplayError::Divergence { nes, .. }) => assert_eq!(nes, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn reset_free_recovers_from_noise_without_resets() {
    let mut mismatches = 0;
    for seed in 0..10 {
        let mut env = EnvConfig::new(EnvId::Blocksworld, "task3");
        env.noise_probability = 0.2;
        let mut spec = RunSpec::new(env, ProposerSelection::uniform(ProposerKind::Oracle), seed);
        spec.loop_cfg.mode = LoopMode::ResetFree;
        spec.loop_cfg.stepwise_detector = true;
        let out = run(&spec, None).unwrap();
        assert!(out.report.success, "seed {seed}: {:?}", out.report.termination);
        assert_eq!(out.report.nr, 0);
        mismatches += out.trace.events.iter().filter(|e| matches!(e, TraceEvent::Mismatch { .. })).count();
        check_counters(&out);
        // A mismatch halts execution at that step and is followed by learning.
        let evs = &out.trace.events;
        for (i, e) in evs.iter().enumerate() {
            if let TraceEvent::Mismatch { .. } = e {
                assert!(matches!(evs[i - 1], TraceEvent::Step { .. }));
                let next_iter = evs[i..].iter().position(|e| matches!(e, TraceEvent::Iteration { .. })).unwrap_or(evs.len() - i);
                assert!(evs[i..i + next_iter].iter().any(|e| matches!(e, TraceEvent::Semantics { .. })));
            }
        }
    }
    assert!(mismatches > 0, "no noisy step in 10 seeds");
}

#[test]
fn checker_edits_are_never_followed_by_learning_in_the_same_iteration() {
    let mut env = EnvConfig::new(EnvId::Gridquest, "quest1");
    env.observability = Observability::Partial;
    let out = run(&RunSpec::new(env, ProposerSelection::uniform(ProposerKind::Oracle), 0), None).unwrap();
    let evs = &out.trace.events;
    let edits = evs.iter().filter(|e| matches!(e, TraceEvent::Edit { .. })).count();
    assert!(edits > 0);
    let mut in_edit = false;
    for e in evs {
        match e {
            TraceEvent::Iteration { .. } => in_edit = false,
            TraceEvent::Edit { .. } => in_edit = true,
            TraceEvent::Semantics { .. } | TraceEvent::Belief { .. } => assert!(!in_edit, "learned after an edit"),
            _ => {}
        }
    }
    assert!(out.report.success);
    check_counters(&out);
    check_prospection(&out.trace, 5);
}

struct NothingLearned;

impl SemanticsGenerator for NothingLearned {
    fn generate_semantics(&mut self, ctx: &ProposerContext, _: Option<&PredictedError>) -> Result<ProposedSemantics, ProposerError> {
        let mut s = ProposedSemantics::from_domain(&ctx.skeleton);
        s.dropped.clear();
        Ok(s)
    }
}

#[test]
fn a_learner_that_never_learns_exhausts_the_reset_budget() {
    let t = task1();
    let mut env = Env::new(EnvConfig::new(EnvId::Blocksworld, "task1")).unwrap();
    let mut proposers = Proposers {
        sampler: Box::new(HeuristicSampler::new(1)),
        semantics: Box::new(NothingLearned),
        error: Box::new(HeuristicErrorPredictor),
        checker: Box::new(SetDifferenceChecker),
        goal: Box::new(OracleGoal::new(t.problem.goal.clone())),
        llm: None,
    };
    let cfg = LoopConfig { max_resets: 4, ..Default::default() };
    let mut state = LoopState::new(cfg, &mut env, &mut proposers, 0, RunTrace::default()).unwrap();
    let termination = loop {
        if let Some(t) = state.run_iteration().unwrap() {
            break t;
        }
    };
    assert_eq!(termination, Termination::ResetBudget);
    let report = state.report(termination).unwrap();
    assert_eq!(report.nr, 4);
    assert!(!report.success);
    assert!(report.beliefs.is_empty());
}
