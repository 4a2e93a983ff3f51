mod common;

use std::collections::{BTreeSet, VecDeque};
use std::time::{Duration, Instant};

use common::*;
use induct_pddl::planner::external::{parse_plan_text, ExternalPlanError, ExternalPlanner, ExternalPlannerConfig};
use induct_pddl::semantics::all_ground_actions;
use induct_pddl::*;
use proptest::prelude::*;

/// Exhaustive forward reachability with the reference semantics.
fn reachable(d: &Domain, p: &Problem) -> Vec<State> {
    let actions = all_ground_actions(d, p);
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::from([p.initial_state()]);
    seen.insert(p.initial_state());
    while let Some(s) = queue.pop_front() {
        for a in &actions {
            if let Some(n) = successor(&s, a, d, p).unwrap() {
                if seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
    }
    seen.into_iter().collect()
}

#[test]
fn goal_already_true_gives_empty_plan() {
    let d = blocksworld();
    let p = problem(&d, "bw-solved");
    assert_eq!(plan(&d, &p, &PlannerConfig::default()).unwrap(), PlanResult::Complete { plan: vec![] });
}

#[test]
fn effectless_pickup_never_completes_task1() {
    let mut d = blocksworld();
    let idx = d.actions.iter().position(|a| a.name == "pickup").unwrap();
    d.actions[idx].effect = Condition::empty();
    let p = problem(&d, "bw-task1");
    let states = reachable(&d, &p);
    assert!(states.iter().all(|s| !goal_holds(s, &p, &d).unwrap()), "goal must be unreachable");
    for mode in [SearchMode::GreedyBestFirst, SearchMode::BreadthFirst] {
        let cfg = PlannerConfig { search_mode: mode, ..Default::default() };
        match plan(&d, &p, &cfg).unwrap() {
            PlanResult::Partial { prefix, satisfied } => {
                let end = simulate(&d, &p, &prefix).unwrap();
                assert_eq!(end.len(), prefix.len() + 1, "prefix executable");
                assert_eq!(satisfied, 1);
            }
            PlanResult::Unsolvable => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}

fn max_reachable_satisfied(d: &Domain, p: &Problem) -> usize {
    reachable(d, p)
        .iter()
        .map(|s| induct_pddl::semantics::satisfied_conjuncts(s, &p.goal, d, p).unwrap())
        .max()
        .unwrap()
}

#[test]
fn no_progress_over_init_is_unsolvable() {
    // `stack` never adds `on`, so no goal `on` atom beyond those true at init can be made true.
    let d = parse_domain(&read("blocksworld.pddl").replace(
        ":effect (and (arm-empty) (clear ?ob) (on ?ob ?underob) (not (clear ?underob)) (not (holding ?ob)))",
        ":effect (and (arm-empty) (clear ?ob) (not (clear ?underob)) (not (holding ?ob)))",
    ))
    .unwrap();
    let p = problem(&d, "bw-task2");
    let init_sat = induct_pddl::semantics::satisfied_conjuncts(&p.initial_state(), &p.goal, &d, &p).unwrap();
    assert_eq!(init_sat, 1);
    assert_eq!(max_reachable_satisfied(&d, &p), init_sat);
    // Ties go to the shortest prefix, i.e. the empty one: nothing beats staying put.
    assert_eq!(plan(&d, &p, &PlannerConfig::default()).unwrap(), PlanResult::Unsolvable);
}

#[test]
fn partial_prefix_reaches_best_explored_state() {
    // `stack` never frees the arm, so at most one stack can happen.
    let d = parse_domain(&read("blocksworld.pddl").replace(
        ":effect (and (arm-empty) (clear ?ob) (on ?ob ?underob) (not (clear ?underob)) (not (holding ?ob)))",
        ":effect (and (clear ?ob) (on ?ob ?underob) (not (clear ?underob)) (not (holding ?ob)))",
    ))
    .unwrap();
    let p = parse_problem(
        "(define (problem x) (:domain blocksworld) (:objects a b c - block)
           (:init (on a b) (on-table b) (on-table c) (clear a) (clear c) (arm-empty))
           (:goal (and (on a c) (on b a))))",
        &d,
    )
    .unwrap();
    let best = max_reachable_satisfied(&d, &p);
    assert_eq!(best, 1);
    for mode in [SearchMode::GreedyBestFirst, SearchMode::BreadthFirst] {
        let r = plan(&d, &p, &PlannerConfig { search_mode: mode, ..Default::default() }).unwrap();
        let PlanResult::Partial { prefix, satisfied } = r else { panic!("{r:?}") };
        assert_eq!(satisfied, best);
        assert_eq!(prefix, actions(&["(unstack a b)", "(stack a c)"]));
        let end = simulate(&d, &p, &prefix).unwrap();
        assert_eq!(end.len(), 3);
    }
}

#[test]
fn node_budget_is_enforced() {
    let d = domain("gripper");
    let p = problem(&d, "gripper-p1");
    let cfg = PlannerConfig { node_budget: 3, search_mode: SearchMode::BreadthFirst, ..Default::default() };
    assert!(matches!(plan(&d, &p, &cfg).unwrap(), PlanResult::BudgetExhausted { .. }));
}

fn big_gripper(n: usize) -> (Domain, Problem) {
    let d = domain("gripper");
    let balls: Vec<String> = (0..n).map(|i| format!("ball{i}")).collect();
    let text = format!(
        "(define (problem big) (:domain gripper) (:objects rooma roomb roomc - room {} - ball left right - gripper)
           (:init (at-robby rooma) (free left) (free right) {})
           (:goal (and {})))",
        balls.join(" "),
        balls.iter().map(|b| format!("(at {b} rooma)")).collect::<String>(),
        balls.iter().map(|b| format!("(at {b} roomc)")).collect::<String>(),
    );
    let p = parse_problem(&text, &d).unwrap();
    (d, p)
}

#[test]
fn time_budget_is_respected() {
    let (d, p) = big_gripper(14);
    let cfg = PlannerConfig { time_budget_secs: 0.2, search_mode: SearchMode::BreadthFirst, node_budget: usize::MAX };
    let start = Instant::now();
    let r = plan(&d, &p, &cfg).unwrap();
    assert!(start.elapsed() < Duration::from_secs_f64(0.2 + 1.0), "took {:?}", start.elapsed());
    assert!(matches!(r, PlanResult::BudgetExhausted { .. }), "{r:?}");
}

#[test]
fn inconsistent_inputs_are_rejected() {
    let d = blocksworld();
    let g = domain("gripper");
    let p = problem(&g, "gripper-p1");
    assert!(matches!(plan(&d, &p, &PlannerConfig::default()), Err(PlannerError::Inconsistent(_))));
}

#[test]
fn conditional_effects_and_existentials_plan() {
    for (dn, pn) in [("switches", "switches-p1"), ("keys", "keys-p1"), ("kitchen", "kitchen-p1"), ("constants", "constants-p1"), ("negative", "negative-p1"), ("gridquest", "gq-small")] {
        let d = domain(dn);
        let p = problem(&d, pn);
        let r = plan(&d, &p, &PlannerConfig::default()).unwrap();
        let found = r.complete().unwrap_or_else(|| panic!("{pn}: {r:?}"));
        assert!(validate_plan(&d, &p, found).unwrap().is_valid(), "{pn}");
    }
}

/// Random towers over `n` blocks: a permutation cut into stacks.
fn towers(n: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), proptest::collection::vec(any::<bool>(), n)).prop_map(|(perm, cuts)| {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (i, b) in perm.into_iter().enumerate() {
            if i == 0 || cuts[i] {
                out.push(vec![b]);
            } else {
                out.last_mut().unwrap().push(b);
            }
        }
        out
    })
}

fn tower_atoms(ts: &[Vec<usize>]) -> (Vec<String>, Vec<String>) {
    let mut on = Vec::new();
    let mut other = Vec::new();
    for t in ts {
        other.push(format!("(on-table b{})", t[0]));
        for w in t.windows(2) {
            on.push(format!("(on b{} b{})", w[1], w[0]));
        }
        other.push(format!("(clear b{})", t.last().unwrap()));
    }
    (on, other)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn complete_plans_always_validate(n in 2usize..=5, init in towers(5), goal in towers(5)) {
        let keep = |ts: Vec<Vec<usize>>| -> Vec<Vec<usize>> {
            ts.into_iter().map(|t| t.into_iter().filter(|&b| b < n).collect::<Vec<_>>()).filter(|t| !t.is_empty()).collect()
        };
        let (init, goal) = (keep(init), keep(goal));
        let (on, other) = tower_atoms(&init);
        let (goal_on, _) = tower_atoms(&goal);
        let goal_text = if goal_on.is_empty() { "(and )".to_string() } else { format!("(and {})", goal_on.join(" ")) };
        let objs: Vec<String> = (0..n).map(|i| format!("b{i}")).collect();
        let d = blocksworld();
        let text = format!(
            "(define (problem r) (:domain blocksworld) (:objects {} - block) (:init (arm-empty) {} {}) (:goal {goal_text}))",
            objs.join(" "), on.join(" "), other.join(" ")
        );
        let p = parse_problem(&text, &d).unwrap();
        let r = plan(&d, &p, &PlannerConfig::default()).unwrap();
        let found = r.complete().expect("blocksworld is always solvable");
        prop_assert!(validate_plan(&d, &p, found).unwrap().is_valid());
    }
}

#[cfg(unix)]
mod external {
    use super::*;

    fn adapter(dir: &std::path::Path, script: &str) -> ExternalPlanner {
        ExternalPlanner::new(ExternalPlannerConfig {
            command: vec!["sh".into(), "-c".into(), script.into(), "planner".into(), "{domain}".into(), "{problem}".into(), "{plan}".into()],
            work_dir: dir.to_path_buf(),
        })
    }

    #[test]
    fn external_plan_is_revalidated() {
        let d = blocksworld();
        let p = problem(&d, "bw-task1");
        let internal = plan(&d, &p, &PlannerConfig::default()).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let fixture = tmp.path().join("fixture.txt");
        let text: String = internal.complete().unwrap().iter().map(|a| format!("{a}\n")).collect::<String>() + "; cost = 6 (unit cost)\n";
        std::fs::write(&fixture, text).unwrap();
        let work = tmp.path().join("work");
        let script = format!("test -s \"$1\" && test -s \"$2\" && cp '{}' \"$3\"", fixture.display());
        let r = adapter(&work, &script).plan(&d, &p).unwrap();
        assert_eq!(r, internal);
        assert!(work.join("domain.pddl").exists());
        assert_eq!(parse_domain(&std::fs::read_to_string(work.join("domain.pddl")).unwrap()).unwrap(), d);
    }

    #[test]
    fn nonzero_exit_is_process_failure() {
        let d = blocksworld();
        let p = problem(&d, "bw-task1");
        let tmp = tempfile::tempdir().unwrap();
        let err = adapter(tmp.path(), "echo boom >&2; exit 3").plan(&d, &p).unwrap_err();
        match err {
            ExternalPlanError::ProcessFailure { stderr, .. } => assert_eq!(stderr, "boom"),
            e => panic!("{e}"),
        }
        assert!(matches!(adapter(tmp.path(), "true").plan(&d, &p), Err(ExternalPlanError::MissingPlan)));
    }

    #[test]
    fn corrupted_plan_is_rejected() {
        let d = blocksworld();
        let p = problem(&d, "bw-task1");
        let tmp = tempfile::tempdir().unwrap();
        let mut lines = TASK1_PLAN.to_vec();
        lines.swap(1, 2);
        let script = format!("printf '{}' > \"$3\"", lines.join("\\n"));
        let err = adapter(tmp.path(), &script).plan(&d, &p).unwrap_err();
        assert!(matches!(err, ExternalPlanError::ValidationFailure(PlanValidation::PreconditionFailure { index: 1 })), "{err}");
        let err = adapter(tmp.path(), "printf '(pickup a\\n' > \"$3\"").plan(&d, &p).unwrap_err();
        assert!(matches!(err, ExternalPlanError::UnparseablePlan { line: 1, .. }));
        assert!(parse_plan_text("").unwrap().is_empty());
    }
}
