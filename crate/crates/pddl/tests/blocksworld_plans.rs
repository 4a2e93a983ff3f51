mod common;

use common::*;
use induct_pddl::*;

fn run(plan: &[&str], task: &str) -> (Domain, Problem, Vec<GroundAction>) {
    let d = blocksworld();
    let p = problem(&d, task);
    (d, p, actions(plan))
}

#[test]
fn reference_plans_validate_step_by_step() {
    for (task, plan, len) in [("bw-task1", &TASK1_PLAN[..], 6), ("bw-task2", &TASK2_PLAN[..], 8), ("bw-task3", &TASK3_PLAN[..], 8)] {
        let (d, p, plan) = run(plan, task);
        assert_eq!(plan.len(), len);
        let mut state = p.initial_state();
        for a in &plan {
            assert!(applicable(&state, a, &d, &p).unwrap(), "{task}: {a} inapplicable");
            state = successor(&state, a, &d, &p).unwrap().unwrap();
        }
        assert!(goal_holds(&state, &p, &d).unwrap(), "{task}: goal missed");
        assert_eq!(validate_plan(&d, &p, &plan).unwrap(), PlanValidation::Valid);
    }
}

#[test]
fn alternative_task2_plan_also_reaches_goal() {
    let (d, p, plan) = run(&TASK2_ALT_PLAN, "bw-task2");
    assert!(validate_plan(&d, &p, &plan).unwrap().is_valid());
}

#[test]
fn truncated_plan_misses_goal_at_end() {
    let (d, p, mut plan) = run(&TASK2_PLAN, "bw-task2");
    plan.pop();
    assert_eq!(validate_plan(&d, &p, &plan).unwrap(), PlanValidation::GoalMiss { index: 7 });
}

#[test]
fn first_failing_index_is_reported() {
    let (d, p, mut plan) = run(&TASK1_PLAN, "bw-task1");
    plan.swap(0, 1);
    assert_eq!(validate_plan(&d, &p, &plan).unwrap(), PlanValidation::PreconditionFailure { index: 0 });
    let unknown = vec!["(teleport orange)".parse().unwrap()];
    assert!(matches!(validate_plan(&d, &p, &unknown), Err(PddlError::UnknownAction(_))));
}

#[test]
fn applicability_in_task1_initial_state() {
    let (d, p, _) = run(&[], "bw-task1");
    let s = p.initial_state();
    assert!(applicable(&s, &"(unstack orange green)".parse().unwrap(), &d, &p).unwrap());
    assert!(!applicable(&s, &"(pickup orange)".parse().unwrap(), &d, &p).unwrap());
    let after = successor(&s, &"(unstack orange green)".parse().unwrap(), &d, &p).unwrap().unwrap();
    assert!(after.contains(&GroundAtom::new("holding", &["orange"])));
}

#[test]
fn pickup_effect_on_minimal_state() {
    let d = blocksworld();
    let p = parse_problem("(define (problem x) (:domain blocksworld) (:objects b - block) (:goal (holding b)))", &d).unwrap();
    let s = State::new(["(arm-empty)", "(clear b)", "(on-table b)"].map(|a| a.parse::<GroundAtom>().unwrap()));
    let pickup = GroundAction::new("pickup", &["b"]);
    let (pre, eff) = ground(&d, d.action("pickup").unwrap(), &pickup.args, &p).unwrap();
    assert_eq!(pre.to_string(), "(and (clear b) (on-table b) (arm-empty))");
    assert!(holds(&s, &pre).unwrap());
    assert_eq!(apply(&s, &eff).unwrap(), State::new([GroundAtom::new("holding", &["b"])]));
    assert!(!applicable(&State::default(), &pickup, &d, &p).unwrap());
}

#[test]
fn planner_solves_task1() {
    let d = blocksworld();
    let p = problem(&d, "bw-task1");
    let gbfs = plan(&d, &p, &PlannerConfig::default()).unwrap();
    let found = gbfs.complete().expect("complete plan");
    assert!(validate_plan(&d, &p, found).unwrap().is_valid());
    let cfg = PlannerConfig { search_mode: SearchMode::BreadthFirst, ..Default::default() };
    let bfs = plan(&d, &p, &cfg).unwrap();
    let shortest = bfs.complete().unwrap();
    assert_eq!(shortest.len(), 6);
    assert_eq!(shortest[0], "(unstack orange green)".parse().unwrap());
    assert!(validate_plan(&d, &p, shortest).unwrap().is_valid());
}

#[test]
fn planner_solves_all_tasks() {
    let d = blocksworld();
    for task in ["bw-task1", "bw-task2", "bw-task3", "bw-or-goal"] {
        let p = problem(&d, task);
        let r = plan(&d, &p, &PlannerConfig::default()).unwrap();
        assert!(validate_plan(&d, &p, r.complete().unwrap()).unwrap().is_valid(), "{task}");
    }
}
