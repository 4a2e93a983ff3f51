//! Grounding and closed-world evaluation.

use std::collections::{BTreeMap, BTreeSet};

use crate::ast::*;
use crate::error::PddlError;
use crate::name::Name;

/// Objects of `ty` (including subtypes) among the problem objects and domain constants.
pub fn objects_of_type(domain: &Domain, problem: &Problem, ty: &Name) -> Vec<Name> {
    let mut out: Vec<Name> = Vec::new();
    for (o, t) in problem.objects.iter().chain(domain.constants.iter()) {
        if domain.is_subtype(t, ty) && !out.contains(o) {
            out.push(o.clone());
        }
    }
    out
}

fn object_type<'a>(domain: &'a Domain, problem: &'a Problem, obj: &Name) -> Option<&'a Name> {
    problem.object_type(obj).or_else(|| domain.constants.iter().find(|(c, _)| c == obj).map(|(_, t)| t))
}

/// Check `args` against a schema's parameter list.
pub fn check_args(domain: &Domain, schema: &ActionSchema, args: &[Name], problem: &Problem) -> Result<(), PddlError> {
    if args.len() != schema.params.len() {
        return Err(PddlError::ActionArity { name: schema.name.clone(), expected: schema.params.len(), got: args.len() });
    }
    for (arg, param) in args.iter().zip(&schema.params) {
        let ty = object_type(domain, problem, arg).ok_or_else(|| PddlError::UnknownObject(arg.clone()))?;
        if !domain.is_subtype(ty, &param.ty) {
            return Err(PddlError::TypeMismatch { object: arg.clone(), expected: param.ty.clone() });
        }
    }
    Ok(())
}

/// Substitute `args` for the schema parameters and expand `exists` over the
/// declared objects. Returns the ground (precondition, effect).
pub fn ground(
    domain: &Domain,
    schema: &ActionSchema,
    args: &[Name],
    problem: &Problem,
) -> Result<(Condition, Condition), PddlError> {
    check_args(domain, schema, args, problem)?;
    let bind: BTreeMap<Name, Term> =
        schema.params.iter().zip(args).map(|(p, a)| (p.name.clone(), Term::Const(a.clone()))).collect();
    let pre = expand_exists(&schema.precondition.substitute(&bind), domain, problem);
    let eff = schema.effect.substitute(&bind);
    Ok((pre, eff))
}

/// Replace every `exists` by the disjunction of its instantiations. An empty
/// object set yields `(or )`, which is false.
pub fn expand_exists(cond: &Condition, domain: &Domain, problem: &Problem) -> Condition {
    match cond {
        Condition::Literal(_) => cond.clone(),
        Condition::And(cs) => Condition::And(cs.iter().map(|c| expand_exists(c, domain, problem)).collect()),
        Condition::Or(cs) => Condition::Or(cs.iter().map(|c| expand_exists(c, domain, problem)).collect()),
        Condition::When(a, b) => Condition::When(
            Box::new(expand_exists(a, domain, problem)),
            Box::new(expand_exists(b, domain, problem)),
        ),
        Condition::Exists(vars, body) => {
            let domains: Vec<Vec<Name>> = vars.iter().map(|v| objects_of_type(domain, problem, &v.ty)).collect();
            let mut disjuncts = Vec::new();
            for_each_tuple(&domains, &mut |tuple| {
                let bind: BTreeMap<Name, Term> =
                    vars.iter().zip(tuple).map(|(v, o)| (v.name.clone(), Term::Const(o.clone()))).collect();
                disjuncts.push(expand_exists(&body.substitute(&bind), domain, problem));
            });
            Condition::Or(disjuncts)
        }
    }
}

/// Calls `f` with every element of the cartesian product of `domains`, in
/// lexicographic order of indices.
pub fn for_each_tuple(domains: &[Vec<Name>], f: &mut dyn FnMut(&[Name])) {
    if domains.iter().any(|d| d.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; domains.len()];
    let mut tuple: Vec<Name> = domains.iter().map(|d| d[0].clone()).collect();
    loop {
        f(&tuple);
        let mut k = domains.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                tuple[k] = domains[k][idx[k]].clone();
                break;
            }
            idx[k] = 0;
            tuple[k] = domains[k][0].clone();
        }
    }
}

fn ensure_ground(cond: &Condition) -> Result<(), PddlError> {
    match cond {
        Condition::Literal(l) => l.atom.to_ground().map(|_| ()),
        Condition::And(cs) | Condition::Or(cs) => cs.iter().try_for_each(ensure_ground),
        Condition::When(a, b) => {
            ensure_ground(a)?;
            ensure_ground(b)
        }
        Condition::Exists(vars, _) => Err(PddlError::FreeVariable(vars.first().map(|v| v.name.clone()).unwrap_or_else(|| Name::new("?")))),
    }
}

/// Closed-world truth of a ground condition.
pub fn holds(state: &State, cond: &Condition) -> Result<bool, PddlError> {
    ensure_ground(cond)?;
    eval(state, cond)
}

fn eval(state: &State, cond: &Condition) -> Result<bool, PddlError> {
    Ok(match cond {
        Condition::Literal(l) => state.contains(&l.atom.to_ground()?) != l.negated,
        Condition::And(cs) => {
            for c in cs {
                if !eval(state, c)? {
                    return Ok(false);
                }
            }
            true
        }
        Condition::Or(cs) => {
            for c in cs {
                if eval(state, c)? {
                    return Ok(true);
                }
            }
            false
        }
        Condition::When(..) => return Err(PddlError::IllFormed("`when` inside a condition".into())),
        Condition::Exists(..) => unreachable!("rejected by ensure_ground"),
    })
}

/// Add and delete sets of a ground effect; `when` antecedents read `state`.
pub fn effect_delta(state: &State, effect: &Condition) -> Result<(BTreeSet<GroundAtom>, BTreeSet<GroundAtom>), PddlError> {
    ensure_ground(effect)?;
    let mut add = BTreeSet::new();
    let mut del = BTreeSet::new();
    collect_delta(state, effect, &mut add, &mut del)?;
    Ok((add, del))
}

fn collect_delta(
    state: &State,
    effect: &Condition,
    add: &mut BTreeSet<GroundAtom>,
    del: &mut BTreeSet<GroundAtom>,
) -> Result<(), PddlError> {
    match effect {
        Condition::Literal(l) => {
            let a = l.atom.to_ground()?;
            if l.negated {
                del.insert(a);
            } else {
                add.insert(a);
            }
        }
        Condition::And(cs) => {
            for c in cs {
                collect_delta(state, c, add, del)?;
            }
        }
        Condition::When(ante, cons) => {
            if eval(state, ante)? {
                collect_delta(state, cons, add, del)?;
            }
        }
        Condition::Or(_) => return Err(PddlError::OrInEffect),
        Condition::Exists(..) => return Err(PddlError::IllFormed("`exists` inside an effect".into())),
    }
    Ok(())
}

/// Delete-then-add application of a ground effect.
pub fn apply(state: &State, effect: &Condition) -> Result<State, PddlError> {
    let (add, del) = effect_delta(state, effect)?;
    let mut next: BTreeSet<GroundAtom> = state.0.difference(&del).cloned().collect();
    next.extend(add);
    Ok(State(next))
}

pub fn applicable(state: &State, action: &GroundAction, domain: &Domain, problem: &Problem) -> Result<bool, PddlError> {
    let schema = domain.action(action.name.as_str()).ok_or_else(|| PddlError::UnknownAction(action.name.clone()))?;
    let (pre, _) = ground(domain, schema, &action.args, problem)?;
    holds(state, &pre)
}

/// Successor state, or `None` when the action is inapplicable.
pub fn successor(state: &State, action: &GroundAction, domain: &Domain, problem: &Problem) -> Result<Option<State>, PddlError> {
    let schema = domain.action(action.name.as_str()).ok_or_else(|| PddlError::UnknownAction(action.name.clone()))?;
    let (pre, eff) = ground(domain, schema, &action.args, problem)?;
    if !holds(state, &pre)? {
        return Ok(None);
    }
    apply(state, &eff).map(Some)
}

/// Number of top-level goal conjuncts true in `state`.
pub fn satisfied_conjuncts(state: &State, goal: &Condition, domain: &Domain, problem: &Problem) -> Result<usize, PddlError> {
    let g = expand_exists(goal, domain, problem);
    let mut n = 0;
    for c in g.conjuncts() {
        if holds(state, c)? {
            n += 1;
        }
    }
    Ok(n)
}

pub fn goal_holds(state: &State, problem: &Problem, domain: &Domain) -> Result<bool, PddlError> {
    holds(state, &expand_exists(&problem.goal, domain, problem))
}

/// Every well-typed ground action of the domain over the problem's objects,
/// in schema order then lexicographic argument order.
pub fn all_ground_actions(domain: &Domain, problem: &Problem) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for schema in &domain.actions {
        let doms: Vec<Vec<Name>> = schema.params.iter().map(|p| objects_of_type(domain, problem, &p.ty)).collect();
        for_each_tuple(&doms, &mut |t| out.push(GroundAction { name: schema.name.clone(), args: t.to_vec() }));
    }
    out
}


/// Structural consistency of a problem against a domain: object types exist,
/// init atoms and goal use declared predicates with the right arity, and only
/// declared objects appear.
pub fn check_problem(domain: &Domain, problem: &Problem) -> Result<(), PddlError> {
    for (_, ty) in &problem.objects {
        if !domain.has_type(ty) {
            return Err(PddlError::UnknownType(ty.clone()));
        }
    }
    let known = |o: &Name| object_type(domain, problem, o).is_some();
    let check_atom = |pred: &Name, args: &[Name]| -> Result<(), PddlError> {
        let decl = domain.predicate(pred.as_str()).ok_or_else(|| PddlError::UnknownPredicate(pred.clone()))?;
        if decl.params.len() != args.len() {
            return Err(PddlError::PredicateArity { name: pred.clone(), expected: decl.params.len(), got: args.len() });
        }
        match args.iter().find(|a| !known(a)) {
            Some(a) => Err(PddlError::UnknownObject(a.clone())),
            None => Ok(()),
        }
    };
    for a in &problem.init {
        check_atom(&a.predicate, &a.args)?;
    }
    let goal = expand_exists(&problem.goal, domain, problem);
    for l in goal.literals() {
        let g = l.atom.to_ground()?;
        check_atom(&g.predicate, &g.args)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_condition, parse_domain, parse_problem, CondKind};

    fn s(atoms: &[&str]) -> State {
        State::new(atoms.iter().map(|a| a.parse::<GroundAtom>().unwrap()))
    }

    const D: &str = "(define (domain t) (:requirements :strips :typing :negative-preconditions
        :disjunctive-preconditions :conditional-effects :existential-preconditions)
      (:types block widget)
      (:predicates (p) (q) (arm-empty) (clear ?x - block) (on ?x ?y - block) (shiny ?w - widget))
      (:action noop)
      (:action poke :parameters (?x - block) :precondition (exists (?w - widget) (shiny ?w)) :effect (clear ?x)))";

    fn dom() -> Domain {
        parse_domain(D).unwrap()
    }

    fn prob(d: &Domain) -> Problem {
        parse_problem("(define (problem x) (:domain t) (:objects a b - block) (:goal (p)))", d).unwrap()
    }

    fn cond(d: &Domain, p: &Problem, text: &str, kind: CondKind) -> Condition {
        parse_condition(text, kind, d, &[], &p.objects).unwrap()
    }

    #[test]
    fn holds_membership_and_closed_world() {
        let d = dom();
        let p = prob(&d);
        assert!(holds(&s(&["(arm-empty)"]), &cond(&d, &p, "(arm-empty)", CondKind::Goal)).unwrap());
        assert!(holds(&s(&[]), &cond(&d, &p, "(not (arm-empty))", CondKind::Goal)).unwrap());
        let c = cond(&d, &p, "(and (clear a) (or (on a b) (on b a)))", CondKind::Goal);
        assert!(holds(&s(&["(on a b)", "(clear a)"]), &c).unwrap());
        assert!(!holds(&s(&["(on a b)"]), &c).unwrap());
    }

    #[test]
    fn holds_rejects_free_variables() {
        let c = Condition::Literal(Literal::pos(Atom::new("clear", vec![Term::Var(Name::new("?x"))])));
        assert!(matches!(holds(&State::default(), &c), Err(PddlError::FreeVariable(_))));
    }

    #[test]
    fn apply_cases() {
        let d = dom();
        let p = prob(&d);
        let st = s(&["(p)"]);
        assert_eq!(apply(&st, &Condition::empty()).unwrap(), st);
        let w = cond(&d, &p, "(when (p) (q))", CondKind::Effect);
        assert_eq!(apply(&st, &w).unwrap(), s(&["(p)", "(q)"]));
        assert_eq!(apply(&s(&[]), &w).unwrap(), s(&[]));
        let or = Condition::Or(vec![cond(&d, &p, "(q)", CondKind::Goal)]);
        assert_eq!(apply(&st, &or).unwrap_err(), PddlError::OrInEffect);
    }

    #[test]
    fn delete_before_add() {
        let d = dom();
        let p = prob(&d);
        let e = cond(&d, &p, "(and (not (q)) (q))", CondKind::Effect);
        assert_eq!(apply(&s(&[]), &e).unwrap(), s(&["(q)"]));
        assert_eq!(apply(&s(&["(q)"]), &e).unwrap(), s(&["(q)"]));
    }

    #[test]
    fn when_reads_pre_state() {
        let d = dom();
        let p = prob(&d);
        let e = cond(&d, &p, "(and (not (p)) (when (p) (q)))", CondKind::Effect);
        assert_eq!(apply(&s(&["(p)"]), &e).unwrap(), s(&["(q)"]));
    }

    #[test]
    fn grounding() {
        let d = dom();
        let p = prob(&d);
        let noop = d.action("noop").unwrap();
        let (pre, eff) = ground(&d, noop, &[], &p).unwrap();
        assert_eq!(pre, noop.precondition);
        assert_eq!(eff, noop.effect);

        // No widgets declared: the existential is an empty disjunction.
        let poke = d.action("poke").unwrap();
        let (pre, eff) = ground(&d, poke, &[Name::new("a")], &p).unwrap();
        assert_eq!(pre, Condition::Or(vec![]));
        assert!(!holds(&State::default(), &pre).unwrap());
        assert_eq!(eff.to_string(), "(clear a)");

        assert!(matches!(ground(&d, poke, &[], &p), Err(PddlError::ActionArity { .. })));
        let p2 = parse_problem("(define (problem x) (:domain t) (:objects a - block w - widget) (:goal (p)))", &d).unwrap();
        assert!(matches!(ground(&d, poke, &[Name::new("w")], &p2), Err(PddlError::TypeMismatch { .. })));
        let (pre, _) = ground(&d, poke, &[Name::new("a")], &p2).unwrap();
        assert_eq!(pre.to_string(), "(or (shiny w))");
    }

    #[test]
    fn tuples_enumerate_product() {
        let doms = vec![vec![Name::new("a"), Name::new("b")], vec![Name::new("x"), Name::new("y"), Name::new("z")]];
        let mut n = 0;
        for_each_tuple(&doms, &mut |_| n += 1);
        assert_eq!(n, 6);
        let mut m = 0;
        for_each_tuple(&[], &mut |t| {
            assert!(t.is_empty());
            m += 1
        });
        assert_eq!(m, 1);
    }
}
