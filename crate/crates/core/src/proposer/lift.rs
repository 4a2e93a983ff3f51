//! Most-specific lifting of observed atoms onto an action's parameters.
//!
//! An object lifts to the i-th parameter iff it is the i-th argument; atoms
//! mentioning any other object (domain constants aside) are dropped.

use std::collections::BTreeSet;

use induct_pddl::{ActionSchema, Atom, Domain, GroundAction, GroundAtom, Literal, Term};

use crate::envs::Observation;

/// `None` when the atom mentions an object that is neither an argument nor a constant.
pub fn lift_atom(atom: &GroundAtom, action: &GroundAction, schema: &ActionSchema, domain: &Domain) -> Option<Atom> {
    let mut args = Vec::with_capacity(atom.args.len());
    for o in &atom.args {
        if let Some(i) = action.args.iter().position(|a| a == o) {
            args.push(Term::Var(schema.params[i].name.clone()));
        } else if domain.constants.iter().any(|(c, _)| c == o) {
            args.push(Term::Const(o.clone()));
        } else {
            return None;
        }
    }
    Some(Atom { predicate: atom.predicate.clone(), args })
}

/// Lifting is ambiguous when an object fills two parameters.
pub fn has_duplicate_args(action: &GroundAction) -> bool {
    let set: BTreeSet<_> = action.args.iter().collect();
    set.len() != action.args.len()
}

/// Positive literals for every liftable atom of the state.
pub fn lifted_state(obs: &Observation, action: &GroundAction, schema: &ActionSchema, domain: &Domain) -> BTreeSet<Literal> {
    obs.atoms.iter().filter_map(|a| lift_atom(a, action, schema, domain)).map(Literal::pos).collect()
}

/// Added atoms as positive literals, deleted ones as negative. Atoms about
/// objects unknown before the step (newly revealed) are ignored.
pub fn lifted_delta(
    pre: &Observation,
    post: &Observation,
    action: &GroundAction,
    schema: &ActionSchema,
    domain: &Domain,
) -> BTreeSet<Literal> {
    let known = |a: &&GroundAtom| a.args.iter().all(|o| pre.knows(o) || domain.constants.iter().any(|(c, _)| c == o));
    let added = post.atoms.difference(&pre.atoms).filter(known);
    let deleted = pre.atoms.difference(&post.atoms).filter(known);
    let mut out = BTreeSet::new();
    for a in added {
        if let Some(l) = lift_atom(a, action, schema, domain) {
            out.insert(Literal::pos(l));
        }
    }
    for a in deleted {
        if let Some(l) = lift_atom(a, action, schema, domain) {
            out.insert(Literal::neg(l));
        }
    }
    out
}
