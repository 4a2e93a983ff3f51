//! Grounded, bitset-backed form of a planning task used by the search.

use std::collections::{BTreeSet, HashMap};

use crate::ast::*;
use crate::error::PddlError;
use crate::name::Name;
use crate::semantics::{all_ground_actions, expand_exists, ground};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub(crate) struct Bits(pub Box<[u64]>);

impl Bits {
    fn zeros(n: usize) -> Self {
        Bits(vec![0u64; n.div_ceil(64).max(1)].into_boxed_slice())
    }

    #[inline]
    pub fn get(&self, i: u32) -> bool {
        self.0[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: u32, v: bool) {
        let w = &mut self.0[(i / 64) as usize];
        if v {
            *w |= 1 << (i % 64);
        } else {
            *w &= !(1 << (i % 64));
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum GCond {
    True,
    False,
    Atom(u32, bool),
    And(Vec<GCond>),
    Or(Vec<GCond>),
}

impl GCond {
    pub fn eval(&self, s: &Bits) -> bool {
        match self {
            GCond::True => true,
            GCond::False => false,
            GCond::Atom(i, neg) => s.get(*i) != *neg,
            GCond::And(cs) => cs.iter().all(|c| c.eval(s)),
            GCond::Or(cs) => cs.iter().any(|c| c.eval(s)),
        }
    }
}

#[derive(Debug)]
struct CondEffect {
    cond: GCond,
    add: Vec<u32>,
    del: Vec<u32>,
}

#[derive(Debug)]
pub(crate) struct Op {
    pub action: GroundAction,
    pub pre: GCond,
    effects: Vec<CondEffect>,
}

impl Op {
    /// Delete-then-add successor; every condition reads the pre-state.
    pub fn apply(&self, s: &Bits) -> Bits {
        let mut next = s.clone();
        let fired: Vec<&CondEffect> = self.effects.iter().filter(|e| e.cond.eval(s)).collect();
        for e in &fired {
            for &d in &e.del {
                next.set(d, false);
            }
        }
        for e in &fired {
            for &a in &e.add {
                next.set(a, true);
            }
        }
        next
    }
}

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct Compiled {
    pub atoms: Vec<GroundAtom>,
    pub ops: Vec<Op>,
    pub init: Bits,
    pub goal: Vec<GCond>,
    statics: Vec<GroundAtom>,
}

impl Compiled {
    pub fn satisfied(&self, s: &Bits) -> usize {
        self.goal.iter().filter(|g| g.eval(s)).count()
    }

    #[cfg(test)]
    pub fn decode(&self, s: &Bits) -> State {
        let fluent = self.atoms.iter().enumerate().filter(|(i, _)| s.get(*i as u32)).map(|(_, a)| a.clone());
        State::new(fluent.chain(self.statics.iter().cloned()))
    }
}

struct Interner {
    atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, u32>,
}

impl Interner {
    fn id(&mut self, a: GroundAtom) -> u32 {
        if let Some(&i) = self.index.get(&a) {
            return i;
        }
        let i = self.atoms.len() as u32;
        self.index.insert(a.clone(), i);
        self.atoms.push(a);
        i
    }
}

/// Predicates that some effect can change.
fn fluent_predicates(domain: &Domain) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    for a in &domain.actions {
        for l in a.effect.literals() {
            out.insert(l.atom.predicate.clone());
        }
    }
    out
}

/// Ground condition with static atoms folded to constants.
fn compile_cond(
    c: &Condition,
    interner: &mut Interner,
    fluents: &BTreeSet<Name>,
    init: &BTreeSet<GroundAtom>,
) -> Result<GCond, PddlError> {
    Ok(match c {
        Condition::Literal(l) => {
            let g = l.atom.to_ground()?;
            if fluents.contains(&g.predicate) {
                GCond::Atom(interner.id(g), l.negated)
            } else if init.contains(&g) != l.negated {
                GCond::True
            } else {
                GCond::False
            }
        }
        Condition::And(cs) => {
            let mut out = Vec::new();
            for c in cs {
                match compile_cond(c, interner, fluents, init)? {
                    GCond::True => {}
                    GCond::False => return Ok(GCond::False),
                    g => out.push(g),
                }
            }
            match out.len() {
                0 => GCond::True,
                1 => out.pop().unwrap(),
                _ => GCond::And(out),
            }
        }
        Condition::Or(cs) => {
            let mut out = Vec::new();
            for c in cs {
                match compile_cond(c, interner, fluents, init)? {
                    GCond::True => return Ok(GCond::True),
                    GCond::False => {}
                    g => out.push(g),
                }
            }
            match out.len() {
                0 => GCond::False,
                1 => out.pop().unwrap(),
                _ => GCond::Or(out),
            }
        }
        Condition::When(..) => return Err(PddlError::IllFormed("`when` inside a condition".into())),
        Condition::Exists(..) => return Err(PddlError::IllFormed("unexpanded `exists`".into())),
    })
}

fn compile_effect(
    e: &Condition,
    guard: GCond,
    interner: &mut Interner,
    fluents: &BTreeSet<Name>,
    init: &BTreeSet<GroundAtom>,
    out: &mut Vec<CondEffect>,
) -> Result<(), PddlError> {
    let mut plain = CondEffect { cond: guard.clone(), add: Vec::new(), del: Vec::new() };
    let mut stack = vec![e];
    while let Some(c) = stack.pop() {
        match c {
            Condition::Literal(l) => {
                let id = interner.id(l.atom.to_ground()?);
                if l.negated {
                    plain.del.push(id);
                } else {
                    plain.add.push(id);
                }
            }
            Condition::And(cs) => stack.extend(cs.iter().rev()),
            Condition::When(ante, cons) => {
                let a = compile_cond(ante, interner, fluents, init)?;
                if matches!(a, GCond::False) {
                    continue;
                }
                let g = match (&guard, a) {
                    (GCond::True, a) => a,
                    (g, a) => GCond::And(vec![g.clone(), a]),
                };
                compile_effect(cons, g, interner, fluents, init, out)?;
            }
            Condition::Or(_) => return Err(PddlError::OrInEffect),
            Condition::Exists(..) => return Err(PddlError::IllFormed("`exists` inside an effect".into())),
        }
    }
    if !plain.add.is_empty() || !plain.del.is_empty() {
        out.push(plain);
    }
    Ok(())
}

pub(crate) fn compile(domain: &Domain, problem: &Problem) -> Result<Compiled, PddlError> {
    let fluents = fluent_predicates(domain);
    let mut interner = Interner { atoms: Vec::new(), index: HashMap::new() };
    for a in &problem.init {
        if fluents.contains(&a.predicate) {
            interner.id(a.clone());
        }
    }
    let mut ops = Vec::new();
    let mut actions = all_ground_actions(domain, problem);
    actions.sort();
    for action in actions {
        let schema = domain.action(action.name.as_str()).expect("enumerated from the domain");
        let (pre, eff) = ground(domain, schema, &action.args, problem)?;
        let pre = compile_cond(&pre, &mut interner, &fluents, &problem.init)?;
        if matches!(pre, GCond::False) {
            continue;
        }
        let mut effects = Vec::new();
        compile_effect(&eff, GCond::True, &mut interner, &fluents, &problem.init, &mut effects)?;
        ops.push(Op { action, pre, effects });
    }
    let goal_cond = expand_exists(&problem.goal, domain, problem);
    let goal = goal_cond
        .conjuncts()
        .into_iter()
        .map(|c| compile_cond(c, &mut interner, &fluents, &problem.init))
        .collect::<Result<Vec<_>, _>>()?;
    let mut init = Bits::zeros(interner.atoms.len());
    for a in &problem.init {
        if let Some(&i) = interner.index.get(a) {
            init.set(i, true);
        }
    }
    let statics = problem.init.iter().filter(|a| !fluents.contains(&a.predicate)).cloned().collect();
    Ok(Compiled { atoms: interner.atoms, ops, init, goal, statics })
}
