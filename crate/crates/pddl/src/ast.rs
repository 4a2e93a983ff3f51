//! Syntax tree for the supported PDDL fragment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::PddlError;
use crate::name::Name;

pub const OBJECT: &str = "object";

/// Requirement flags accepted by the parser. Anything else is rejected.
pub const SUPPORTED_REQUIREMENTS: &[&str] = &[
    "strips",
    "typing",
    "negative-preconditions",
    "disjunctive-preconditions",
    "conditional-effects",
    "existential-preconditions",
];

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// A `?`-prefixed variable, bound by action parameters or an `exists`.
    Var(Name),
    Const(Name),
}

impl Term {
    pub fn name(&self) -> &Name {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedVar {
    pub name: Name,
    pub ty: Name,
}

impl TypedVar {
    pub fn new(name: &str, ty: &str) -> Self {
        TypedVar { name: Name::new(name), ty: Name::new(ty) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom { predicate: Name::new(predicate), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn to_ground(&self) -> Result<GroundAtom, PddlError> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Const(n) => Ok(n.clone()),
                Term::Var(v) => Err(PddlError::FreeVariable(v.clone())),
            })
            .collect::<Result<_, _>>()?;
        Ok(GroundAtom { predicate: self.predicate.clone(), args })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, negated: false }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, negated: true }
    }

    /// The sibling statement with opposite polarity.
    pub fn negate(&self) -> Literal {
        Literal { atom: self.atom.clone(), negated: !self.negated }
    }
}

/// Condition tree shared by preconditions, goals and effects.
///
/// `When` is only legal in effects and `Exists`/`Or` only in goals and
/// preconditions; the parser enforces placement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    Literal(Literal),
    And(Vec<Condition>),
    Or(Vec<Condition>),
    When(Box<Condition>, Box<Condition>),
    Exists(Vec<TypedVar>, Box<Condition>),
}

impl Condition {
    pub fn empty() -> Self {
        Condition::And(Vec::new())
    }

    pub fn lit(l: Literal) -> Self {
        Condition::Literal(l)
    }

    pub fn is_empty_and(&self) -> bool {
        matches!(self, Condition::And(c) if c.is_empty())
    }

    /// Top-level conjuncts: the children of a root `and`, or the condition itself.
    pub fn conjuncts(&self) -> Vec<&Condition> {
        match self {
            Condition::And(cs) => cs.iter().collect(),
            other => vec![other],
        }
    }

    /// Every literal in the tree, in depth-first order.
    pub fn literals(&self) -> Vec<&Literal> {
        let mut out = Vec::new();
        self.walk_literals(&mut out);
        out
    }

    fn walk_literals<'a>(&'a self, out: &mut Vec<&'a Literal>) {
        match self {
            Condition::Literal(l) => out.push(l),
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.walk_literals(out)),
            Condition::When(a, b) => {
                a.walk_literals(out);
                b.walk_literals(out);
            }
            Condition::Exists(_, b) => b.walk_literals(out),
        }
    }

    /// Replace variables according to `bind`; unbound variables are left alone.
    pub fn substitute(&self, bind: &BTreeMap<Name, Term>) -> Condition {
        let sub_atom = |a: &Atom| Atom {
            predicate: a.predicate.clone(),
            args: a
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => bind.get(v).cloned().unwrap_or_else(|| t.clone()),
                    c => c.clone(),
                })
                .collect(),
        };
        match self {
            Condition::Literal(l) => Condition::Literal(Literal { atom: sub_atom(&l.atom), negated: l.negated }),
            Condition::And(cs) => Condition::And(cs.iter().map(|c| c.substitute(bind)).collect()),
            Condition::Or(cs) => Condition::Or(cs.iter().map(|c| c.substitute(bind)).collect()),
            Condition::When(a, b) => Condition::When(Box::new(a.substitute(bind)), Box::new(b.substitute(bind))),
            Condition::Exists(vars, body) => {
                // Shadowed variables stay bound by the quantifier.
                let mut inner = bind.clone();
                for v in vars {
                    inner.remove(&v.name);
                }
                Condition::Exists(vars.clone(), Box::new(body.substitute(&inner)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: Name,
    pub params: Vec<TypedVar>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: Name,
    pub params: Vec<TypedVar>,
    pub precondition: Condition,
    pub effect: Condition,
}

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Same signature, empty semantics.
    pub fn signature(&self) -> ActionSchema {
        ActionSchema {
            name: self.name.clone(),
            params: self.params.clone(),
            precondition: Condition::empty(),
            effect: Condition::empty(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub name: Name,
    pub requirements: Vec<Name>,
    /// child type -> parent type; every chain ends at `object`.
    pub types: BTreeMap<Name, Name>,
    pub constants: Vec<(Name, Name)>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    /// True if `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &Name, ancestor: &Name) -> bool {
        if ancestor.as_str() == OBJECT || ty == ancestor {
            return true;
        }
        let mut cur = ty;
        let mut guard = 0;
        while let Some(parent) = self.types.get(cur) {
            if parent == ancestor {
                return true;
            }
            cur = parent;
            guard += 1;
            if guard > self.types.len() {
                break;
            }
        }
        false
    }

    pub fn has_type(&self, ty: &Name) -> bool {
        ty.as_str() == OBJECT || self.types.contains_key(ty)
    }

    /// Copy of the domain with every action's semantics emptied.
    pub fn skeleton(&self) -> Domain {
        Domain { actions: self.actions.iter().map(ActionSchema::signature).collect(), ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Problem {
    pub name: Name,
    pub domain_name: Name,
    pub objects: Vec<(Name, Name)>,
    pub init: BTreeSet<GroundAtom>,
    pub goal: Condition,
}

impl Problem {
    pub fn object_type(&self, obj: &Name) -> Option<&Name> {
        self.objects.iter().find(|(o, _)| o == obj).map(|(_, t)| t)
    }

    pub fn initial_state(&self) -> State {
        State::new(self.init.iter().cloned())
    }
}

/// Variable-free atom, the unit of a [`State`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: Name,
    pub args: Vec<Name>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        GroundAtom { predicate: Name::new(predicate), args: args.iter().map(|a| Name::new(a)).collect() }
    }

    pub fn to_atom(&self) -> Atom {
        Atom { predicate: self.predicate.clone(), args: self.args.iter().cloned().map(Term::Const).collect() }
    }

    pub fn mentions(&self, obj: &Name) -> bool {
        self.args.contains(obj)
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for GroundAtom {
    type Err = PddlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::parse::parse_ground_atom(s)
    }
}

impl Serialize for GroundAtom {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroundAtom {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Closed-world set of true ground atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(pub BTreeSet<GroundAtom>);

impl State {
    pub fn new(atoms: impl IntoIterator<Item = GroundAtom>) -> Self {
        State(atoms.into_iter().collect())
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn atoms(&self) -> impl Iterator<Item = &GroundAtom> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An action name applied to concrete objects, e.g. `(unstack orange green)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAction {
    pub name: Name,
    pub args: Vec<Name>,
}

impl GroundAction {
    pub fn new(name: &str, args: &[&str]) -> Self {
        GroundAction { name: Name::new(name), args: args.iter().map(|a| Name::new(a)).collect() }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for GroundAction {
    type Err = PddlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::parse::parse_ground_action(s)
    }
}

impl Serialize for GroundAction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroundAction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
