//! Root-to-leaf paths through semantics trees and their string keys.
//!
//! A key looks like `Putdown_pre-and-(holding ?ob)`: the capitalized action
//! name, the tree kind, the connector chain from the root, and the literal.

use std::collections::BTreeSet;
use std::fmt;

use induct_pddl::{parse_condition, parse_literal, ActionSchema, CondKind, Condition, Domain, Literal, Name, TypedVar};
use serde::{Deserialize, Serialize};

use super::BeliefError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    Pre,
    Post,
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeKind::Pre => "pre",
            TreeKind::Post => "post",
        })
    }
}

impl std::str::FromStr for TreeKind {
    type Err = BeliefError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pre" => Ok(TreeKind::Pre),
            "post" => Ok(TreeKind::Post),
            _ => Err(BeliefError::Malformed(format!("unknown tree kind `{s}`"))),
        }
    }
}

/// Internal node on the way to a leaf. A `when` carries its antecedent, which
/// is part of the connector's identity rather than a belief-carrying leaf.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Connector {
    And,
    Or,
    When(Condition),
    Exists(Vec<TypedVar>),
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Connector::And => f.write_str("and"),
            Connector::Or => f.write_str("or"),
            Connector::When(c) => write!(f, "when[{c}]"),
            Connector::Exists(vars) => {
                f.write_str("exists[")?;
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{} - {}", v.name, v.ty)?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LeafPath {
    pub action: Name,
    pub kind: TreeKind,
    pub chain: Vec<Connector>,
    pub literal: Literal,
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl LeafPath {
    pub fn key(&self) -> String {
        let mut s = format!("{}_{}", capitalize(self.action.as_str()), self.kind);
        for c in &self.chain {
            s.push('-');
            s.push_str(&c.to_string());
        }
        s.push('-');
        s.push_str(&self.literal.to_string());
        s
    }

    /// Same position, opposite polarity.
    pub fn negation(&self) -> LeafPath {
        LeafPath { literal: self.literal.negate(), ..self.clone() }
    }

    /// Rebuild a path from its key. `schema` supplies parameter names for
    /// parsing `when` antecedents.
    pub fn parse(key: &str, schema: &ActionSchema, kind: TreeKind, domain: &Domain) -> Result<LeafPath, BeliefError> {
        let bad = |m: &str| BeliefError::Malformed(format!("{m} in path `{key}`"));
        let prefix = format!("{}_{}-", capitalize(schema.name.as_str()), kind);
        let mut rest = key.strip_prefix(&prefix).ok_or_else(|| bad("unexpected action/kind prefix"))?;
        let mut chain = Vec::new();
        let mut vars_in_scope = schema.params.clone();
        while !rest.starts_with('(') {
            // Read one token up to a `-` outside brackets.
            let mut depth = 0i32;
            let mut end = None;
            for (i, ch) in rest.char_indices() {
                match ch {
                    '[' => depth += 1,
                    ']' => depth -= 1,
                    '-' if depth == 0 => {
                        end = Some(i);
                        break;
                    }
                    _ => {}
                }
            }
            let end = end.ok_or_else(|| bad("missing literal"))?;
            let token = &rest[..end];
            rest = &rest[end + 1..];
            let c = match token {
                "and" => Connector::And,
                "or" => Connector::Or,
                t if t.starts_with("when[") && t.ends_with(']') => {
                    let text = &t[5..t.len() - 1];
                    Connector::When(
                        parse_condition(text, CondKind::Goal, domain, &vars_in_scope, &[])
                            .map_err(|e| bad(&e.to_string()))?,
                    )
                }
                t if t.starts_with("exists[") && t.ends_with(']') => {
                    let vars = parse_typed_vars(&t[7..t.len() - 1]).ok_or_else(|| bad("bad exists variables"))?;
                    vars_in_scope.extend(vars.iter().cloned());
                    Connector::Exists(vars)
                }
                _ => return Err(bad("unknown connector")),
            };
            chain.push(c);
        }
        let literal = parse_literal(rest).map_err(|e| bad(&e.to_string()))?;
        Ok(LeafPath { action: schema.name.clone(), kind, chain, literal })
    }
}

fn parse_typed_vars(text: &str) -> Option<Vec<TypedVar>> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut out = Vec::new();
    let mut pending = Vec::new();
    let mut i = 0;
    while i < words.len() {
        if words[i] == "-" {
            let ty = words.get(i + 1)?;
            out.extend(pending.drain(..).map(|v| TypedVar::new(v, ty)));
            i += 2;
        } else {
            pending.push(words[i]);
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|v| TypedVar::new(v, "object")));
    Some(out)
}

/// Leaves of one tree in depth-first order. The root is always read as an
/// `and` (a bare literal becomes a one-child conjunction) and directly nested
/// `and`s are flattened, so equivalent spellings get equal keys.
pub fn leaves(action: &Name, kind: TreeKind, tree: &Condition) -> Vec<LeafPath> {
    let mut out = Vec::new();
    let mut chain = vec![Connector::And];
    match tree {
        Condition::And(cs) => cs.iter().for_each(|c| walk(action, kind, c, &mut chain, &mut out)),
        other => walk(action, kind, other, &mut chain, &mut out),
    }
    out
}

fn walk(action: &Name, kind: TreeKind, c: &Condition, chain: &mut Vec<Connector>, out: &mut Vec<LeafPath>) {
    let descend = |conn: Connector, children: &[&Condition], chain: &mut Vec<Connector>, out: &mut Vec<LeafPath>| {
        chain.push(conn);
        for ch in children {
            walk(action, kind, ch, chain, out);
        }
        chain.pop();
    };
    match c {
        Condition::Literal(l) => out.push(LeafPath { action: action.clone(), kind, chain: chain.clone(), literal: l.clone() }),
        Condition::And(cs) if chain.last() == Some(&Connector::And) => cs.iter().for_each(|x| walk(action, kind, x, chain, out)),
        Condition::And(cs) => descend(Connector::And, &cs.iter().collect::<Vec<_>>(), chain, out),
        Condition::Or(cs) => descend(Connector::Or, &cs.iter().collect::<Vec<_>>(), chain, out),
        Condition::When(a, b) => match &**b {
            // The consequent's own `and` is implied by the `when`.
            Condition::And(cs) => descend(Connector::When((**a).clone()), &cs.iter().collect::<Vec<_>>(), chain, out),
            other => descend(Connector::When((**a).clone()), &[other], chain, out),
        },
        Condition::Exists(vars, body) => descend(Connector::Exists(vars.clone()), &[body], chain, out),
    }
}

pub fn schema_leaves(schema: &ActionSchema) -> Vec<LeafPath> {
    let mut out = leaves(&schema.name, TreeKind::Pre, &schema.precondition);
    out.extend(leaves(&schema.name, TreeKind::Post, &schema.effect));
    out
}

/// Path keys of every leaf of every action in `domain`.
pub fn domain_paths(domain: &Domain) -> BTreeSet<String> {
    domain.actions.iter().flat_map(schema_leaves).map(|l| l.key()).collect()
}

/// Rebuild a tree from leaves (chains all starting with the root `and`).
/// Leaves sharing a chain prefix share the internal nodes, in first-seen order.
pub fn assemble<'a>(leaves: impl IntoIterator<Item = &'a LeafPath>) -> Condition {
    #[derive(Default)]
    struct Node {
        items: Vec<Item>,
    }
    enum Item {
        Leaf(Literal),
        Child(Connector, Node),
    }
    fn insert(node: &mut Node, chain: &[Connector], lit: &Literal) {
        match chain.split_first() {
            None => node.items.push(Item::Leaf(lit.clone())),
            Some((head, rest)) => {
                let pos = node.items.iter().position(|i| matches!(i, Item::Child(c, _) if c == head));
                let idx = pos.unwrap_or_else(|| {
                    node.items.push(Item::Child(head.clone(), Node::default()));
                    node.items.len() - 1
                });
                if let Item::Child(_, child) = &mut node.items[idx] {
                    insert(child, rest, lit);
                }
            }
        }
    }
    fn build(conn: &Connector, node: Node) -> Condition {
        let children: Vec<Condition> = node
            .items
            .into_iter()
            .map(|i| match i {
                Item::Leaf(l) => Condition::Literal(l),
                Item::Child(c, n) => build(&c, n),
            })
            .collect();
        match conn {
            Connector::And => Condition::And(children),
            Connector::Or => Condition::Or(children),
            Connector::When(a) => {
                let body = if children.len() == 1 { children.into_iter().next().unwrap() } else { Condition::And(children) };
                Condition::When(Box::new(a.clone()), Box::new(body))
            }
            Connector::Exists(vars) => {
                let body = if children.len() == 1 { children.into_iter().next().unwrap() } else { Condition::And(children) };
                Condition::Exists(vars.clone(), Box::new(body))
            }
        }
    }
    let mut root = Node::default();
    for l in leaves {
        // Every chain starts with the root `and`.
        insert(&mut root, l.chain.get(1..).unwrap_or(&[]), &l.literal);
    }
    build(&Connector::And, root)
}
