//! Tree-structured belief memory over candidate action semantics.

mod memory;
mod paths;

use std::collections::BTreeMap;

use induct_pddl::{Condition, Domain, Name};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use memory::{BeliefMemory, Leaf};
pub use paths::{assemble, domain_paths, leaves, schema_leaves, Connector, LeafPath, TreeKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("invalid belief configuration: {0}")]
    InvalidConfig(String),
    #[error("proposed semantics for unknown action `{0}`")]
    UnknownAction(Name),
    #[error("ill-formed proposed tree for `{action}`: {msg}")]
    IllFormed { action: Name, msg: String },
    #[error("malformed memory record: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeliefConfig {
    /// Contradiction penalty applied when the opposite literal is predicted.
    pub alpha: f64,
    /// Forgetting factor on the previous belief.
    pub beta: f64,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        BeliefConfig { alpha: 0.7, beta: 0.8 }
    }
}

impl BeliefConfig {
    pub fn validate(&self) -> Result<(), BeliefError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(BeliefError::InvalidConfig(format!("alpha must be in [0,1], got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(BeliefError::InvalidConfig(format!("beta must be in [0,1), got {}", self.beta)));
        }
        Ok(())
    }
}

pub fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// One step of the belief rule for a single statement.
///
/// A zero prior (including a never-seen statement) restarts from the
/// indicators; otherwise the prior decays by `beta` towards the evidence.
pub fn update_belief(prior: f64, predicted: bool, negation_predicted: bool, cfg: &BeliefConfig) -> f64 {
    let pos = if predicted { 1.0 } else { 0.0 };
    let neg = if negation_predicted { 1.0 } else { 0.0 };
    if prior == 0.0 {
        clamp01(pos - cfg.alpha * neg)
    } else {
        clamp01(cfg.beta * prior + (1.0 - cfg.beta) * pos - cfg.alpha * (1.0 - cfg.beta) * neg)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSemantics {
    pub pre: Condition,
    pub post: Condition,
}

/// Predicted pre/post trees per action, without beliefs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProposedSemantics {
    pub actions: BTreeMap<Name, ActionSemantics>,
    /// Fragments the parser rejected, kept for the trace.
    pub dropped: Vec<String>,
}

impl ProposedSemantics {
    /// The semantics written in a domain, e.g. a ground-truth one.
    pub fn from_domain(d: &Domain) -> Self {
        let actions = d
            .actions
            .iter()
            .map(|a| (a.name.clone(), ActionSemantics { pre: a.precondition.clone(), post: a.effect.clone() }))
            .collect();
        ProposedSemantics { actions, dropped: Vec::new() }
    }

    pub fn leaves(&self) -> Vec<LeafPath> {
        let mut out = Vec::new();
        for (name, s) in &self.actions {
            out.extend(leaves(name, TreeKind::Pre, &s.pre));
            out.extend(leaves(name, TreeKind::Post, &s.post));
        }
        out
    }

    pub fn paths(&self) -> std::collections::BTreeSet<String> {
        self.leaves().iter().map(|l| l.key()).collect()
    }

    /// Structural checks: known actions, `when` only in effects, no `or` or
    /// `exists` in effects, no empty connectors below the root.
    pub fn validate(&self, skeleton: &Domain) -> Result<(), BeliefError> {
        for (name, s) in &self.actions {
            if skeleton.action(name.as_str()).is_none() {
                return Err(BeliefError::UnknownAction(name.clone()));
            }
            let ill = |msg: &str| BeliefError::IllFormed { action: name.clone(), msg: msg.into() };
            check_tree(&s.pre, false, true).map_err(ill)?;
            check_tree(&s.post, true, true).map_err(ill)?;
        }
        Ok(())
    }
}

fn check_tree(c: &Condition, effect: bool, root: bool) -> Result<(), &'static str> {
    match c {
        Condition::Literal(_) => Ok(()),
        Condition::And(cs) if cs.is_empty() && !root => Err("empty `and` below the root"),
        Condition::Or(cs) if cs.is_empty() => Err("empty `or`"),
        Condition::Or(_) if effect => Err("`or` in an effect"),
        Condition::Exists(..) if effect => Err("`exists` in an effect"),
        Condition::When(..) if !effect => Err("`when` in a precondition"),
        Condition::And(cs) | Condition::Or(cs) => cs.iter().try_for_each(|x| check_tree(x, effect, false)),
        Condition::When(a, b) => {
            check_tree(a, false, false)?;
            if matches!(**b, Condition::When(..)) {
                return Err("nested `when`");
            }
            check_tree(b, effect, false)
        }
        Condition::Exists(_, b) => check_tree(b, effect, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent restatement of the rule used as the oracle.
    fn oracle(p: f64, phi: bool, not_phi: bool) -> f64 {
        let (a, b) = (0.7, 0.8);
        let i = |x: bool| x as u8 as f64;
        let raw = if p == 0.0 { i(phi) - a * i(not_phi) } else { b * p + (1.0 - b) * i(phi) - a * (1.0 - b) * i(not_phi) };
        raw.max(0.0).min(1.0)
    }

    #[test]
    fn rule_values() {
        let cfg = BeliefConfig::default();
        for (p, phi, neg, want) in [
            (0.0, true, false, 1.0),
            (0.0, true, true, 0.3),
            (0.5, true, false, 0.6),
            (0.5, false, false, 0.4),
            (0.5, false, true, 0.26),
        ] {
            let got = update_belief(p, phi, neg, &cfg);
            assert!((got - want).abs() < 1e-12, "{p} {phi} {neg}: {got}");
            assert!((got - oracle(p, phi, neg)).abs() < 1e-12);
        }
    }

    #[test]
    fn config_bounds() {
        assert!(BeliefConfig { alpha: 1.5, beta: 0.5 }.validate().is_err());
        assert!(BeliefConfig { alpha: 0.5, beta: 1.0 }.validate().is_err());
        assert!(BeliefConfig::default().validate().is_ok());
    }
}
