//! Per-step consistency check between a believed action model and what was observed.

use std::collections::BTreeSet;

use induct_pddl::{successor, Condition, Domain, GroundAction, GroundAtom};
use serde::{Deserialize, Serialize};

use super::{EnvError, Observation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepCheck {
    Consistent,
    Mismatch {
        /// Predicted but not observed.
        missing: Vec<GroundAtom>,
        /// Observed but not predicted.
        unexpected: Vec<GroundAtom>,
    },
}

impl StepCheck {
    pub fn is_consistent(&self) -> bool {
        matches!(self, StepCheck::Consistent)
    }
}

/// Predict `post` from `pre` under `believed` and compare. Only atoms whose
/// objects were all known before the step take part, so newly revealed
/// territory is never reported as a mismatch.
pub fn stepwise_check(
    pre: &Observation,
    action: &GroundAction,
    post: &Observation,
    believed: &Domain,
) -> Result<StepCheck, EnvError> {
    let problem = pre.to_problem("stepwise", believed, Condition::empty());
    let malformed = |source| EnvError::MalformedAction { action: action.to_string(), source };
    let predicted = successor(&pre.state(), action, believed, &problem).map_err(malformed)?.unwrap_or_else(|| pre.state());
    let known = |a: &&GroundAtom| a.args.iter().all(|o| pre.knows(o) || believed.constants.iter().any(|(c, _)| c == o));
    let expected: BTreeSet<&GroundAtom> = predicted.atoms().filter(known).collect();
    let observed: BTreeSet<&GroundAtom> = post.atoms.iter().filter(known).collect();
    if expected == observed {
        return Ok(StepCheck::Consistent);
    }
    Ok(StepCheck::Mismatch {
        missing: expected.difference(&observed).map(|a| (*a).clone()).collect(),
        unexpected: observed.difference(&expected).map(|a| (*a).clone()).collect(),
    })
}
