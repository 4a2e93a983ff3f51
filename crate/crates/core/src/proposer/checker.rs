//! Problem-file repair by set difference against accumulated observations.

use std::collections::BTreeSet;

use induct_pddl::Name;

use super::{ProblemChecker, ProblemEdit, ProposerContext, ProposerError};
use crate::envs::Observation;

/// Adds objects seen in observations but missing from the problem, with the
/// atoms about them from the first observation that revealed them. Used by
/// both the oracle and heuristic roles.
#[derive(Debug, Default)]
pub struct SetDifferenceChecker;

/// Observations in the order they were made.
fn chronological(ctx: &ProposerContext) -> Vec<&Observation> {
    if ctx.history.is_empty() {
        return ctx.observations.iter().collect();
    }
    let mut out = vec![&ctx.history[0].pre];
    out.extend(ctx.history.iter().map(|t| &t.post));
    out
}

impl ProblemChecker for SetDifferenceChecker {
    fn check_problem(&mut self, ctx: &ProposerContext) -> Result<Option<ProblemEdit>, ProposerError> {
        let declared: BTreeSet<&Name> = ctx.problem.objects.iter().map(|(o, _)| o).collect();
        let mut edit = ProblemEdit::default();
        let mut covered: BTreeSet<Name> = BTreeSet::new();
        for obs in chronological(ctx) {
            let fresh: BTreeSet<Name> = obs
                .objects
                .iter()
                .filter(|(o, _)| !declared.contains(o) && !covered.contains(o))
                .map(|(o, t)| {
                    edit.objects_to_add.push((o.clone(), t.clone()));
                    o.clone()
                })
                .collect();
            if fresh.is_empty() {
                continue;
            }
            for a in &obs.atoms {
                if a.args.iter().any(|o| fresh.contains(o)) && !a.args.iter().any(|o| covered.contains(o)) {
                    edit.atoms_to_add.push(a.clone());
                }
            }
            covered.extend(fresh);
        }
        Ok(if edit.is_empty() { None } else { Some(edit) })
    }
}
