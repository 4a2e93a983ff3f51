//! Symbolic look-ahead that repairs the first actions of a trajectory.

use induct_pddl::semantics::all_ground_actions;
use induct_pddl::{successor, Domain, GroundAction, Problem, State};
use rand::Rng;

/// No applicable action exists (or was found) for the first position.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no action applicable in the initial state under the sampled domain")]
pub struct ProspectionFailed;

fn step(state: &State, a: &GroundAction, domain: &Domain, problem: &Problem) -> Option<State> {
    successor(state, a, domain, problem).ok().flatten()
}

/// Make the first `min(k, len)` actions applicable in sequence under `domain`
/// from the problem's init. Invalid actions are replaced by random applicable
/// ones (`attempts` draws per position); position 0 falls back to a full scan,
/// later positions truncate. A valid prefix is returned untouched.
pub fn prospect<R: Rng + ?Sized>(
    trajectory: &[GroundAction],
    domain: &Domain,
    problem: &Problem,
    k: usize,
    attempts: usize,
    rng: &mut R,
) -> Result<Vec<GroundAction>, ProspectionFailed> {
    let mut out = trajectory.to_vec();
    let mut state = problem.initial_state();
    let mut pool: Option<Vec<GroundAction>> = None;
    let mut pos = 0;
    while pos < k.min(out.len()) {
        if let Some(next) = step(&state, &out[pos], domain, problem) {
            state = next;
            pos += 1;
            continue;
        }
        let pool = pool.get_or_insert_with(|| {
            let mut p = all_ground_actions(domain, problem);
            p.sort();
            p
        });
        let mut found = None;
        if !pool.is_empty() {
            for _ in 0..attempts {
                let c = &pool[rng.random_range(0..pool.len())];
                if let Some(next) = step(&state, c, domain, problem) {
                    found = Some((c.clone(), next));
                    break;
                }
            }
        }
        if found.is_none() && pos == 0 {
            found = pool.iter().find_map(|c| step(&state, c, domain, problem).map(|n| (c.clone(), n)));
        }
        match found {
            Some((a, next)) => {
                out[pos] = a;
                state = next;
                pos += 1;
            }
            None if pos == 0 => return Err(ProspectionFailed),
            None => {
                out.truncate(pos);
                break;
            }
        }
    }
    Ok(out)
}
