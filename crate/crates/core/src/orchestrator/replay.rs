//! Re-executing a recorded trace against a fresh environment.

use thiserror::Error;

use super::{RunSpec, RunTrace, TraceError, TraceEvent};
use crate::envs::{Env, EnvError};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("trace header does not hold a run configuration: {0}")]
    Header(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("divergence at step {nes}: {detail}")]
    Divergence { nes: usize, detail: String },
}

/// Replays every reset and step; returns the number of steps checked. Model
/// responses are never requested again: the recorded actions are the decisions.
pub fn replay(trace: &RunTrace) -> Result<usize, ReplayError> {
    let (_, config) = trace.header().ok_or(TraceError::MissingHeader)?;
    let spec: RunSpec = serde_json::from_value(config.clone()).map_err(|e| ReplayError::Header(e.to_string()))?;
    let mut env = Env::new(spec.env)?;
    let mut steps = 0;
    for e in &trace.events {
        match e {
            TraceEvent::Reset { observation, .. } => {
                let got = env.reset();
                if &got != observation {
                    return Err(ReplayError::Divergence { nes: steps, detail: "observation after reset differs".into() });
                }
            }
            TraceEvent::Step { nes, action, status, observation, goal_reached, .. } => {
                steps += 1;
                let fb = env.step(action).map_err(|e| ReplayError::Divergence { nes: *nes, detail: e.to_string() })?;
                if fb.status != *status {
                    return Err(ReplayError::Divergence {
                        nes: *nes,
                        detail: format!("{action}: status {:?}, recorded {:?}", fb.status, status),
                    });
                }
                if &fb.observation != observation || fb.goal_reached != *goal_reached {
                    return Err(ReplayError::Divergence { nes: *nes, detail: format!("{action}: observation differs") });
                }
            }
            _ => {}
        }
    }
    Ok(steps)
}
