//! Trajectory rollout and the in-memory trajectory record.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ship::{self, ControlInput, ShipParams, ShipState};

#[derive(Debug, Error)]
pub enum TrajError {
    #[error("rollout diverged at step {0}")]
    Diverged(usize),
    #[error("controls must be non-empty")]
    EmptyControls,
}

/// One rolled-out (state, control) sequence. `states[k+1]` is exactly
/// `step(states[k], controls[k])`; the final control is carried for
/// completeness but drives no transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub instance_id: u64,
    pub seed: u64,
    pub dt: f64,
    pub states: Vec<ShipState>,
    pub controls: Vec<ControlInput>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Checks the structural invariants of a (possibly deserialized)
    /// trajectory: equal lengths, all values finite.
    pub fn validate(&self) -> bool {
        self.states.len() == self.controls.len()
            && !self.states.is_empty()
            && self.states.iter().all(|s| s.is_finite())
            && self.controls.iter().all(|c| c.is_finite())
            && self.dt > 0.0
    }
}

/// Deterministic forward simulation. The rollout produces exactly
/// `controls.len()` states (the initial state plus one transition per
/// control except the last).
pub fn rollout(
    params: &ShipParams,
    init: &ShipState,
    controls: &[ControlInput],
    dt: f64,
    instance_id: u64,
    seed: u64,
) -> Result<Trajectory, TrajError> {
    if controls.is_empty() {
        return Err(TrajError::EmptyControls);
    }
    let mut states = Vec::with_capacity(controls.len());
    states.push(*init);
    for k in 0..controls.len() - 1 {
        let next = ship::step_unchecked(&states[k], &controls[k], params, dt)
            .map_err(|_| TrajError::Diverged(k))?;
        if !next.is_finite() {
            return Err(TrajError::Diverged(k));
        }
        states.push(next);
    }
    Ok(Trajectory {
        instance_id,
        seed,
        dt,
        states,
        controls: controls.to_vec(),
    })
}

/// Initial-state distribution: service-speed cruise with small Gaussian
/// perturbations on the velocity states. Positions and heading start at
/// zero (the dynamics are translation-invariant, so nothing is lost).
pub fn sample_initial_state(params: &ShipParams, seed: u64) -> ShipState {
    let mut rng = crate::seed_rng(seed, "init_state");
    let mut s = ship::service_state(params);
    let draw = |rng: &mut _, std: f64| Normal::new(0.0, std).unwrap().sample(rng);
    s.u += draw(&mut rng, 0.3);
    s.v += draw(&mut rng, 0.05);
    s.p += draw(&mut rng, 0.001);
    s.r += draw(&mut rng, 0.001);
    s.phi += draw(&mut rng, 0.005);
    s.n = (s.n + draw(&mut rng, 0.03)).clamp(0.0, params.n_max);
    s
}
