//! Shared fixtures for the criterion benchmarks.

use edgemoe_core::env::{Action, StateVector, Transition};
use edgemoe_core::harness::{build_env, RunConfig};
use edgemoe_core::sac::{ReplayBuffer, SacAgent};
use edgemoe_core::seeded_rng;

/// A default-sized agent and a buffer filled with one batch worth of real transitions.
pub fn filled_agent(config: &RunConfig) -> (SacAgent, ReplayBuffer) {
    let mut env = build_env(config).expect("valid config");
    let agent = SacAgent::new(env.state_dim(), env.num_devices(), config.sac.clone(), &mut seeded_rng(0, 1))
        .expect("valid sac config");
    let mut buffer = ReplayBuffer::new(config.sac.buffer_capacity);
    let mut rng = seeded_rng(0, 2);
    while buffer.len() < config.sac.batch_size {
        let state = env.reset(&mut rng);
        let action = Action(buffer.len() % env.num_devices());
        let out = env.step(action, &mut rng).expect("valid action");
        buffer.push(Transition {
            state,
            action,
            reward: out.breakdown.reward,
            next_state: out.next_state,
            done: out.done,
        });
    }
    (agent, buffer)
}

pub fn sample_state(config: &RunConfig) -> StateVector {
    let mut env = build_env(config).expect("valid config");
    env.reset(&mut seeded_rng(0, 3))
}
