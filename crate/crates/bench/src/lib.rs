//! Fixtures shared by the benchmarks.

use opinion_core::random::{random_scenario, seeded};
use opinion_core::{Model, Scenario};

/// A random scenario with exactly `agents` agents and `states` states.
pub fn sized_scenario(agents: usize, states: usize, seed: u64) -> Scenario {
    let mut rng = seeded(seed);
    loop {
        let s = random_scenario(&mut rng, agents, states);
        if s.agents.len() == agents && s.states.len() == states {
            return s;
        }
    }
}

pub fn sized_model(agents: usize, states: usize) -> Model {
    Model::new(sized_scenario(agents, states, agents as u64 * 31 + states as u64)).expect("random scenarios validate")
}
