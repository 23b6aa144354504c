//! Random scenario generation for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{AgentSpec, Group, NetworkConfig, RepulsionEdge, Scenario, StateSpace};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normalized<R: Rng>(rng: &mut R, len: usize, skip: Option<usize>) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len)
        .map(|k| if Some(k) == skip { 0.0 } else { rng.random_range(0.05..1.0) })
        .collect();
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|w| *w /= sum);
    row
}

fn rate_matrix<R: Rng>(rng: &mut R, m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let mut row: Vec<f64> = (0..m)
                .map(|j| if i == j { 0.0 } else { rng.random_range(0.05..2.0) })
                .collect();
            row[i] = -row.iter().sum::<f64>();
            row
        })
        .collect()
}

/// A valid scenario with `1..=max_agents` agents and `2..=max_states` states,
/// randomly partitioned into groups with random repulsion edges.
pub fn random_scenario<R: Rng>(rng: &mut R, max_agents: usize, max_states: usize) -> Scenario {
    let n = rng.random_range(1..=max_agents.max(1));
    let m = rng.random_range(2..=max_states.max(2));
    let agents: Vec<AgentSpec> = (0..n)
        .map(|k| AgentSpec {
            id: k as u32 + 1,
            rates: rate_matrix(rng, m),
            eta: rng.random_range(0.2..5.0),
            initial: normalized(rng, m, None),
        })
        .collect();

    let mut ids: Vec<u32> = agents.iter().map(|a| a.id).collect();
    ids.shuffle(rng);
    let group_count = rng.random_range(1..=n);
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); group_count];
    for (k, id) in ids.into_iter().enumerate() {
        // first pass guarantees every group is non-empty
        let g = if k < group_count { k } else { rng.random_range(0..group_count) };
        members[g].push(id);
    }
    let groups: Vec<Group> = members
        .into_iter()
        .enumerate()
        .map(|(g, members)| {
            let size = members.len();
            let adjacency = if size == 1 {
                vec![vec![0.0]]
            } else {
                (0..size).map(|i| normalized(rng, size, Some(i))).collect()
            };
            Group {
                name: format!("G{g}"),
                members,
                lambda: rng.random_range(0.0..2.0),
                adjacency,
            }
        })
        .collect();

    let mut repulsions = Vec::new();
    for target in &groups {
        for source in &groups {
            if target.name != source.name && rng.random_bool(0.5) {
                repulsions.push(RepulsionEdge {
                    target: target.name.clone(),
                    source: source.name.clone(),
                    gamma: rng.random_range(0.0..1.5),
                    adjacency: (0..target.members.len())
                        .map(|_| normalized(rng, source.members.len(), None))
                        .collect(),
                });
            }
        }
    }

    Scenario {
        states: StateSpace::new((0..m).map(|j| format!("s{}", j + 1))),
        agents,
        groups,
        repulsions,
    }
}

pub fn random_config<R: Rng>(rng: &mut R, agents: usize, states: usize) -> NetworkConfig {
    NetworkConfig::new((0..agents).map(|_| rng.random_range(0..states)).collect())
}

/// Random stacked per-agent probability vectors.
pub fn random_marginals<R: Rng>(rng: &mut R, agents: usize, states: usize) -> Vec<f64> {
    (0..agents).flat_map(|_| normalized(rng, states, None)).collect()
}
