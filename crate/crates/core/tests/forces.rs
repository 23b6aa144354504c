use opinion_core::intersection::{intersection_example, GO, YIELD};
use opinion_core::random::{random_config, random_scenario, seeded};
use opinion_core::scenario::{NetworkConfig, Scenario};
use opinion_core::Model;
use proptest::prelude::*;

fn intersection() -> Model {
    Model::new(intersection_example()).unwrap()
}

#[test]
fn cyclist_pair_substitution() {
    // C1 = {1, 2}, lambda 0.5, eta(1) = 10; agent 2 in Go
    let model = intersection();
    let config = NetworkConfig::new(vec![YIELD, GO, 0, 0, 0, 0, 0]);
    assert_eq!(model.attractive_force(1, GO, &config).unwrap(), 5.0);
    assert_eq!(model.attractive_force(1, YIELD, &config).unwrap(), 0.0);
}

#[test]
fn driver_attraction_and_repulsion() {
    let model = intersection();
    // drivers 4 and 5 yield, every cyclist goes
    let config = NetworkConfig::new(vec![GO, GO, GO, YIELD, YIELD, GO, GO]);
    let psi = model.attractive_force(3, YIELD, &config).unwrap();
    assert!((psi - 5.0).abs() < 1e-12);
    let per_source = model.repulsive_force_by_source(3, YIELD, &config).unwrap();
    assert_eq!(per_source.len(), 2);
    for xi in &per_source {
        assert!((xi - 15.0).abs() < 1e-12);
    }
    assert!((model.repulsive_force(3, YIELD, &config).unwrap() - 30.0).abs() < 1e-12);
    assert_eq!(model.repulsive_force(3, GO, &config).unwrap(), 0.0);

    // driver 3 currently in Go: total rate toward Yield
    let base = model.scenario().agents[2].rates[GO][YIELD];
    let rate = model.modulated_rate(3, YIELD, &config).unwrap();
    assert!((rate - (base + psi + 30.0)).abs() < 1e-12);
}

#[test]
fn repulsion_vanishes_when_sources_share_the_state() {
    let model = intersection();
    let config = NetworkConfig::new(vec![YIELD, YIELD, GO, GO, GO, YIELD, YIELD]);
    for (_, xi) in (0..2).map(|e| (e, model.repulsive_force_by_source(4, YIELD, &config).unwrap())) {
        assert!(xi.iter().all(|&v| v == 0.0));
    }
}

fn unanimous(scenario: &Scenario, state: usize) -> NetworkConfig {
    NetworkConfig::new(vec![state; scenario.agents.len()])
}

#[test]
fn unanimous_group_gives_full_attraction() {
    let scenario = intersection_example();
    let model = Model::new(scenario.clone()).unwrap();
    let config = unanimous(&scenario, GO);
    for (agent, lambda) in [(1u32, 0.5), (3, 0.05), (7, 0.5)] {
        let eta = scenario.agents[(agent - 1) as usize].eta;
        let psi = model.attractive_force(agent, GO, &config).unwrap();
        assert!((psi - eta * lambda).abs() < 1e-12);
    }
}

fn permuted(scenario: &Scenario, group: usize, perm: &[usize]) -> Scenario {
    let mut out = scenario.clone();
    let g = &scenario.groups[group];
    let name = g.name.clone();
    let adj = &g.adjacency;
    out.groups[group].members = perm.iter().map(|&k| g.members[k]).collect();
    out.groups[group].adjacency = perm
        .iter()
        .map(|&i| perm.iter().map(|&j| adj[i][j]).collect())
        .collect();
    for (e, edge) in scenario.repulsions.iter().enumerate() {
        if edge.target == name {
            out.repulsions[e].adjacency = perm.iter().map(|&i| edge.adjacency[i].clone()).collect();
        }
        if edge.source == name {
            out.repulsions[e].adjacency = out.repulsions[e]
                .adjacency
                .iter()
                .map(|row| perm.iter().map(|&j| row[j]).collect())
                .collect();
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn force_sums_over_states(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let scenario = random_scenario(&mut rng, 6, 4);
        let model = Model::new(scenario.clone()).unwrap();
        let n = model.num_agents();
        let m = model.num_states();
        let config = random_config(&mut rng, n, m);
        for r in 0..n {
            let id = model.agent_id(r);
            let psi_sum: f64 = (0..m).map(|j| model.attractive_force(id, j, &config).unwrap()).sum();
            let group = scenario.groups.iter().find(|g| g.members.contains(&id)).unwrap();
            let expected = if group.members.len() > 1 { model.eta(r) * group.lambda } else { 0.0 };
            prop_assert!((psi_sum - expected).abs() <= 1e-12);

            let count = model.repulsion_count(r);
            let incoming: Vec<_> = scenario.repulsions.iter().filter(|e| e.target == group.name).collect();
            prop_assert_eq!(incoming.len(), count);
            let mut per_edge = vec![0.0; count];
            for j in 0..m {
                for (e, xi) in model.repulsive_force_by_source(id, j, &config).unwrap().into_iter().enumerate() {
                    per_edge[e] += xi;
                }
            }
            for (e, edge) in incoming.iter().enumerate() {
                let expected = model.eta(r) * edge.gamma * (m - 1) as f64 / count as f64;
                prop_assert!((per_edge[e] - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn forces_invariant_under_member_relabeling(seed in any::<u64>(), shift in 1usize..5) {
        let mut rng = seeded(seed);
        let scenario = random_scenario(&mut rng, 6, 3);
        let g = scenario.groups.iter().enumerate().max_by_key(|(_, g)| g.members.len()).unwrap().0;
        let size = scenario.groups[g].members.len();
        let perm: Vec<usize> = (0..size).map(|k| (k + shift) % size).collect();
        let a = Model::new(scenario.clone()).unwrap();
        let b = Model::new(permuted(&scenario, g, &perm)).unwrap();
        let config = random_config(&mut rng, a.num_agents(), a.num_states());
        for r in 0..a.num_agents() {
            let id = a.agent_id(r);
            for j in 0..a.num_states() {
                let pa = a.attractive_force(id, j, &config).unwrap();
                let pb = b.attractive_force(id, j, &config).unwrap();
                prop_assert!((pa - pb).abs() <= 1e-12);
                let xa = a.repulsive_force(id, j, &config).unwrap();
                let xb = b.repulsive_force(id, j, &config).unwrap();
                prop_assert!((xa - xb).abs() <= 1e-12);
            }
        }
    }
}
