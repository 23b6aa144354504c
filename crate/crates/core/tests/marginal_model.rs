mod common;

use common::max_abs_diff;
use opinion_core::intersection::intersection_example;
use opinion_core::marginal::*;
use opinion_core::network::*;
use opinion_core::random::{random_marginals, random_scenario, seeded};
use opinion_core::trajectory::uniform_grid;
use opinion_core::{Model, ModelVariant};

fn compare_transients(model: &Model, times: &[f64]) -> f64 {
    let gen = NetworkGenerator::build(model, DEFAULT_CAPACITY).unwrap();
    let p0 = independent_initial(model, &gen.codec);
    let net = network_transient(&gen, &p0, times).unwrap();
    let op = build_marginalization(&gen.codec);
    let projected = project_table(&op, model, &net).unwrap();
    let sys = assemble_marginal_system(model);
    let marg = marginal_transient(model, &sys, &stacked_initial(model), times).unwrap();
    projected.max_abs_diff(&marg)
}

fn compare_stationaries(model: &Model) -> f64 {
    let gen = NetworkGenerator::build(model, DEFAULT_CAPACITY).unwrap();
    let pi = network_stationary(&gen).unwrap();
    let op = build_marginalization(&gen.codec);
    let projected = project_marginal(&op, &pi).unwrap();
    let sys = assemble_marginal_system(model);
    let marg = marginal_stationary(&sys).unwrap();
    max_abs_diff(&projected, &marg.probabilities)
}

#[test]
fn intersection_marginals_match_network_for_every_variant() {
    let times = uniform_grid(10.0, 50);
    for variant in ModelVariant::ALL {
        let model = Model::with_variant(intersection_example(), variant).unwrap();
        let transient = compare_transients(&model, &times);
        assert!(transient <= 1e-6, "{} transient {transient:e}", variant.name());
        let stationary = compare_stationaries(&model);
        assert!(stationary <= 1e-9, "{} stationary {stationary:e}", variant.name());
    }
}

#[test]
fn random_marginals_match_network() {
    let times = uniform_grid(10.0, 50);
    let mut rng = seeded(1234);
    for trial in 0..20 {
        let model = Model::new(random_scenario(&mut rng, 5, 3)).unwrap();
        let transient = compare_transients(&model, &times);
        assert!(transient <= 1e-6, "trial {trial}: transient {transient:e}");
        let stationary = compare_stationaries(&model);
        assert!(stationary <= 1e-9, "trial {trial}: stationary {stationary:e}");
    }
}

#[test]
fn per_agent_mass_is_conserved() {
    let mut rng = seeded(77);
    for _ in 0..5 {
        let model = Model::new(random_scenario(&mut rng, 6, 4)).unwrap();
        let sys = assemble_marginal_system(&model);
        let p0 = random_marginals(&mut rng, model.num_agents(), model.num_states());
        let table = marginal_transient(&model, &sys, &p0, &uniform_grid(100.0, 101)).unwrap();
        assert!(table.max_normalization_error() <= 1e-8);
    }
}

#[test]
fn conservation_at_the_level_of_the_vector_field() {
    let mut rng = seeded(4);
    for _ in 0..50 {
        let model = Model::new(random_scenario(&mut rng, 6, 4)).unwrap();
        let sys = assemble_marginal_system(&model);
        let m = model.num_states();
        let p = random_marginals(&mut rng, model.num_agents(), m);
        for block in sys.derivative(&p).chunks(m) {
            assert!(block.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}

#[test]
fn stationary_does_not_depend_on_initial_distribution() {
    let model = Model::new(intersection_example()).unwrap();
    let sys = assemble_marginal_system(&model);
    let mut rng = seeded(9);
    let a = random_marginals(&mut rng, model.num_agents(), model.num_states());
    let b = random_marginals(&mut rng, model.num_agents(), model.num_states());
    let times = [0.0, 200.0];
    let ta = marginal_transient(&model, &sys, &a, &times).unwrap();
    let tb = marginal_transient(&model, &sys, &b, &times).unwrap();
    assert!(max_abs_diff(ta.row(1), tb.row(1)) <= 1e-6);
    let pi = marginal_stationary(&sys).unwrap();
    assert!(max_abs_diff(ta.row(1), &pi.probabilities) <= 1e-6);
}

#[test]
fn isolated_marginal_system_is_block_diagonal() {
    let model = Model::with_variant(intersection_example(), ModelVariant::Isolated).unwrap();
    let sys = assemble_marginal_system(&model);
    let total = sys.total();
    let m = model.num_states();
    for i in 0..sys.dim() {
        for j in 0..sys.dim() {
            if i / m != j / m {
                assert_eq!(total[(i, j)], 0.0);
            }
        }
    }
    assert!(sys.em.iter().all(|&e| e == 0.0));
}
