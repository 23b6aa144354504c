//! Bundled unsignalized T-junction scenario: two cyclist groups and one
//! driver group choosing between `Yield` and `Go`.
//!
//! Only preferences, uncertainties and group strengths are fixed by the
//! scene description. Base rates are calibrated: every agent jumps toward
//! its preferred state at `r_pref` and away from it at [`R_OTHER`]; the
//! most confident cyclists (2 and 7) hold their preference
//! [`CONFIDENT_FACTOR`] times more strongly. [`calibrate`] searches `r_pref`
//! on [`RPREF_GRID`] and the outcome is frozen in [`CALIBRATED_R_PREF`].

use crate::error::Result;
use crate::file::ScenarioFile;
use crate::marginal::{assemble_marginal_system, marginal_stationary};
use crate::model::{Model, ModelVariant};
use crate::scenario::{AgentSpec, Group, RepulsionEdge, Scenario, StateSpace};

pub const YIELD: usize = 0;
pub const GO: usize = 1;

/// Rate away from the preferred state.
pub const R_OTHER: f64 = 0.1;

/// Candidate rates toward the preferred state, 0.15 to 0.60 in steps of 0.05.
pub const RPREF_GRID: [f64; 10] = [0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6];

/// Preference strength multiplier for the confident cyclists.
pub const CONFIDENT_FACTOR: f64 = 2.0;

/// Output of [`calibrate`] for the shipped file.
pub const CALIBRATED_R_PREF: f64 = 0.15;

/// Agent 4 must pick either state with about equal probability under attraction alone.
pub const AGENT4_GO_BAND: (f64, f64) = (0.45, 0.55);

/// `(id, preferred state, eta, confident)` per road user.
pub const ROAD_USERS: [(u32, usize, f64, bool); 7] = [
    (1, GO, 10.0, false),
    (2, GO, 1.0, true),
    (3, GO, 100.0, false),
    (4, YIELD, 100.0, false),
    (5, GO, 100.0, false),
    (6, GO, 10.0, false),
    (7, GO, 1.0, true),
];

/// `(name, members, lambda)`
pub const GROUPS: [(&str, &[u32], f64); 3] = [
    ("C1", &[1, 2], 0.5),
    ("D", &[3, 4, 5], 0.05),
    ("C2", &[6, 7], 0.5),
];

/// `(target, source, gamma)`
pub const REPULSIONS: [(&str, &str, f64); 4] = [
    ("D", "C1", 0.3),
    ("D", "C2", 0.3),
    ("C1", "D", 0.003),
    ("C2", "D", 0.003),
];

fn preference_rates(preferred: usize, toward: f64) -> Vec<Vec<f64>> {
    let mut q = vec![vec![0.0; 2]; 2];
    let other = 1 - preferred;
    q[other][preferred] = toward;
    q[preferred][other] = R_OTHER;
    q[YIELD][YIELD] = -q[YIELD][GO];
    q[GO][GO] = -q[GO][YIELD];
    q
}

/// Uniform weights over a complete graph without self-loops.
fn complete_graph(n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![0.0]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { 1.0 / (n - 1) as f64 })
                .collect()
        })
        .collect()
}

fn complete_bipartite(rows: usize, cols: usize) -> Vec<Vec<f64>> {
    vec![vec![1.0 / cols as f64; cols]; rows]
}

/// The intersection scene with a given base preference rate.
pub fn intersection_scenario(r_pref: f64) -> Scenario {
    let agents = ROAD_USERS
        .iter()
        .map(|&(id, preferred, eta, confident)| {
            let toward = if confident {
                CONFIDENT_FACTOR * r_pref
            } else {
                r_pref
            };
            AgentSpec {
                id,
                rates: preference_rates(preferred, toward),
                eta,
                initial: vec![0.5, 0.5],
            }
        })
        .collect();
    let size_of = |name: &str| {
        GROUPS
            .iter()
            .find(|g| g.0 == name)
            .map(|g| g.1.len())
            .expect("known group")
    };
    Scenario {
        states: StateSpace::new(["Yield", "Go"]),
        agents,
        groups: GROUPS
            .iter()
            .map(|&(name, members, lambda)| Group {
                name: name.into(),
                members: members.to_vec(),
                lambda,
                adjacency: complete_graph(members.len()),
            })
            .collect(),
        repulsions: REPULSIONS
            .iter()
            .map(|&(target, source, gamma)| RepulsionEdge {
                target: target.into(),
                source: source.into(),
                gamma,
                adjacency: complete_bipartite(size_of(target), size_of(source)),
            })
            .collect(),
    }
}

/// The shipped scenario.
pub fn intersection_example() -> Scenario {
    intersection_scenario(CALIBRATED_R_PREF)
}

/// The shipped scenario as a document, with calibration recorded in its comment.
pub fn intersection_file() -> ScenarioFile {
    let comment = format!(
        "Unsignalized T-junction: cyclists C1={{1,2}}, C2={{6,7}}, drivers D={{3,4,5}}. \
         States 0=Yield, 1=Go. Base rates: r_pref={CALIBRATED_R_PREF} toward the preferred state \
         ({}x for confident cyclists 2 and 7), r_other={R_OTHER} away from it; r_pref is the first \
         value on 0.15..0.60 (step 0.05) giving isolated argmax = preferred state for every agent \
         and attraction-only P(agent 4 = Go) in [{}, {}].",
        CONFIDENT_FACTOR, AGENT4_GO_BAND.0, AGENT4_GO_BAND.1
    );
    ScenarioFile::from_scenario(&intersection_example(), Some(comment))
}

/// Stationary marginals of one model variant, stacked agent-major.
fn stationary_marginals(scenario: &Scenario, variant: ModelVariant) -> Result<Vec<f64>> {
    let model = Model::with_variant(scenario.clone(), variant)?;
    Ok(marginal_stationary(&assemble_marginal_system(&model))?.probabilities)
}

/// Whether a candidate base rate meets both calibration targets.
pub fn meets_calibration_targets(r_pref: f64) -> Result<bool> {
    let scenario = intersection_scenario(r_pref);
    let isolated = stationary_marginals(&scenario, ModelVariant::Isolated)?;
    let argmax_ok = ROAD_USERS.iter().enumerate().all(|(k, &(_, preferred, _, _))| {
        let block = &isolated[2 * k..2 * k + 2];
        block[preferred] > block[1 - preferred]
    });
    let attract = stationary_marginals(&scenario, ModelVariant::Attract)?;
    let agent4_go = attract[2 * 3 + GO];
    Ok(argmax_ok && (AGENT4_GO_BAND.0..=AGENT4_GO_BAND.1).contains(&agent4_go))
}

/// First grid value meeting the calibration targets.
pub fn calibrate() -> Result<Option<f64>> {
    for r_pref in RPREF_GRID {
        if meets_calibration_targets(r_pref)? {
            return Ok(Some(r_pref));
        }
    }
    Ok(None)
}
