//! Strict JSON scenario documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{validate_scenario, AgentSpec, Group, RepulsionEdge, Scenario, StateSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub id: u32,
    #[serde(rename = "Q")]
    pub rates: Vec<Vec<f64>>,
    pub eta: f64,
    pub initial: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupEntry {
    pub name: String,
    pub members: Vec<u32>,
    pub lambda: f64,
    pub adjacency: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepulsionEntry {
    pub target: String,
    pub source: String,
    pub gamma: f64,
    pub adjacency: Vec<Vec<f64>>,
}

/// On-disk layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Free-form provenance note.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub states: Vec<String>,
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub groups: Vec<GroupEntry>,
    #[serde(default)]
    pub repulsions: Vec<RepulsionEntry>,
}

impl ScenarioFile {
    pub fn from_scenario(scenario: &Scenario, comment: Option<String>) -> Self {
        Self {
            comment,
            states: scenario.states.labels.clone(),
            agents: scenario
                .agents
                .iter()
                .map(|a| AgentEntry {
                    id: a.id,
                    rates: a.rates.clone(),
                    eta: a.eta,
                    initial: a.initial.clone(),
                })
                .collect(),
            groups: scenario
                .groups
                .iter()
                .map(|g| GroupEntry {
                    name: g.name.clone(),
                    members: g.members.clone(),
                    lambda: g.lambda,
                    adjacency: g.adjacency.clone(),
                })
                .collect(),
            repulsions: scenario
                .repulsions
                .iter()
                .map(|e| RepulsionEntry {
                    target: e.target.clone(),
                    source: e.source.clone(),
                    gamma: e.gamma,
                    adjacency: e.adjacency.clone(),
                })
                .collect(),
        }
    }

    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            states: StateSpace::new(self.states.iter().cloned()),
            agents: self
                .agents
                .iter()
                .map(|a| AgentSpec {
                    id: a.id,
                    rates: a.rates.clone(),
                    eta: a.eta,
                    initial: a.initial.clone(),
                })
                .collect(),
            groups: self
                .groups
                .iter()
                .map(|g| Group {
                    name: g.name.clone(),
                    members: g.members.clone(),
                    lambda: g.lambda,
                    adjacency: g.adjacency.clone(),
                })
                .collect(),
            repulsions: self
                .repulsions
                .iter()
                .map(|e| RepulsionEdge {
                    target: e.target.clone(),
                    source: e.source.clone(),
                    gamma: e.gamma,
                    adjacency: e.adjacency.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("scenario serializes");
        text.push('\n');
        text
    }
}

/// Parse without validating. Errors carry the JSON path of the bad field.
pub fn parse_document(text: &str) -> Result<ScenarioFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        Error::Parse {
            path: if path == "." { "$".into() } else { path },
            message: err.into_inner().to_string(),
        }
    })
}

/// Parse and fully validate a scenario document.
pub fn parse_scenario_str(text: &str) -> Result<Scenario> {
    let scenario = parse_document(text)?.to_scenario();
    let report = validate_scenario(&scenario);
    if report.is_pass() {
        Ok(scenario)
    } else {
        Err(Error::Invalid(report))
    }
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "states": ["Yield", "Go"],
        "agents": [{"id": 1, "Q": [[-1, 1], [2, -2]], "eta": 1, "initial": [1, 0]}],
        "groups": [{"name": "A", "members": [1], "lambda": 0, "adjacency": [[0]]}],
        "repulsions": []
    }"#;

    #[test]
    fn minimal_parses() {
        let s = parse_scenario_str(MINIMAL).unwrap();
        assert_eq!(s.agents[0].rates[1][0], 2.0);
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let text = MINIMAL.replace("\"eta\": 1", "\"eta\": 1, \"mood\": 3");
        match parse_scenario_str(&text) {
            Err(Error::Parse { path, message }) => {
                assert_eq!(path, "agents[0].mood");
                assert!(message.contains("mood"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_type_path() {
        let text = MINIMAL.replace("\"lambda\": 0", "\"lambda\": \"big\"");
        match parse_scenario_str(&text) {
            Err(Error::Parse { path, .. }) => assert_eq!(path, "groups[0].lambda"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(parse_scenario_str("{"), Err(Error::Parse { .. })));
    }

    #[test]
    fn negative_lambda_is_validation_error() {
        let text = MINIMAL.replace("\"lambda\": 0", "\"lambda\": -1");
        match parse_scenario_str(&text) {
            Err(Error::Invalid(report)) => {
                assert_eq!(report.violations[0].location, "groups[0].lambda")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_agents_is_validation_error() {
        let text = r#"{"states": ["a", "b"], "agents": []}"#;
        match parse_scenario_str(text) {
            Err(Error::Invalid(report)) => assert!(report.mentions("at least one agent required")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
