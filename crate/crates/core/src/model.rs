//! Validated scenario with precomputed group lookups, and the two social
//! force functions evaluated on concrete network configurations.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::scenario::{validate_scenario, NetworkConfig, Scenario};

/// Which force terms are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ModelVariant {
    /// Isolated agents: only the individual rate matrices.
    Isolated,
    /// Individual rates plus attraction within groups.
    Attract,
    /// Individual rates, attraction and repulsion.
    #[default]
    Full,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [Self::Isolated, Self::Attract, Self::Full];

    pub fn attraction(self) -> bool {
        !matches!(self, Self::Isolated)
    }

    pub fn repulsion(self) -> bool {
        matches!(self, Self::Full)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Isolated => "isolated",
            Self::Attract => "attract",
            Self::Full => "full",
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "isolated" => Ok(Self::Isolated),
            "attract" => Ok(Self::Attract),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown model variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
struct GroupIndex {
    /// Agent positions of the members, in adjacency order.
    members: Vec<usize>,
    lambda: f64,
    adjacency: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct EdgeIndex {
    source_members: Vec<usize>,
    gamma: f64,
    adjacency: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct AgentIndex {
    group: usize,
    /// Row of this agent in its group's adjacency and in incoming edge matrices.
    slot: usize,
    /// Incoming repulsion edges.
    repulsions: Vec<usize>,
}

/// A scenario that passed validation, indexed for force evaluation.
///
/// Agents are addressed either by their scenario id or by their position
/// in `scenario.agents`; positions also fix the network digit order.
#[derive(Debug, Clone)]
pub struct Model {
    scenario: Scenario,
    variant: ModelVariant,
    positions: HashMap<u32, usize>,
    agents: Vec<AgentIndex>,
    groups: Vec<GroupIndex>,
    edges: Vec<EdgeIndex>,
}

impl Model {
    /// Validate and index the full model.
    pub fn new(scenario: Scenario) -> Result<Self> {
        Self::with_variant(scenario, ModelVariant::Full)
    }

    pub fn with_variant(scenario: Scenario, variant: ModelVariant) -> Result<Self> {
        let report = validate_scenario(&scenario);
        if !report.is_pass() {
            return Err(Error::Invalid(report));
        }
        let positions: HashMap<u32, usize> = scenario
            .agents
            .iter()
            .enumerate()
            .map(|(k, a)| (a.id, k))
            .collect();
        let group_of_name: HashMap<&str, usize> = scenario
            .groups
            .iter()
            .enumerate()
            .map(|(g, grp)| (grp.name.as_str(), g))
            .collect();

        let groups: Vec<GroupIndex> = scenario
            .groups
            .iter()
            .map(|g| GroupIndex {
                members: g.members.iter().map(|id| positions[id]).collect(),
                lambda: g.lambda,
                adjacency: g.adjacency.clone(),
            })
            .collect();

        let mut agents = vec![
            AgentIndex {
                group: 0,
                slot: 0,
                repulsions: Vec::new(),
            };
            scenario.agents.len()
        ];
        for (g, grp) in groups.iter().enumerate() {
            for (slot, &pos) in grp.members.iter().enumerate() {
                agents[pos].group = g;
                agents[pos].slot = slot;
            }
        }

        let mut edges = Vec::with_capacity(scenario.repulsions.len());
        for (e, edge) in scenario.repulsions.iter().enumerate() {
            let target = group_of_name[edge.target.as_str()];
            let source = group_of_name[edge.source.as_str()];
            edges.push(EdgeIndex {
                source_members: groups[source].members.clone(),
                gamma: edge.gamma,
                adjacency: edge.adjacency.clone(),
            });
            for &pos in &groups[target].members {
                agents[pos].repulsions.push(e);
            }
        }

        Ok(Self {
            scenario,
            variant,
            positions,
            agents,
            groups,
            edges,
        })
    }

    /// Same scenario, different active force terms.
    pub fn restricted(&self, variant: ModelVariant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn num_agents(&self) -> usize {
        self.scenario.agents.len()
    }

    pub fn num_states(&self) -> usize {
        self.scenario.states.len()
    }

    pub fn position(&self, id: u32) -> Result<usize> {
        self.positions.get(&id).copied().ok_or(Error::UnknownAgent(id))
    }

    pub fn agent_id(&self, position: usize) -> u32 {
        self.scenario.agents[position].id
    }

    pub fn eta(&self, position: usize) -> f64 {
        self.scenario.agents[position].eta
    }

    pub fn base_rate(&self, position: usize, from: usize, to: usize) -> f64 {
        self.scenario.agents[position].rates[from][to]
    }

    /// Number of repulsion edges acting on the agent, `|R|`.
    pub fn repulsion_count(&self, position: usize) -> usize {
        self.agents[position].repulsions.len()
    }

    /// Group-mates of the agent with their attraction weights, and the
    /// factor `eta * lambda` (zero for singletons or when attraction is off).
    pub(crate) fn attraction_terms(&self, position: usize) -> (f64, Vec<(usize, f64)>) {
        let idx = &self.agents[position];
        let grp = &self.groups[idx.group];
        if !self.variant.attraction() || grp.members.len() < 2 {
            return (0.0, Vec::new());
        }
        let row = &grp.adjacency[idx.slot];
        let mates = grp
            .members
            .iter()
            .zip(row)
            .filter(|(&k, &w)| k != position && w != 0.0)
            .map(|(&k, &w)| (k, w))
            .collect();
        (self.eta(position) * grp.lambda, mates)
    }

    /// For each incoming repulsion edge: `eta * gamma / |R|` and the
    /// weighted repulsing agents. Empty when repulsion is off.
    pub(crate) fn repulsion_terms(&self, position: usize) -> Vec<(f64, Vec<(usize, f64)>)> {
        if !self.variant.repulsion() {
            return Vec::new();
        }
        let idx = &self.agents[position];
        let count = idx.repulsions.len() as f64;
        idx.repulsions
            .iter()
            .map(|&e| {
                let edge = &self.edges[e];
                let row = &edge.adjacency[idx.slot];
                let sources = edge
                    .source_members
                    .iter()
                    .zip(row)
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(&k, &w)| (k, w))
                    .collect();
                (self.eta(position) * edge.gamma / count, sources)
            })
            .collect()
    }

    /// Attraction toward `state` experienced by the agent at `position`.
    pub fn attraction_at(&self, position: usize, state: usize, config: &NetworkConfig) -> f64 {
        let idx = &self.agents[position];
        let grp = &self.groups[idx.group];
        if !self.variant.attraction() || grp.members.len() < 2 {
            return 0.0;
        }
        let row = &grp.adjacency[idx.slot];
        let pull: f64 = grp
            .members
            .iter()
            .zip(row)
            .map(|(&k, &w)| w * config.indicator(k, state))
            .sum();
        self.eta(position) * grp.lambda * pull
    }

    /// Repulsion toward `state` from a single incoming edge (by its index
    /// among the agent's incoming edges).
    pub fn repulsion_from_at(
        &self,
        position: usize,
        incoming: usize,
        state: usize,
        config: &NetworkConfig,
    ) -> f64 {
        if !self.variant.repulsion() {
            return 0.0;
        }
        let idx = &self.agents[position];
        let edge = &self.edges[idx.repulsions[incoming]];
        let row = &edge.adjacency[idx.slot];
        let push: f64 = edge
            .source_members
            .iter()
            .zip(row)
            .map(|(&k, &w)| w * (1.0 - config.indicator(k, state)))
            .sum();
        self.eta(position) * edge.gamma / idx.repulsions.len() as f64 * push
    }

    /// Total repulsion toward `state` summed over all incoming edges.
    pub fn repulsion_at(&self, position: usize, state: usize, config: &NetworkConfig) -> f64 {
        (0..self.agents[position].repulsions.len())
            .map(|e| self.repulsion_from_at(position, e, state, config))
            .sum()
    }

    /// Off-diagonal rate of the agent leaving its current state for `state`.
    ///
    /// Panics in debug builds if `state` is the current state.
    #[inline]
    pub fn modulated_rate_at(&self, position: usize, state: usize, config: &NetworkConfig) -> f64 {
        let current = config.state_of(position);
        debug_assert_ne!(current, state);
        self.base_rate(position, current, state)
            + self.attraction_at(position, state, config)
            + self.repulsion_at(position, state, config)
    }

    fn check_config(&self, config: &NetworkConfig) -> Result<()> {
        if config.len() != self.num_agents() {
            return Err(Error::DimensionMismatch {
                expected: self.num_agents(),
                actual: config.len(),
            });
        }
        if let Some(&bad) = config.as_slice().iter().find(|&&s| s >= self.num_states()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                capacity: self.num_states(),
            });
        }
        Ok(())
    }

    /// Attractive force on agent `id` toward `state`.
    pub fn attractive_force(&self, id: u32, state: usize, config: &NetworkConfig) -> Result<f64> {
        let pos = self.position(id)?;
        self.check_config(config)?;
        Ok(self.attraction_at(pos, state, config))
    }

    /// Repulsive force on agent `id` toward `state`, summed over repulsing groups.
    pub fn repulsive_force(&self, id: u32, state: usize, config: &NetworkConfig) -> Result<f64> {
        let pos = self.position(id)?;
        self.check_config(config)?;
        Ok(self.repulsion_at(pos, state, config))
    }

    /// Per-source repulsion on agent `id` toward `state`, one entry per
    /// incoming edge in scenario order.
    pub fn repulsive_force_by_source(
        &self,
        id: u32,
        state: usize,
        config: &NetworkConfig,
    ) -> Result<Vec<f64>> {
        let pos = self.position(id)?;
        self.check_config(config)?;
        Ok((0..self.repulsion_count(pos))
            .map(|e| self.repulsion_from_at(pos, e, state, config))
            .collect())
    }

    /// Total rate of agent `id` jumping from its current state to `state`.
    pub fn modulated_rate(&self, id: u32, state: usize, config: &NetworkConfig) -> Result<f64> {
        let pos = self.position(id)?;
        self.check_config(config)?;
        if config.state_of(pos) == state {
            return Err(Error::SelfTransition { agent: id, state });
        }
        Ok(self.modulated_rate_at(pos, state, config))
    }
}
