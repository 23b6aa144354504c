//! Scenario description and structural validation.
//!
//! A [`Scenario`] is plain data as read from a file. Nothing here assumes
//! the data is consistent; [`validate_scenario`] walks every invariant and
//! reports all violations it finds, each tagged with the location of the
//! offending field (`agents[2].Q[1]`, `groups[0].lambda`, ...).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Tolerance for row sums and probability normalization.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Ordered set of decision states shared by all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub labels: Vec<String>,
}

impl StateSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Self {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, state: usize) -> &str {
        &self.labels[state]
    }
}

/// One agent: its isolated rate matrix, uncertainty and initial distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: u32,
    /// Row-major `M x M` transition rate matrix.
    pub rates: Vec<Vec<f64>>,
    /// Decision uncertainty; scales every social force acting on the agent.
    pub eta: f64,
    pub initial: Vec<f64>,
}

/// Agents that attract each other.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub name: String,
    pub members: Vec<u32>,
    /// Attraction strength.
    pub lambda: f64,
    /// Row-normalized `n x n` weights with a zero diagonal.
    pub adjacency: Vec<Vec<f64>>,
}

/// Repulsion felt by members of `target` from members of `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepulsionEdge {
    pub target: String,
    pub source: String,
    pub gamma: f64,
    /// Row-normalized `|target| x |source|` weights.
    pub adjacency: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub states: StateSpace,
    pub agents: Vec<AgentSpec>,
    pub groups: Vec<Group>,
    pub repulsions: Vec<RepulsionEdge>,
}

/// The state of every agent, indexed by agent position in the scenario.
///
/// States are zero-based indices into the [`StateSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkConfig(pub Vec<usize>);

impl NetworkConfig {
    pub fn new(assignment: Vec<usize>) -> Self {
        Self(assignment)
    }

    #[inline]
    pub fn state_of(&self, agent_index: usize) -> usize {
        self.0[agent_index]
    }

    /// Indicator that the agent at `agent_index` occupies `state`.
    #[inline]
    pub fn indicator(&self, agent_index: usize, state: usize) -> f64 {
        if self.0[agent_index] == state {
            1.0
        } else {
            0.0
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Which invariant a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    StateSpace,
    Agent,
    RateMatrix,
    Irreducible,
    Initial,
    Eta,
    Group,
    Partition,
    Adjacency,
    Repulsion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// JSON-style path of the offending field.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, kind: ViolationKind, location: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            location: location.into(),
            message: message.into(),
        });
    }

    /// True if some violation message contains `needle`.
    pub fn mentions(&self, needle: &str) -> bool {
        self.violations
            .iter()
            .any(|v| v.message.contains(needle) || v.location.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return write!(f, "pass");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  - {v}")?;
        }
        Ok(())
    }
}

fn is_square(m: &[Vec<f64>], n: usize) -> bool {
    m.len() == n && m.iter().all(|row| row.len() == n)
}

fn is_shape(m: &[Vec<f64>], rows: usize, cols: usize) -> bool {
    m.len() == rows && m.iter().all(|row| row.len() == cols)
}

/// Strong connectivity of the digraph with an edge `i -> j` wherever
/// `rates[i][j] > 0`, checked by a search from state 0 in both directions.
pub fn is_irreducible(rates: &[Vec<f64>]) -> bool {
    let n = rates.len();
    if n == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let w = if forward { rates[u][v] } else { rates[v][u] };
                if v != u && w > 0.0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

fn check_row_normalized(
    report: &mut ValidationReport,
    adjacency: &[Vec<f64>],
    location: &str,
    zero_diagonal: bool,
) {
    for (i, row) in adjacency.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                report.push(
                    ViolationKind::Adjacency,
                    format!("{location}[{i}][{j}]"),
                    "adjacency weights must be finite and nonnegative",
                );
            }
            if zero_diagonal && i == j && w != 0.0 {
                report.push(
                    ViolationKind::Adjacency,
                    format!("{location}[{i}][{j}]"),
                    "adjacency diagonal must be zero (no self-attraction)",
                );
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            report.push(
                ViolationKind::Adjacency,
                format!("{location}[{i}]"),
                format!("adjacency row must sum to 1 (got {sum})"),
            );
        }
    }
}

/// Check every structural invariant of a scenario.
///
/// Violations are returned as data; this never fails.
pub fn validate_scenario(raw: &Scenario) -> ValidationReport {
    let mut report = ValidationReport::default();
    let m = raw.states.len();

    if m < 2 {
        report.push(ViolationKind::StateSpace, "states", "at least two states required");
    }
    let mut seen_labels = BTreeSet::new();
    for (i, label) in raw.states.labels.iter().enumerate() {
        if !seen_labels.insert(label.as_str()) {
            report.push(
                ViolationKind::StateSpace,
                format!("states[{i}]"),
                format!("duplicate state label {label:?}"),
            );
        }
    }

    if raw.agents.is_empty() {
        report.push(ViolationKind::Agent, "agents", "at least one agent required");
    }

    let mut ids = BTreeSet::new();
    for (a, agent) in raw.agents.iter().enumerate() {
        let loc = format!("agents[{a}]");
        if agent.id == 0 {
            report.push(ViolationKind::Agent, format!("{loc}.id"), "agent id must be positive");
        }
        if !ids.insert(agent.id) {
            report.push(
                ViolationKind::Agent,
                format!("{loc}.id"),
                format!("duplicate agent id {}", agent.id),
            );
        }
        if !(agent.eta.is_finite() && agent.eta > 0.0) {
            report.push(ViolationKind::Eta, format!("{loc}.eta"), "eta must be positive");
        }

        if !is_square(&agent.rates, m) {
            report.push(
                ViolationKind::RateMatrix,
                format!("{loc}.Q"),
                format!("rate matrix must be {m}x{m}"),
            );
        } else {
            let mut entries_ok = true;
            for (i, row) in agent.rates.iter().enumerate() {
                for (j, &q) in row.iter().enumerate() {
                    if !q.is_finite() {
                        entries_ok = false;
                        report.push(
                            ViolationKind::RateMatrix,
                            format!("{loc}.Q[{i}][{j}]"),
                            "rate must be finite",
                        );
                    } else if i != j && q < 0.0 {
                        entries_ok = false;
                        report.push(
                            ViolationKind::RateMatrix,
                            format!("{loc}.Q[{i}][{j}]"),
                            "rate matrix off-diagonal must be nonnegative",
                        );
                    }
                }
                let sum: f64 = row.iter().sum();
                if sum.abs() > NORMALIZATION_TOL {
                    entries_ok = false;
                    report.push(
                        ViolationKind::RateMatrix,
                        format!("{loc}.Q[{i}]"),
                        format!("rate matrix row sum nonzero (got {sum})"),
                    );
                }
            }
            if entries_ok && m >= 2 && !is_irreducible(&agent.rates) {
                report.push(
                    ViolationKind::Irreducible,
                    format!("{loc}.Q"),
                    "rate matrix is not irreducible (positive-rate graph not strongly connected)",
                );
            }
        }

        if agent.initial.len() != m {
            report.push(
                ViolationKind::Initial,
                format!("{loc}.initial"),
                format!("initial distribution must have {m} entries"),
            );
        } else {
            if agent.initial.iter().any(|&p| !p.is_finite() || p < 0.0) {
                report.push(
                    ViolationKind::Initial,
                    format!("{loc}.initial"),
                    "initial probabilities must be nonnegative",
                );
            }
            let sum: f64 = agent.initial.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                report.push(
                    ViolationKind::Initial,
                    format!("{loc}.initial"),
                    format!("initial distribution must sum to 1 (got {sum})"),
                );
            }
        }
    }

    // group structure
    let mut membership: BTreeMap<u32, usize> = BTreeMap::new();
    let mut group_names: BTreeMap<&str, usize> = BTreeMap::new();
    for (g, group) in raw.groups.iter().enumerate() {
        let loc = format!("groups[{g}]");
        if group_names.insert(group.name.as_str(), g).is_some() {
            report.push(
                ViolationKind::Group,
                format!("{loc}.name"),
                format!("duplicate group name {:?}", group.name),
            );
        }
        if group.members.is_empty() {
            report.push(ViolationKind::Group, format!("{loc}.members"), "group must not be empty");
        }
        if !(group.lambda.is_finite() && group.lambda >= 0.0) {
            report.push(
                ViolationKind::Group,
                format!("{loc}.lambda"),
                "lambda must be nonnegative",
            );
        }
        for (k, id) in group.members.iter().enumerate() {
            if !ids.contains(id) {
                report.push(
                    ViolationKind::Partition,
                    format!("{loc}.members[{k}]"),
                    format!("unknown agent id {id}"),
                );
            } else if membership.insert(*id, g).is_some() {
                report.push(
                    ViolationKind::Partition,
                    format!("{loc}.members[{k}]"),
                    format!("groups must partition agents (agent {id} appears twice)"),
                );
            }
        }
        let n = group.members.len();
        if !is_square(&group.adjacency, n) {
            report.push(
                ViolationKind::Adjacency,
                format!("{loc}.adjacency"),
                format!("adjacency must be {n}x{n}"),
            );
        } else if n == 1 {
            if group.adjacency[0][0] != 0.0 {
                report.push(
                    ViolationKind::Adjacency,
                    format!("{loc}.adjacency"),
                    "singleton group adjacency must be [[0]]",
                );
            }
        } else {
            check_row_normalized(&mut report, &group.adjacency, &format!("{loc}.adjacency"), true);
        }
    }
    for id in &ids {
        if !membership.contains_key(id) {
            report.push(
                ViolationKind::Partition,
                "groups",
                format!("groups must partition agents (agent {id} is in no group)"),
            );
        }
    }

    let mut pairs = BTreeSet::new();
    for (e, edge) in raw.repulsions.iter().enumerate() {
        let loc = format!("repulsions[{e}]");
        let target = group_names.get(edge.target.as_str()).copied();
        let source = group_names.get(edge.source.as_str()).copied();
        if target.is_none() {
            report.push(
                ViolationKind::Repulsion,
                format!("{loc}.target"),
                format!("unknown group {:?}", edge.target),
            );
        }
        if source.is_none() {
            report.push(
                ViolationKind::Repulsion,
                format!("{loc}.source"),
                format!("unknown group {:?}", edge.source),
            );
        }
        if edge.target == edge.source {
            report.push(
                ViolationKind::Repulsion,
                format!("{loc}.source"),
                "repulsion target and source must differ",
            );
        }
        if !pairs.insert((edge.target.as_str(), edge.source.as_str())) {
            report.push(
                ViolationKind::Repulsion,
                loc.clone(),
                "at most one repulsion edge per (target, source) pair",
            );
        }
        if !(edge.gamma.is_finite() && edge.gamma >= 0.0) {
            report.push(
                ViolationKind::Repulsion,
                format!("{loc}.gamma"),
                "gamma must be nonnegative",
            );
        }
        if let (Some(t), Some(s)) = (target, source) {
            let rows = raw.groups[t].members.len();
            let cols = raw.groups[s].members.len();
            if !is_shape(&edge.adjacency, rows, cols) {
                report.push(
                    ViolationKind::Adjacency,
                    format!("{loc}.adjacency"),
                    format!("adjacency must be {rows}x{cols}"),
                );
            } else {
                check_row_normalized(&mut report, &edge.adjacency, &format!("{loc}.adjacency"), false);
            }
        }
    }

    report
}
