//! Single isolated agent: stationary distribution and transient via the
//! matrix exponential.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::stationary_by_replacement;
use crate::scenario::{AgentSpec, StateSpace};
use crate::trajectory::{Block, TrajectoryTable};

fn rate_matrix(agent: &AgentSpec) -> DMatrix<f64> {
    let m = agent.rates.len();
    DMatrix::from_fn(m, m, |i, j| agent.rates[i][j])
}

/// Unique stationary distribution of the agent's isolated chain.
///
/// The initial distribution is never read.
pub fn agent_stationary(agent: &AgentSpec) -> Result<Vec<f64>> {
    let q = rate_matrix(agent);
    let pi = stationary_by_replacement(&q)?;
    if pi.iter().any(|&p| p <= 0.0) {
        return Err(Error::SingularSystem(format!(
            "agent {} stationary vector has non-positive entries",
            agent.id
        )));
    }
    Ok(pi)
}

/// `exp(Q^T t) p0` at each time of `times`.
pub fn agent_transient(agent: &AgentSpec, states: &StateSpace, times: &[f64]) -> Result<TrajectoryTable> {
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::ToleranceNotMet("time grid must start at t >= 0".into()));
    }
    let qt = rate_matrix(agent).transpose();
    let p0 = DVector::from_column_slice(&agent.initial);
    let mut table = TrajectoryTable::new(vec![Block {
        entity: agent.id.to_string(),
        states: states.labels.clone(),
    }]);
    for &t in times {
        let p = (&qt * t).exp() * &p0;
        table.push(t, p.iter().map(|v| v.max(0.0)).collect());
    }
    Ok(table)
}
