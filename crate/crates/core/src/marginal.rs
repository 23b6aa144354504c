//! The `NM`-dimensional marginalized model.
//!
//! Per-agent probabilities obey the affine system
//! `dp/dt = (Qm + Am + Rm) p + Em`, stacked agent-major and state-minor.
//! Both force functions are linear in the indicators of the *other* agents
//! and their totals over destination states are configuration-independent,
//! so taking expectations of the network dynamics closes exactly on the
//! marginals.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::ode::{integrate, Flow, Tolerances};
use crate::trajectory::{Block, TrajectoryTable};

#[derive(Debug, Clone)]
pub struct MarginalSystem {
    pub agents: usize,
    pub states: usize,
    /// Block diagonal of transposed isolated rate matrices.
    pub qm: DMatrix<f64>,
    pub am: DMatrix<f64>,
    pub rm: DMatrix<f64>,
    pub em: DVector<f64>,
}

/// Solution of the stationary marginal problem with its residual.
#[derive(Debug, Clone)]
pub struct MarginalStationary {
    pub probabilities: Vec<f64>,
    /// Max-norm residual of the augmented system.
    pub residual: f64,
}

pub fn agent_blocks(model: &Model) -> Vec<Block> {
    let labels = &model.scenario().states.labels;
    model
        .scenario()
        .agents
        .iter()
        .map(|a| Block {
            entity: a.id.to_string(),
            states: labels.clone(),
        })
        .collect()
}

/// Stack of the agents' own initial distributions.
pub fn stacked_initial(model: &Model) -> Vec<f64> {
    model
        .scenario()
        .agents
        .iter()
        .flat_map(|a| a.initial.iter().copied())
        .collect()
}

pub fn assemble_marginal_system(model: &Model) -> MarginalSystem {
    let n = model.num_agents();
    let m = model.num_states();
    let dim = n * m;
    let mut qm = DMatrix::zeros(dim, dim);
    let mut am = DMatrix::zeros(dim, dim);
    let mut rm = DMatrix::zeros(dim, dim);
    let mut em = DVector::zeros(dim);

    for r in 0..n {
        for i in 0..m {
            for j in 0..m {
                qm[(r * m + j, r * m + i)] = model.base_rate(r, i, j);
            }
        }

        let (pull, mates) = model.attraction_terms(r);
        if pull != 0.0 {
            for j in 0..m {
                for &(k, w) in &mates {
                    am[(r * m + j, k * m + j)] += pull * w;
                }
                am[(r * m + j, r * m + j)] -= pull;
            }
        }

        for (push, sources) in model.repulsion_terms(r) {
            for j in 0..m {
                for &(k, w) in &sources {
                    rm[(r * m + j, k * m + j)] -= push * w;
                }
                rm[(r * m + j, r * m + j)] -= push * (m - 1) as f64;
                em[r * m + j] += push;
            }
        }
    }

    MarginalSystem {
        agents: n,
        states: m,
        qm,
        am,
        rm,
        em,
    }
}

impl MarginalSystem {
    pub fn dim(&self) -> usize {
        self.agents * self.states
    }

    /// `Qm + Am + Rm`
    pub fn total(&self) -> DMatrix<f64> {
        &self.qm + &self.am + &self.rm
    }

    /// `(Qm + Am + Rm) p + Em`
    pub fn derivative(&self, p: &[f64]) -> Vec<f64> {
        let out = self.total() * DVector::from_column_slice(p) + &self.em;
        out.iter().copied().collect()
    }
}

struct AffineFlow {
    matrix: DMatrix<f64>,
    offset: DVector<f64>,
}

impl Flow for AffineFlow {
    fn dim(&self) -> usize {
        self.offset.len()
    }

    fn derivative(&self, x: &[f64], dx: &mut [f64]) {
        let n = x.len();
        dx.copy_from_slice(self.offset.as_slice());
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            let col = self.matrix.column(j);
            for i in 0..n {
                dx[i] += col[i] * xj;
            }
        }
    }
}

pub fn marginal_transient(
    model: &Model,
    system: &MarginalSystem,
    initial: &[f64],
    times: &[f64],
) -> Result<TrajectoryTable> {
    if initial.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: initial.len(),
        });
    }
    let flow = AffineFlow {
        matrix: system.total(),
        offset: system.em.clone(),
    };
    let states = integrate(&flow, initial, times, Tolerances::default())?;
    let mut table = TrajectoryTable::new(agent_blocks(model));
    for (&t, p) in times.iter().zip(states) {
        table.push(t, p);
    }
    Ok(table)
}

/// Stationary marginals from the balance rows with one normalization row
/// per agent appended, solved in the least-squares sense.
pub fn marginal_stationary(system: &MarginalSystem) -> Result<MarginalStationary> {
    let n = system.agents;
    let m = system.states;
    let dim = system.dim();
    let total = system.total();
    let mut augmented = DMatrix::zeros(dim + n, dim);
    augmented.view_mut((0, 0), (dim, dim)).copy_from(&total);
    let mut rhs = DVector::zeros(dim + n);
    for i in 0..dim {
        rhs[i] = -system.em[i];
    }
    for r in 0..n {
        for j in 0..m {
            augmented[(dim + r, r * m + j)] = 1.0;
        }
        rhs[dim + r] = 1.0;
    }
    let solution = crate::linalg::least_squares(augmented.clone(), &rhs)?;
    let residual = (&augmented * &solution - &rhs).amax();
    if residual > 1e-10 {
        return Err(Error::SingularSystem(format!(
            "marginal stationary residual {residual:e} above 1e-10"
        )));
    }
    Ok(MarginalStationary {
        probabilities: solution.iter().copied().collect(),
        residual,
    })
}
