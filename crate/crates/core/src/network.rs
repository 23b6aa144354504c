//! Exact CTMC over all `M^N` network configurations.
//!
//! Generators are assembled entry by entry through [`StateIndexCodec`]: for
//! each configuration and each agent, every alternative state of that agent
//! is one transition. This yields the same matrix as the Kronecker sum
//! `sum_r I_{M^(r-1)} (x) Q^r (x) I_{M^(N-r)}` without materializing any
//! Kronecker products.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{lsqr, stationary_by_replacement};
use crate::model::Model;
use crate::ode::{integrate, Flow, Tolerances};
use crate::scenario::NetworkConfig;
use crate::sparse::CsrMatrix;
use crate::trajectory::{Block, TrajectoryTable};

/// Default limit on the number of network states.
pub const DEFAULT_CAPACITY: usize = 1 << 20;

/// Largest network solved by dense LU; larger ones use sparse least squares.
pub const DENSE_STATIONARY_LIMIT: usize = 1024;

/// Mixed-radix codec between configurations and network state indices.
///
/// Agent 0 is the most significant digit (stride `M^(N-1)`), matching the
/// Kronecker ordering of the network generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateIndexCodec {
    agents: usize,
    states: usize,
    capacity: usize,
}

impl StateIndexCodec {
    pub fn new(agents: usize, states: usize, cap: usize) -> Result<Self> {
        let capacity = (states as u128).checked_pow(agents as u32).unwrap_or(u128::MAX);
        if capacity > cap as u128 {
            return Err(Error::CapacityExceeded {
                states: capacity,
                cap,
            });
        }
        Ok(Self {
            agents,
            states,
            capacity: capacity as usize,
        })
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Place value of the digit holding agent `position`.
    pub fn stride(&self, position: usize) -> usize {
        self.states.pow((self.agents - 1 - position) as u32)
    }

    pub fn encode(&self, config: &NetworkConfig) -> Result<usize> {
        if config.len() != self.agents {
            return Err(Error::DimensionMismatch {
                expected: self.agents,
                actual: config.len(),
            });
        }
        config.as_slice().iter().try_fold(0usize, |acc, &s| {
            if s >= self.states {
                Err(Error::IndexOutOfRange {
                    index: s,
                    capacity: self.states,
                })
            } else {
                Ok(acc * self.states + s)
            }
        })
    }

    pub fn decode(&self, index: usize) -> Result<NetworkConfig> {
        if index >= self.capacity {
            return Err(Error::IndexOutOfRange {
                index,
                capacity: self.capacity,
            });
        }
        let mut digits = vec![0; self.agents];
        let mut rest = index;
        for d in digits.iter_mut().rev() {
            *d = rest % self.states;
            rest /= self.states;
        }
        Ok(NetworkConfig::new(digits))
    }
}

/// The three network rate matrices and their codec.
#[derive(Debug, Clone)]
pub struct NetworkGenerator {
    pub codec: StateIndexCodec,
    /// Isolated agents.
    pub q0: CsrMatrix,
    /// Attraction.
    pub a0: CsrMatrix,
    /// Repulsion.
    pub r0: CsrMatrix,
}

/// Per-transition rate contributed by one of the three generator parts.
#[derive(Clone, Copy)]
enum Part {
    Isolated,
    Attraction,
    Repulsion,
}

fn assemble(model: &Model, codec: &StateIndexCodec, part: Part) -> CsrMatrix {
    let n = codec.agents();
    let m = codec.states();
    let rows: Vec<Vec<(usize, f64)>> = (0..codec.capacity())
        .into_par_iter()
        .map(|i| {
            let config = codec.decode(i).expect("index within capacity");
            let mut row = Vec::with_capacity(n * (m - 1) + 1);
            let mut out_rate = 0.0;
            for r in 0..n {
                let current = config.state_of(r);
                let stride = codec.stride(r);
                for target in 0..m {
                    if target == current {
                        continue;
                    }
                    let rate = match part {
                        Part::Isolated => model.base_rate(r, current, target),
                        Part::Attraction => model.attraction_at(r, target, &config),
                        Part::Repulsion => model.repulsion_at(r, target, &config),
                    };
                    if rate != 0.0 {
                        let j = i - current * stride + target * stride;
                        row.push((j, rate));
                        out_rate += rate;
                    }
                }
            }
            if out_rate != 0.0 {
                row.push((i, -out_rate));
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(codec.capacity(), rows)
}

fn codec_for(model: &Model, cap: usize) -> Result<StateIndexCodec> {
    StateIndexCodec::new(model.num_agents(), model.num_states(), cap)
}

/// `Q0`: independent agents driven only by their own rate matrices.
pub fn build_isolated_generator(model: &Model, cap: usize) -> Result<CsrMatrix> {
    let codec = codec_for(model, cap)?;
    Ok(assemble(model, &codec, Part::Isolated))
}

/// `(A0, R0)`: force-modulated extra rates evaluated at the source configuration.
pub fn build_force_generators(model: &Model, cap: usize) -> Result<(CsrMatrix, CsrMatrix)> {
    let codec = codec_for(model, cap)?;
    Ok((
        assemble(model, &codec, Part::Attraction),
        assemble(model, &codec, Part::Repulsion),
    ))
}

impl NetworkGenerator {
    pub fn build(model: &Model, cap: usize) -> Result<Self> {
        let codec = codec_for(model, cap)?;
        Ok(Self {
            codec,
            q0: assemble(model, &codec, Part::Isolated),
            a0: assemble(model, &codec, Part::Attraction),
            r0: assemble(model, &codec, Part::Repulsion),
        })
    }

    /// `Q0 + A0 + R0`
    pub fn total(&self) -> CsrMatrix {
        CsrMatrix::sum(&[&self.q0, &self.a0, &self.r0])
    }

    pub fn size(&self) -> usize {
        self.codec.capacity()
    }
}

/// Outer product of the agents' initial distributions.
pub fn independent_initial(model: &Model, codec: &StateIndexCodec) -> Vec<f64> {
    let agents = &model.scenario().agents;
    (0..codec.capacity())
        .map(|i| {
            let config = codec.decode(i).expect("index within capacity");
            agents
                .iter()
                .enumerate()
                .map(|(r, a)| a.initial[config.state_of(r)])
                .product()
        })
        .collect()
}

/// `dp/dt = G^T p` for a sparse generator `G`.
struct TransposedGenerator<'a>(&'a CsrMatrix);

impl Flow for TransposedGenerator<'_> {
    fn dim(&self) -> usize {
        self.0.rows()
    }

    fn derivative(&self, x: &[f64], dx: &mut [f64]) {
        self.0.mul_transpose_vec(x, dx);
    }
}

fn network_blocks(codec: &StateIndexCodec) -> Vec<Block> {
    vec![Block {
        entity: "network".into(),
        states: (0..codec.capacity()).map(|i| format!("network:{i}")).collect(),
    }]
}

/// Transient network distribution on `times`, starting from `initial`.
///
/// Entries are clamped at zero for reporting.
pub fn network_transient(
    generator: &NetworkGenerator,
    initial: &[f64],
    times: &[f64],
) -> Result<TrajectoryTable> {
    let size = generator.size();
    if initial.len() != size {
        return Err(Error::DimensionMismatch {
            expected: size,
            actual: initial.len(),
        });
    }
    let total = generator.total();
    let states = integrate(&TransposedGenerator(&total), initial, times, Tolerances::default())?;
    let mut table = TrajectoryTable::new(network_blocks(&generator.codec));
    for (&t, p) in times.iter().zip(states) {
        if let Some(bad) = p.iter().find(|&&v| v < -1e-10) {
            return Err(Error::ToleranceNotMet(format!(
                "negative probability {bad} at t = {t}"
            )));
        }
        table.push(t, p.into_iter().map(|v| v.max(0.0)).collect());
    }
    Ok(table)
}

/// Unique stationary network distribution of `Q0 + A0 + R0`.
pub fn network_stationary(generator: &NetworkGenerator) -> Result<Vec<f64>> {
    let total = generator.total();
    let size = generator.size();
    let pi = if size <= DENSE_STATIONARY_LIMIT {
        let dense = DMatrix::from_fn(size, size, |i, j| total.get(i, j));
        stationary_by_replacement(&dense)?
    } else {
        sparse_stationary(&total)?
    };
    let residual = stationary_residual(&total, &pi);
    if residual > 1e-10 {
        return Err(Error::SingularSystem(format!(
            "stationary residual {residual:e} above 1e-10"
        )));
    }
    if pi.iter().any(|&p| p <= 0.0) {
        return Err(Error::SingularSystem(
            "stationary distribution has non-positive entries".into(),
        ));
    }
    Ok(pi)
}

/// `max |(G^T p)_i|`.
pub fn stationary_residual(total: &CsrMatrix, pi: &[f64]) -> f64 {
    let mut out = vec![0.0; pi.len()];
    total.mul_transpose_vec(pi, &mut out);
    out.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Augmented system `[G^T; 1^T] p = [0; 1]` solved by LSQR, with each
/// balance row scaled by its diagonal to even out rates.
fn sparse_stationary(total: &CsrMatrix) -> Result<Vec<f64>> {
    let n = total.rows();
    // column scaling of G^T (rows of G) by the exit rate
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = -total.get(i, i);
            if d > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    // unknown y = p / scale, so G^T p = G^T diag(scale) y
    let apply = |y: &[f64], out: &mut [f64]| {
        let p: Vec<f64> = y.iter().zip(&scale).map(|(a, s)| a * s).collect();
        total.mul_transpose_vec(&p, &mut out[..n]);
        out[n] = p.iter().sum();
    };
    let apply_t = |z: &[f64], out: &mut [f64]| {
        total.mul_vec(&z[..n], out);
        for (o, s) in out.iter_mut().zip(&scale) {
            *o = (*o + z[n]) * s;
        }
    };
    let mut rhs = vec![0.0; n + 1];
    rhs[n] = 1.0;
    let outcome = lsqr(n + 1, n, apply, apply_t, &rhs, 1e-15, 20 * n.max(1000));
    let mut pi: Vec<f64> = outcome
        .solution
        .iter()
        .zip(&scale)
        .map(|(y, s)| y * s)
        .collect();
    let sum: f64 = pi.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::SingularSystem("LSQR produced no normalizable vector".into()));
    }
    pi.iter_mut().for_each(|p| *p /= sum);
    Ok(pi)
}

/// `S_{X:m}`: row `r*M + j` selects configurations with agent `r` in state `j`.
#[derive(Debug, Clone)]
pub struct MarginalizationOperator {
    pub matrix: CsrMatrix,
    codec: StateIndexCodec,
}

impl MarginalizationOperator {
    pub fn codec(&self) -> &StateIndexCodec {
        &self.codec
    }
}

pub fn build_marginalization(codec: &StateIndexCodec) -> MarginalizationOperator {
    let n = codec.agents();
    let m = codec.states();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n * m];
    for i in 0..codec.capacity() {
        let config = codec.decode(i).expect("index within capacity");
        for r in 0..n {
            rows[r * m + config.state_of(r)].push((i, 1.0));
        }
    }
    MarginalizationOperator {
        matrix: CsrMatrix::from_rows(codec.capacity(), rows),
        codec: *codec,
    }
}

/// `S * p` stacked agent-major, state-minor.
pub fn project_marginal(op: &MarginalizationOperator, network: &[f64]) -> Result<Vec<f64>> {
    if network.len() != op.matrix.cols() {
        return Err(Error::DimensionMismatch {
            expected: op.matrix.cols(),
            actual: network.len(),
        });
    }
    let mut out = vec![0.0; op.matrix.rows()];
    op.matrix.mul_vec(network, &mut out);
    Ok(out)
}

/// Project every row of a network trajectory onto per-agent marginals.
pub fn project_table(
    op: &MarginalizationOperator,
    model: &Model,
    network: &TrajectoryTable,
) -> Result<TrajectoryTable> {
    let mut table = TrajectoryTable::new(crate::marginal::agent_blocks(model));
    for (k, &t) in network.times().iter().enumerate() {
        table.push(t, project_marginal(op, network.row(k))?);
    }
    Ok(table)
}
