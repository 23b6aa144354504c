//! Event-driven stochastic simulation of interacting agents.
//!
//! Rates only change when some agent jumps, so between events the process
//! is a CTMC with constant rates and the direct method is exact.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::scenario::NetworkConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub horizon: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Time discarded before occupancy averaging starts.
    pub burn_in: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 200.0,
            replicates: 200,
            seed: 0,
            burn_in: 20.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.burn_in >= 0.0 && self.horizon > self.burn_in && self.horizon.is_finite()) {
            return Err(Error::InvalidSimConfig(format!(
                "need horizon > burn_in >= 0 (horizon {}, burn_in {})",
                self.horizon, self.burn_in
            )));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidSimConfig("replicates must be at least 1".into()));
        }
        Ok(())
    }
}

/// One agent jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Agent position in the scenario.
    pub agent: usize,
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: NetworkConfig,
    pub horizon: f64,
    pub events: Vec<Event>,
}

/// Draw a configuration from the product of the agents' initial distributions.
pub fn sample_initial<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> NetworkConfig {
    let assignment = model
        .scenario()
        .agents
        .iter()
        .map(|a| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (j, &p) in a.initial.iter().enumerate() {
                acc += p;
                if u < acc {
                    return j;
                }
            }
            // rounding slack: pick the last state with positive mass
            a.initial.iter().rposition(|&p| p > 0.0).unwrap_or(0)
        })
        .collect();
    NetworkConfig::new(assignment)
}

/// Simulate until `horizon`; events are strictly increasing in time.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    model: &Model,
    initial: NetworkConfig,
    horizon: f64,
    rng: &mut R,
) -> Trajectory {
    let n = model.num_agents();
    let m = model.num_states();
    let mut config = initial.clone();
    let mut events = Vec::new();
    let mut rates = Vec::with_capacity(n * (m - 1));
    let mut t = 0.0;
    loop {
        rates.clear();
        let mut total = 0.0;
        for r in 0..n {
            let current = config.state_of(r);
            for j in (0..m).filter(|&j| j != current) {
                let rate = model.modulated_rate_at(r, j, &config);
                total += rate;
                rates.push((r, j, total));
            }
        }
        debug_assert!(total > 0.0, "irreducible agents always have an exit rate");
        let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
        t += wait;
        if t > horizon {
            break;
        }
        let pick = rng.random::<f64>() * total;
        let k = rates.partition_point(|&(_, _, cum)| cum <= pick).min(rates.len() - 1);
        let (agent, state, _) = rates[k];
        config.0[agent] = state;
        events.push(Event {
            time: t,
            agent,
            state,
        });
    }
    Trajectory {
        initial,
        horizon,
        events,
    }
}

/// Fraction of `(from, to]` each agent spends in each state, stacked
/// agent-major.
pub fn occupancy(traj: &Trajectory, states: usize, from: f64, to: f64) -> Vec<f64> {
    let n = traj.initial.len();
    let mut time_in = vec![0.0; n * states];
    let mut config = traj.initial.clone();
    let mut last = 0.0f64;
    let credit = |config: &NetworkConfig, start: f64, end: f64, acc: &mut Vec<f64>| {
        let lo = start.max(from);
        let hi = end.min(to);
        if hi > lo {
            for r in 0..n {
                acc[r * states + config.state_of(r)] += hi - lo;
            }
        }
    };
    for ev in &traj.events {
        credit(&config, last, ev.time, &mut time_in);
        config.0[ev.agent] = ev.state;
        last = ev.time;
    }
    credit(&config, last, traj.horizon, &mut time_in);
    for r in 0..n {
        let block = &mut time_in[r * states..(r + 1) * states];
        let span: f64 = block.iter().sum();
        block.iter_mut().for_each(|v| *v /= span);
    }
    time_in
}

/// Running count, mean and centered second moment; merges pairwise.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn single(x: f64) -> Self {
        Self {
            count: 1.0,
            mean: x,
            m2: 0.0,
        }
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }

    fn standard_error(&self) -> f64 {
        if self.count < 2.0 {
            return f64::NAN;
        }
        (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationEstimate {
    pub agents: usize,
    pub states: usize,
    /// Mean occupancy, stacked agent-major.
    pub mean: Vec<f64>,
    /// Standard error across replicates; NaN with a single replicate.
    pub stderr: Vec<f64>,
    pub replicates: usize,
}

impl SimulationEstimate {
    pub fn get(&self, agent: usize, state: usize) -> (f64, f64) {
        let k = agent * self.states + state;
        (self.mean[k], self.stderr[k])
    }
}

/// Time-averaged occupancy over `replicates` independent runs; replicate
/// `i` uses seed `seed + i`.
pub fn estimate_marginals(model: &Model, sim: &SimConfig) -> Result<SimulationEstimate> {
    sim.validate()?;
    let m = model.num_states();
    let per_replicate: Vec<Vec<f64>> = (0..sim.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(sim.seed.wrapping_add(i as u64));
            let initial = sample_initial(model, &mut rng);
            let traj = simulate_trajectory(model, initial, sim.horizon, &mut rng);
            occupancy(&traj, m, sim.burn_in, sim.horizon)
        })
        .collect();

    let width = model.num_agents() * m;
    let moments = per_replicate.iter().fold(vec![Moments::default(); width], |acc, occ| {
        acc.into_iter()
            .zip(occ)
            .map(|(a, &x)| a.merge(Moments::single(x)))
            .collect()
    });
    Ok(SimulationEstimate {
        agents: model.num_agents(),
        states: m,
        mean: moments.iter().map(|mo| mo.mean).collect(),
        stderr: moments.iter().map(Moments::standard_error).collect(),
        replicates: sim.replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::agent_stationary;
    use crate::scenario::{AgentSpec, Group, Scenario, StateSpace};

    fn lone(rates: [[f64; 2]; 2]) -> Scenario {
        Scenario {
            states: StateSpace::new(["a", "b"]),
            agents: vec![AgentSpec {
                id: 1,
                rates: rates.iter().map(|r| r.to_vec()).collect(),
                eta: 1.0,
                initial: vec![0.5, 0.5],
            }],
            groups: vec![Group {
                name: "g".into(),
                members: vec![1],
                lambda: 0.0,
                adjacency: vec![vec![0.0]],
            }],
            repulsions: vec![],
        }
    }

    #[test]
    fn moments_merge_matches_two_pass() {
        let xs = [0.3, 0.9, 0.1, 0.5, 0.75];
        let m = xs.iter().fold(Moments::default(), |a, &x| a.merge(Moments::single(x)));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((m.mean - mean).abs() < 1e-15);
        assert!((m.standard_error() - (var / 5.0).sqrt()).abs() < 1e-15);
        let left = Moments::single(0.3).merge(Moments::single(0.9));
        let right = [0.1, 0.5, 0.75]
            .iter()
            .fold(Moments::default(), |a, &x| a.merge(Moments::single(x)));
        let both = left.merge(right);
        assert!((both.m2 - m.m2).abs() < 1e-15);
    }

    #[test]
    fn occupancy_window() {
        let traj = Trajectory {
            initial: NetworkConfig::new(vec![0]),
            horizon: 10.0,
            events: vec![
                Event {
                    time: 2.0,
                    agent: 0,
                    state: 1,
                },
                Event {
                    time: 6.0,
                    agent: 0,
                    state: 0,
                },
            ],
        };
        let occ = occupancy(&traj, 2, 4.0, 10.0);
        assert!((occ[0] - 4.0 / 6.0).abs() < 1e-15);
        assert!((occ[1] - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn events_strictly_increase() {
        let model = Model::new(lone([[-1.0, 1.0], [2.0, -2.0]])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traj = simulate_trajectory(&model, NetworkConfig::new(vec![0]), 100.0, &mut rng);
        assert!(traj.events.windows(2).all(|w| w[1].time > w[0].time));
        assert!(traj.events.last().unwrap().time <= 100.0);
        // states alternate for a two-state chain
        assert!(traj.events.windows(2).all(|w| w[1].state != w[0].state));
    }

    #[test]
    fn single_agent_occupancy_converges() {
        let scenario = lone([[-1.0, 1.0], [2.0, -2.0]]);
        let model = Model::new(scenario.clone()).unwrap();
        let sim = SimConfig {
            horizon: 500.0,
            replicates: 40,
            seed: 7,
            burn_in: 10.0,
        };
        let est = estimate_marginals(&model, &sim).unwrap();
        let exact = agent_stationary(&scenario.agents[0]).unwrap();
        for j in 0..2 {
            let (mean, se) = est.get(0, j);
            assert!((mean - exact[j]).abs() <= 3.0 * se, "{mean} vs {}", exact[j]);
        }
        assert!((est.mean[0] + est.mean[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn same_seed_same_estimate() {
        let model = Model::new(lone([[-1.0, 1.0], [1.0, -1.0]])).unwrap();
        let sim = SimConfig {
            horizon: 50.0,
            replicates: 8,
            seed: 42,
            burn_in: 1.0,
        };
        let a = estimate_marginals(&model, &sim).unwrap();
        let b = estimate_marginals(&model, &sim).unwrap();
        assert_eq!(a, b);
        for j in 0..2 {
            let (mean, se) = a.get(0, j);
            assert!((mean - 0.5).abs() <= 3.0 * se);
        }
    }

    #[test]
    fn bad_settings() {
        let model = Model::new(lone([[-1.0, 1.0], [1.0, -1.0]])).unwrap();
        for sim in [
            SimConfig {
                horizon: 5.0,
                burn_in: 5.0,
                ..SimConfig::default()
            },
            SimConfig {
                replicates: 0,
                ..SimConfig::default()
            },
            SimConfig {
                burn_in: -1.0,
                ..SimConfig::default()
            },
        ] {
            assert!(matches!(
                estimate_marginals(&model, &sim),
                Err(Error::InvalidSimConfig(_))
            ));
        }
    }
}
