#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use opinion_core::model::Model;
use opinion_core::scenario::NetworkConfig;

/// Literal Kronecker product.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// `sum_r I (x) Q^r (x) I` built from dense Kronecker products.
pub fn dense_kronecker_sum(model: &Model) -> DMatrix<f64> {
    let n = model.num_agents();
    let m = model.num_states();
    let size = m.pow(n as u32);
    let mut total = DMatrix::zeros(size, size);
    for (r, agent) in model.scenario().agents.iter().enumerate() {
        let q = DMatrix::from_fn(m, m, |i, j| agent.rates[i][j]);
        let left = DMatrix::identity(m.pow(r as u32), m.pow(r as u32));
        let right = DMatrix::identity(m.pow((n - 1 - r) as u32), m.pow((n - 1 - r) as u32));
        total += kron(&kron(&left, &q), &right);
    }
    total
}

/// All configurations in lexicographic order, agent 0 most significant,
/// generated by counting rather than through the codec.
pub fn all_configs(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..m).map(move |s| {
                    let mut next = prefix.clone();
                    next.push(s);
                    next
                })
            })
            .collect();
    }
    out
}

/// Dense total generator by direct enumeration of single-agent changes,
/// with rates from the public force API.
pub fn enumerated_generator(model: &Model) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = model.num_agents();
    let m = model.num_states();
    let configs = all_configs(n, m);
    let size = configs.len();
    let index_of = |c: &[usize]| configs.iter().position(|x| x == c).unwrap();
    let mut q0 = DMatrix::zeros(size, size);
    let mut a0 = DMatrix::zeros(size, size);
    let mut r0 = DMatrix::zeros(size, size);
    for (i, digits) in configs.iter().enumerate() {
        let config = NetworkConfig::new(digits.clone());
        for r in 0..n {
            let id = model.agent_id(r);
            for target in 0..m {
                if target == digits[r] {
                    continue;
                }
                let mut next = digits.clone();
                next[r] = target;
                let j = index_of(&next);
                q0[(i, j)] = model.scenario().agents[r].rates[digits[r]][target];
                a0[(i, j)] = model.attractive_force(id, target, &config).unwrap();
                r0[(i, j)] = model.repulsive_force(id, target, &config).unwrap();
            }
        }
        for mat in [&mut q0, &mut a0, &mut r0] {
            let out: f64 = (0..size).filter(|&j| j != i).map(|j| mat[(i, j)]).sum();
            mat[(i, i)] = -out;
        }
    }
    (q0, a0, r0)
}

/// Transient by uniformization: `p(t) = sum_k Poisson(k; L t) (P^T)^k p0`
/// with `P = I + G / L`.
pub fn uniformization(generator: &DMatrix<f64>, p0: &[f64], t: f64) -> Vec<f64> {
    let n = generator.nrows();
    let rate = (0..n).map(|i| -generator[(i, i)]).fold(0.0, f64::max) * 1.02 + 1e-12;
    let step = (DMatrix::identity(n, n) + generator / rate).transpose();
    let lt = rate * t;
    let mut term = DVector::from_column_slice(p0);
    let mut out = DVector::zeros(n);
    // Poisson weights via log-space to avoid under/overflow
    let mut log_weight = -lt;
    let k_max = (lt + 12.0 * lt.sqrt() + 50.0) as usize;
    for k in 0..=k_max {
        if k > 0 {
            term = &step * term;
            log_weight += lt.ln() - (k as f64).ln();
        }
        out += term.clone() * log_weight.exp();
    }
    out.iter().copied().collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
