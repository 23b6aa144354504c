//! Adaptive Dormand–Prince 5(4) integration of autonomous linear and affine
//! probability flows.

use crate::error::{Error, Result};

/// Right-hand side `dx/dt = f(x)` of an autonomous system.
pub trait Flow {
    fn dim(&self) -> usize;
    fn derivative(&self, x: &[f64], dx: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 5_000_000,
        }
    }
}

// Dormand–Prince tableau (nodes are unused: the flows are autonomous).
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `flow` from `x0` at time `times[0]` and return the state at every
/// requested time. `times` must be nondecreasing.
pub fn integrate<F: Flow + ?Sized>(
    flow: &F,
    x0: &[f64],
    times: &[f64],
    tol: Tolerances,
) -> Result<Vec<Vec<f64>>> {
    let n = flow.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::ToleranceNotMet("time grid must be nondecreasing".into()));
    }
    let Some(&t_start) = times.first() else {
        return Ok(Vec::new());
    };

    let mut out = Vec::with_capacity(times.len());
    let mut x = x0.to_vec();
    let mut t = t_start;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut x_new = vec![0.0; n];
    flow.derivative(&x, &mut k[0]);
    let mut h = initial_step(flow, &x, &k[0], tol);
    let mut steps = 0usize;

    for &target in times {
        while t < target {
            if steps >= tol.max_steps {
                return Err(Error::ToleranceNotMet(format!(
                    "exceeded {} steps before t = {target}",
                    tol.max_steps
                )));
            }
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };

            let combos: [(&[f64], usize); 5] = [
                (&[A21], 1),
                (&[A31, A32], 2),
                (&[A41, A42, A43], 3),
                (&[A51, A52, A53, A54], 4),
                (&[A61, A62, A63, A64, A65], 5),
            ];
            for (coeffs, dest) in combos {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (s, c) in coeffs.iter().enumerate() {
                        acc += c * k[s][i];
                    }
                    stage[i] = x[i] + step * acc;
                }
                flow.derivative(&stage, &mut k[dest]);
            }
            for i in 0..n {
                x_new[i] = x[i]
                    + step
                        * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            flow.derivative(&x_new, &mut k[6]);

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let scale = tol.atol + tol.rtol * x[i].abs().max(x_new[i].abs());
                err_sq += (e / scale) * (e / scale);
            }
            let err = (err_sq / n as f64).sqrt();
            steps += 1;

            if !err.is_finite() {
                return Err(Error::ToleranceNotMet("non-finite error estimate".into()));
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut x, &mut x_new);
                k.swap(0, 6);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // a truncated final step says nothing about the natural step size
            if !(last && err <= 1.0) {
                h = step * factor;
            }
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::ToleranceNotMet(format!("step size underflow at t = {t}")));
            }
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Starting step from Hairer, Nørsett & Wanner (II.4).
fn initial_step<F: Flow + ?Sized>(flow: &F, x: &[f64], dx: &[f64], tol: Tolerances) -> f64 {
    let n = x.len().max(1) as f64;
    let scale = |i: usize| tol.atol + tol.rtol * x[i].abs();
    let d0 = (x.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (dx.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let probe: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + h0 * b).collect();
    let mut dx1 = vec![0.0; x.len()];
    flow.derivative(&probe, &mut dx1);
    let d2 = (dx1
        .iter()
        .zip(dx)
        .enumerate()
        .map(|(i, (a, b))| ((a - b) / scale(i)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
